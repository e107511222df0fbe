#pragma once

#include <stdexcept>
#include <string>

namespace nsdpcq {

class NsdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sizes of vectors/matrices/bases that do not agree.
class DimensionError : public NsdpError {
 public:
  using NsdpError::NsdpError;
};

// The analysed point violates G(x) >= 0 beyond tolerance.
class NotFeasibleError : public NsdpError {
 public:
  NotFeasibleError(const std::string& what, double min_eigenvalue)
      : NsdpError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Jacobi iteration did not reach the off-diagonal tolerance.
class EighError : public NsdpError {
 public:
  EighError(const std::string& what, double residual)
      : NsdpError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Generic numerical breakdown (singular systems, LP guard, ...).
class NumericError : public NsdpError {
 public:
  using NsdpError::NsdpError;
};

// A caller-supplied argument violates a stated precondition.
class PreconditionError : public NsdpError {
 public:
  using NsdpError::NsdpError;
};

class ParseError : public NsdpError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset = 0)
      : NsdpError(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace nsdpcq
