#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsdpcq/detail/jacobi.hpp"
#include "nsdpcq/symcore.hpp"

namespace nsdpcq {

inline constexpr int kMaxVars = 64;
inline constexpr int kMaxDim = 50;
inline constexpr int kMaxDegree = 8;
/// Coefficients below this magnitude are dropped on canonicalization.
inline constexpr double kCoefDrop = 1e-14;

using Exponents = std::vector<int>;

struct Term {
  double coef = 0.0;
  Exponents exps;
};

/// Sparse multivariate polynomial in canonical form: terms sorted by exponent
/// vector, no duplicate exponents, no (near-)zero coefficients.
class Poly {
 public:
  Poly() = default;
  explicit Poly(int n_vars) : n_(n_vars) {}
  Poly(int n_vars, std::vector<Term> terms);

  static Poly constant(int n_vars, double c);
  static Poly variable(int n_vars, int index, double coef = 1.0);

  int n_vars() const { return n_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  double max_abs_coef() const;

  double eval(std::span<const double> x) const;
  double eval(const Vector& x) const { return eval(std::span<const double>(x.data(), x.size())); }

  template <class S>
  S eval_as(const S* x) const;
  /// Gradient value at x without building derivative polynomials.
  template <class S>
  void accumulate_gradient(const S* x, S weight, S* grad) const;

  Poly derivative(int var) const;
  std::vector<Poly> gradient() const;
  Vector eval_gradient(const Vector& x) const;

  /// Copy with every |coef| <= threshold removed.
  Poly pruned(double threshold) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator-() const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;
  friend Poly operator*(double s, const Poly& p) { return p * s; }
  bool operator==(const Poly& o) const;

 private:
  void canonicalize();
  int n_ = 0;
  std::vector<Term> terms_;
};

double poly_eval(const Poly& p, const Vector& x);
std::vector<Poly> poly_grad(const Poly& p);
/// True iff p is identically zero (canonical term list empty).
bool structural_zero(const Poly& p);

/// Symmetric matrix of polynomials; only the upper triangle is stored and
/// absent entries are structural zeros.
class MatrixPoly {
 public:
  MatrixPoly() = default;
  MatrixPoly(int dim, int n_vars);

  int dim() const { return dim_; }
  int n_vars() const { return n_; }

  /// Sets entry (i,j) (any order); zero polynomials erase the entry.
  void set(int i, int j, Poly p);
  const Poly& entry(int i, int j) const;
  bool has_entry(int i, int j) const;
  const std::map<std::pair<int, int>, Poly>& entries() const { return entries_; }

  /// Declared block sizes; entries spanning two blocks are rejected.
  void set_blocks(std::vector<int> sizes);
  const std::optional<std::vector<int>>& blocks() const { return blocks_; }

  int degree() const;

  /// Dense symmetric value at x (entries absent from the map are zero).
  template <class S>
  detail::MatrixX<S> evaluate(const S* x) const;

 private:
  int dim_ = 0;
  int n_ = 0;
  std::map<std::pair<int, int>, Poly> entries_;
  std::optional<std::vector<int>> blocks_;
  Poly zero_;
};

struct NsdpProblem {
  std::string name;
  int n = 0;
  Poly objective;
  MatrixPoly constraint;
  std::vector<Poly> equalities;

  int m() const { return constraint.dim(); }
  /// Throws DimensionError when sizes disagree or exceed the supported limits.
  void validate() const;
};

SymMat eval_G(const NsdpProblem& p, const Vector& x);
/// D_{x_l} G(x) for l = 0..n-1.
std::vector<SymMat> eval_partials(const NsdpProblem& p, const Vector& x);
/// DG(x)^*[M] = (<D_{x_l} G(x), M>)_l.
Vector adjoint_apply(const NsdpProblem& p, const Vector& x, const SymMat& m);
/// Columns are the gradients of the equality constraints at x (n x q).
Matrix equality_jacobian_t(const NsdpProblem& p, const Vector& x);
Vector equality_values(const NsdpProblem& p, const Vector& x);

using Partition = std::vector<std::vector<int>>;

/// Finest partition of {0..m-1} whose cross entries are all structural zeros.
/// Returns nullopt when the constraint is a single dense block.
std::optional<Partition> detect_blocks(const NsdpProblem& p);
bool is_structurally_diagonal(const MatrixPoly& g);

/// Monomial coefficient matrices: G(x) = sum_t A_t x^{e_t}.
struct MonomialMatrices {
  std::vector<Exponents> exps;
  std::vector<Matrix> coefs;  // each m x m symmetric
};
MonomialMatrices monomial_matrices(const MatrixPoly& g);

/// V^T G(x) V as a polynomial matrix; coefficients with magnitude at most
/// `prune` are dropped.
MatrixPoly congruence(const MatrixPoly& g, const Matrix& v, double prune);

/// Principal submatrix on the given index subset (in the given order).
MatrixPoly principal_submatrix(const MatrixPoly& g, const std::vector<int>& idx);

template <class S>
S Poly::eval_as(const S* x) const {
  S total = 0;
  for (const Term& t : terms_) {
    S v = static_cast<S>(t.coef);
    for (int i = 0; i < n_; ++i)
      for (int e = 0; e < t.exps[static_cast<std::size_t>(i)]; ++e) v *= x[i];
    total += v;
  }
  return total;
}

template <class S>
void Poly::accumulate_gradient(const S* x, S weight, S* grad) const {
  for (const Term& t : terms_) {
    for (int l = 0; l < n_; ++l) {
      const int el = t.exps[static_cast<std::size_t>(l)];
      if (el == 0) continue;
      S v = weight * static_cast<S>(t.coef) * static_cast<S>(el);
      for (int i = 0; i < n_; ++i) {
        const int e = t.exps[static_cast<std::size_t>(i)] - (i == l ? 1 : 0);
        for (int k = 0; k < e; ++k) v *= x[i];
      }
      grad[l] += v;
    }
  }
}

template <class S>
detail::MatrixX<S> MatrixPoly::evaluate(const S* x) const {
  detail::MatrixX<S> out = detail::MatrixX<S>::Zero(dim_, dim_);
  for (const auto& [ij, p] : entries_) {
    const S v = p.eval_as(x);
    out(ij.first, ij.second) = v;
    out(ij.second, ij.first) = v;
  }
  return out;
}

}  // namespace nsdpcq
