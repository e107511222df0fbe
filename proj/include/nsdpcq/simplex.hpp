#pragma once

#include "nsdpcq/symcore.hpp"

namespace nsdpcq {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase simplex with Bland's rule for
///   minimize c^T x  subject to  A x = b,  x >= 0.
/// Throws NumericError if the pivot guard is exceeded.
LpResult solve_lp(const Matrix& a, const Vector& b, const Vector& c, int max_pivots = 100000);

}  // namespace nsdpcq
