#include "nsdpcq/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nsdpcq/errors.hpp"

namespace nsdpcq {

namespace {

struct Tableau {
  Matrix t;                // rows 0..m-1 constraints, row m objective; last column rhs
  std::vector<int> basis;  // basic variable per constraint row
  int n_vars = 0;          // structural + artificial columns
  double tol = 1e-11;

  int rows() const { return static_cast<int>(basis.size()); }
  int rhs() const { return n_vars; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t(i, c);
      if (f != 0.0) t.row(i) -= f * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  // Objective row holds reduced costs; minimization, so entering needs < -tol.
  LpStatus run(const std::vector<bool>& allowed, int& pivots, int max_pivots) {
    const int m = rows();
    while (true) {
      int enter = -1;
      for (int j = 0; j < n_vars; ++j)
        if (allowed[static_cast<std::size_t>(j)] && t(m, j) < -tol) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::Optimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t(i, enter) <= tol) continue;
        const double ratio = t(i, rhs()) / t(i, enter);
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      if (++pivots > max_pivots) throw NumericError("simplex: pivot guard exceeded");
    }
  }

  void load_objective(const Vector& cost) {
    const int m = rows();
    t.row(m).setZero();
    t.row(m).head(cost.size()) = cost.transpose();
    for (int i = 0; i < m; ++i) {
      const double cb = cost(basis[static_cast<std::size_t>(i)]);
      if (cb != 0.0) t.row(m) -= cb * t.row(i);
    }
  }
};

}  // namespace

LpResult solve_lp(const Matrix& a, const Vector& b, const Vector& c, int max_pivots) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != m || c.size() != n) throw DimensionError("solve_lp: shape mismatch");

  Tableau tab;
  tab.n_vars = n + m;
  tab.t = Matrix::Zero(m + 1, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  const double scale = std::max({1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0,
                                 b.size() ? b.cwiseAbs().maxCoeff() : 0.0});
  tab.tol = 1e-11 * scale;
  for (int i = 0; i < m; ++i) {
    const double sgn = b(i) < 0 ? -1.0 : 1.0;
    tab.t.row(i).head(n) = sgn * a.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, tab.rhs()) = sgn * b(i);
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }

  LpResult res;
  Vector phase1 = Vector::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.load_objective(phase1);
  std::vector<bool> allowed(static_cast<std::size_t>(n + m), true);
  tab.run(allowed, res.pivots, max_pivots);
  const double infeas = -tab.t(m, tab.rhs());
  if (infeas > 1e-9 * scale) {
    res.status = LpStatus::Infeasible;
    res.objective = infeas;
    return res;
  }

  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    for (int j = 0; j < n; ++j)
      if (std::abs(tab.t(i, j)) > tab.tol) {
        tab.pivot(i, j);
        break;
      }
  }
  for (int j = n; j < n + m; ++j) allowed[static_cast<std::size_t>(j)] = false;

  Vector cost = Vector::Zero(n + m);
  cost.head(n) = c;
  tab.load_objective(cost);
  const LpStatus st = tab.run(allowed, res.pivots, max_pivots);
  res.status = st;
  res.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int v = tab.basis[static_cast<std::size_t>(i)];
    if (v < n) res.x(v) = std::max(0.0, tab.t(i, tab.rhs()));
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace nsdpcq
