#pragma once

#include <cmath>
#include <numbers>

#include "nsdpcq/symcore.hpp"

namespace nsdpcq::detail {

// C <- C * R(a, b, theta), a rotation in the plane of columns a and b.
inline void apply_givens(Matrix& c, int a, int b, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  const Vector ca = c.col(a), cb = c.col(b);
  c.col(a) = cs * ca - sn * cb;
  c.col(b) = sn * ca + cs * cb;
}

// Minimizes f(theta) over [0, pi/2) by a coarse grid followed by golden
// section on the best bracket. Returns the best angle found; f(0) is always
// among the candidates so the result never increases f.
template <class F>
double minimize_angle(F&& f, int grid, double& best_value) {
  const double period = std::numbers::pi / 2;
  double best_t = 0.0;
  best_value = f(0.0);
  const double h = period / grid;
  for (int g = 1; g < grid; ++g) {
    const double v = f(g * h);
    if (v < best_value) {
      best_value = v;
      best_t = g * h;
    }
  }
  double lo = best_t - h, hi = best_t + h;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 20; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f(x2);
    }
  }
  if (f1 < best_value) {
    best_value = f1;
    best_t = x1;
  }
  if (f2 < best_value) {
    best_value = f2;
    best_t = x2;
  }
  return best_t;
}

}  // namespace nsdpcq::detail
