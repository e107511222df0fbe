#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace nsdpcq::detail {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct JacobiResult {
  VectorX<Scalar> values;   // non-increasing
  MatrixX<Scalar> vectors;  // column i pairs with values[i]
  Scalar off_norm = 0;      // final off-diagonal Frobenius norm
  Scalar scale = 0;         // Frobenius norm of the input
  int sweeps = 0;
  bool converged = false;
};

// Cyclic Jacobi with threshold sweeps. Pivots are visited in row-major order
// of the strict upper triangle, so the output is a deterministic function of
// the input. Works for any real floating type (double and long double are
// used in this project).
template <class Scalar>
JacobiResult<Scalar> jacobi_eigen(MatrixX<Scalar> a, int max_sweeps) {
  using std::abs;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  JacobiResult<Scalar> out;
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  out.scale = a.norm();

  auto off_norm = [&]() {
    Scalar s = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2 * a(p, q) * a(p, q);
    return sqrt(s);
  };

  Scalar off = off_norm();
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off <= eps * out.scale || off == Scalar(0)) break;

    // Early sweeps skip small pivots; later sweeps rotate everything that is
    // not negligible against both diagonal entries.
    Scalar threshold = 0;
    if (sweep < 3) {
      Scalar sum = 0;
      for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) sum += abs(a(p, q));
      threshold = Scalar(0.2) * sum / Scalar(n * n);
    }

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar g = Scalar(100) * abs(apq);
        if (sweep > 3 && abs(a(p, p)) + g == abs(a(p, p)) &&
            abs(a(q, q)) + g == abs(a(q, q))) {
          a(p, q) = a(q, p) = 0;
          continue;
        }
        if (abs(apq) <= threshold) continue;

        const Scalar h = a(q, q) - a(p, p);
        Scalar t;
        if (abs(h) + g == abs(h)) {
          t = apq / h;
        } else {
          const Scalar theta = h / (2 * apq);
          t = Scalar(1) / (abs(theta) + sqrt(theta * theta + 1));
          if (theta < 0) t = -t;
        }
        const Scalar c = Scalar(1) / sqrt(t * t + 1);
        const Scalar s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = off_norm();
  }

  out.off_norm = off;
  out.sweeps = sweep;
  out.converged = off <= eps * out.scale * Scalar(16) || off == Scalar(0);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i) > a(j, j);
  });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace nsdpcq::detail
