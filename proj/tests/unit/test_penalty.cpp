#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/builders.hpp"
#include "../support/oracles.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/penalty.hpp"

using namespace nsdpcq;

namespace {

PenaltyConfig config_at(const Vector& anchor) {
  PenaltyConfig c;
  c.anchor = anchor;
  return c;
}

NsdpProblem diag3_sum() {
  NsdpProblem p = build::diag3();
  p.objective = build::x(3, 0) + build::x(3, 1) + build::x(3, 2);
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  PenaltyConfig c = config_at(build::zeros(2));
  CHECK_NOTHROW(c.validate(2));
  CHECK_THROWS_AS(c.validate(3), DimensionError);
  c.rho_mult = 1.0;
  CHECK_THROWS_AS(c.validate(2), PreconditionError);
  c = config_at(build::zeros(2));
  c.rho0 = 0;
  CHECK_THROWS_AS(c.validate(2), PreconditionError);
}

TEST_CASE("penalty gradient agrees with central differences") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const NsdpProblem base = build::random_instance(rng);
    NsdpProblem p = base;
    p.objective = build::x(p.n, 0) * build::x(p.n, 0) + build::x(p.n, p.n - 1, 0.5);
    if (trial % 3 == 0) p.equalities.push_back(build::x(p.n, 0) - build::k(p.n, 0.1));
    Vector at(p.n), anchor(p.n);
    for (int i = 0; i < p.n; ++i) at(i) = u(rng), anchor(i) = u(rng);
    const double rho = std::pow(10.0, u(rng) * 3);
    const Vector g = penalty_gradient(p, at, anchor, rho);
    const Vector fd =
        oracle::fd_gradient([&](const Vector& z) { return penalty_value(p, z, anchor, rho); }, at, 1e-6);
    CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("inner solve of the facial example at rho = 10 matches a grid search") {
  const NsdpProblem p = build::facial();
  const double rho = 10;
  double best = 1e300, bx = 0, by = 0;
  for (int i = -1000; i <= 1000; ++i)
    for (int j = -1000; j <= 1000; ++j) {
      const double x1 = i * 1e-3, x2 = j * 1e-3;
      const double v = x2 + 0.5 * (x1 * x1 + x2 * x2) + 0.5 * rho * oracle::neg_part_sq2(x1, x2, 0.0);
      if (v < best) best = v, bx = x1, by = x2;
    }
  const PenaltyConfig cfg = config_at(build::zeros(2));
  const InnerResult r = inner_minimize(p, cfg, rho, build::zeros(2));
  CHECK(r.converged);
  CHECK(r.x(1) < 0);
  CHECK(r.x(1) > -0.5);
  CHECK(std::abs(r.x(0) - bx) < 2e-3);
  CHECK(std::abs(r.x(1) - by) < 2e-3);
  CHECK(penalty_value(p, r.x, cfg.anchor, rho) <= best + 1e-9);
}

TEST_CASE("inner solve where the penalty vanishes") {
  MatrixPoly g(2, 2);
  g.set(0, 0, build::k(2, 1.0) + build::x(2, 0));
  g.set(1, 1, build::k(2, 1.0) + build::x(2, 1));
  NsdpProblem p = build::problem("pd", g);
  p.objective = (build::x(2, 0) - build::k(2, 0.1)) * (build::x(2, 0) - build::k(2, 0.1)) + build::x(2, 1) * build::x(2, 1);
  const PenaltyConfig cfg = config_at(build::zeros(2));
  const InnerResult r = inner_minimize(p, cfg, 100, build::zeros(2));
  // argmin (x1 - 0.1)^2 + x2^2 + |x|^2 / 2 is (0.2 / 3, 0).
  CHECK(r.x(0) == doctest::Approx(0.2 / 3).epsilon(1e-8));
  CHECK(std::abs(r.x(1)) < 1e-10);

  MatrixPoly s(1, 1);
  s.set(0, 0, build::x(1, 0));
  const NsdpProblem m1 = build::problem("m1", s);
  for (double rho : {1.0, 1e3, 1e8}) CHECK(inner_minimize(m1, config_at(build::zeros(1)), rho, build::zeros(1)).x(0) == 0.0);
}

TEST_CASE("run_penalty with a positive definite constraint keeps Y = 0") {
  MatrixPoly g(2, 1);
  g.set(0, 0, build::k(1, 2.0));
  g.set(1, 1, build::k(1, 1.0) + build::x(1, 0));
  const NsdpProblem p = build::problem("pd", g);
  const PenaltyTrace t = run_penalty(p, config_at(build::zeros(1)));
  CHECK(t.iterates.size() == 12);
  for (const PenaltyIterate& it : t.iterates) {
    CHECK(it.multiplier_norm == 0.0);
    CHECK(it.x.norm() == 0.0);
  }
  CHECK_FALSE(t.divergence_suspected);
}

TEST_CASE("separable closed form for diag(x) with f = x1 + x2 + x3") {
  // Per coordinate: min x + x^2/2 + (rho/2)[-x]_+^2 gives x = -1/(1+rho), Y = rho/(1+rho).
  const PenaltyTrace t = run_penalty(diag3_sum(), config_at(build::zeros(3)));
  for (const PenaltyIterate& it : t.iterates) {
    const double xs = -1.0 / (1.0 + it.rho), ys = it.rho / (1.0 + it.rho);
    CHECK((it.x - Vector::Constant(3, xs)).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, std::abs(xs)) + 1e-12);
    CHECK((it.y.dense() - ys * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK((t.iterates.back().y.dense() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(t.iterates.back().stationarity_residual < 1e-6);
  CHECK_FALSE(t.divergence_suspected);
}

TEST_CASE("multipliers diverge on the facial example") {
  const PenaltyTrace t = run_penalty(build::facial(), config_at(build::zeros(2)));
  REQUIRE(t.iterates.size() == 12);
  CHECK(t.divergence_suspected);
  CHECK(multiplier_divergence(t));
  CHECK(t.note.find("divergence") != std::string::npos);
  for (std::size_t k = 2; k < t.iterates.size(); ++k)
    CHECK(t.iterates[k].multiplier_norm > 1.5 * t.iterates[k - 2].multiplier_norm);
}

TEST_CASE("multiplier identity, complementarity and alpha recovery along a trace") {
  const NsdpProblem p = build::facial();
  const PenaltyTrace t = run_penalty(p, config_at(build::zeros(2)));
  for (const PenaltyIterate& it : t.iterates) {
    const SymMat g = eval_G(p, it.x);
    const SymMat want = it.rho * proj_psd(-g);
    CHECK((it.y - want).norm_inf() <= 1e-8 * (1 + it.y.norm_inf()));
    CHECK(oracle::eig(it.y.dense()).values.minCoeff() >= -1e-8 * (1 + it.y.norm_fro()));
    CHECK(std::abs(inner(it.y, proj_psd(g))) <= 1e-8 * (1 + it.y.norm_fro()));
    Matrix rec = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i) {
      const double a = std::max(-it.rho * it.eigenvalues(i), 0.0);
      rec += a * it.eigenvectors.col(i) * it.eigenvectors.col(i).transpose();
    }
    CHECK((rec - it.y.dense()).cwiseAbs().maxCoeff() <= 1e-8 * (1 + it.y.norm_inf()));
  }
}

TEST_CASE("eigenbasis sequence along an axis path of diag(x1,x2,x3)") {
  Vector d(3);
  d << 1, 0, 0;
  const PenaltyTrace t = path_trace(build::diag3(), build::zeros(3), d);
  const EigbasisSequence s = extract_eigbasis_sequence(t, 0);
  REQUIRE(s.bases.size() == 7);
  for (const Matrix& e : s.bases) {
    // The two vanishing eigenvalues span {e2, e3}; the first row stays zero.
    CHECK(e.cols() == 3);
    CHECK(e.block(0, 1, 1, 2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((e.col(0).cwiseAbs() - Vector::Unit(3, 0)).norm() < 1e-12);
  }
  CHECK(s.bases.front().isApprox(s.bases.back()));
}

TEST_CASE("eigenbasis sequence of [[x1,x2],[x2,x1]] follows the closed-form eigenvectors") {
  Vector d(2);
  d << 0.3, 1.0;
  const PenaltyTrace t = path_trace(build::offdiag(), build::zeros(2), d);
  const EigbasisSequence s = extract_eigbasis_sequence(t, 0);
  const double h = 1.0 / std::sqrt(2.0);
  for (const Matrix& e : s.bases) {
    // Eigenvalues x1 + x2 > x1 - x2: columns (1,1)/sqrt2 then (1,-1)/sqrt2 up to sign.
    CHECK(std::abs(std::abs(e(0, 0)) - h) < 1e-12);
    CHECK(e(0, 0) * e(1, 0) > 0);
    CHECK(e(0, 1) * e(1, 1) < 0);
  }
  for (std::size_t k = 1; k < s.bases.size(); ++k) CHECK((s.bases[k] - s.bases[k - 1]).norm() < 1e-12);
}

TEST_CASE("eigenbasis sequence edge cases") {
  MatrixPoly g(1, 1);
  g.set(0, 0, build::k(1, 1.0) + build::x(1, 0));
  const NsdpProblem p = build::problem("pd", g);
  const PenaltyTrace t = path_trace(p, build::zeros(1), Vector::Ones(1));
  CHECK(extract_eigbasis_sequence(t, 1).bases.empty());
  const PenaltyTrace short_trace = path_trace(build::diag3(), build::zeros(3), Vector::Ones(3), 2);
  CHECK_THROWS_AS(extract_eigbasis_sequence(short_trace, 0), PreconditionError);
}

TEST_CASE("weak-ndg probe on diag(x1,x2,x3)") {
  ProbeOptions opt;
  const std::vector<PenaltyTrace> traces = probe_traces(build::diag3(), build::zeros(3), opt);
  CHECK(traces.size() >= 8);
  const ProbeOutcome o = probe_weak_ndg(build::diag3(), build::zeros(3), traces, opt);
  CHECK(o.verdict.status == Status::HoldsSampled);
  CHECK(o.verdict.samples >= 8);
  for (const SequenceProbeResult& r : o.per_trace) CHECK(r.sigma_min > 1e-8);
}

TEST_CASE("weak-ndg probe on [[x1,x2],[x2,x1]] recovers the rotated family") {
  ProbeOptions opt;
  const std::vector<PenaltyTrace> traces = probe_traces(build::offdiag(), build::zeros(2), opt);
  const ProbeOutcome o = probe_weak_ndg(build::offdiag(), build::zeros(2), traces, opt);
  CHECK(o.verdict.status == Status::HoldsSampled);
  REQUIRE_FALSE(o.per_trace.empty());
  int simple = 0;
  for (const SequenceProbeResult& r : o.per_trace) {
    REQUIRE(r.family.cols() == 2);
    CHECK(oracle::independent(r.family));
    if (!r.exhaustive) continue;  // a repeated tail eigenvalue leaves the basis free
    ++simple;
    // Simple tail eigenvalues pin the basis: up to order the family is {(1,-1), (1,1)}.
    Matrix f = r.family;
    if (f(1, 0) > f(1, 1)) f.col(0).swap(f.col(1));
    CHECK(std::abs(f(0, 0) - 1) < 1e-10);
    CHECK(std::abs(f(1, 0) + 1) < 1e-10);
    CHECK(std::abs(f(0, 1) - 1) < 1e-10);
    CHECK(std::abs(f(1, 1) - 1) < 1e-10);
  }
  CHECK(simple >= 1);
}

TEST_CASE("weak probes on diag(x,x)") {
  ProbeOptions opt;
  const std::vector<PenaltyTrace> traces = probe_traces(build::wrob(), build::zeros(1), opt);
  const ProbeOutcome w = probe_weak_ndg(build::wrob(), build::zeros(1), traces, opt);
  CHECK(w.verdict.status == Status::Fails);
  REQUIRE(w.verdict.witness.has_value());
  CHECK(w.verdict.witness->kind == "kernel_dimension");
  const ProbeOutcome r = probe_weak_robinson(build::wrob(), build::zeros(1), traces, opt);
  CHECK(r.verdict.status == Status::HoldsCertified);
}

TEST_CASE("probes reject traces that do not reach the point") {
  Vector d(2);
  d << 1, 0.5;
  PenaltyTrace t = path_trace(build::offdiag(), build::zeros(2), d);
  Vector far(2);
  far << 0.5, 0;
  t.converged_point = far;
  CHECK_THROWS_AS(probe_weak_ndg(build::offdiag(), build::zeros(2), {t}), PreconditionError);
}

TEST_CASE("inner solves stay accurate up to rho = 1e12 on a rotated face") {
  // G = R diag(1, 0) R^T + x1 I with f = c . x, c = DG(0)^*[e e^T] for the kernel vector e.
  const double t = 0.5;
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const Matrix a0 = r * Vector(Eigen::Vector2d(1, 0)).asDiagonal() * r.transpose();
  Matrix a1 = Matrix::Identity(2, 2), a2(2, 2);
  a2 << 0.3, 1, 1, -0.7;
  NsdpProblem p = build::problem("face", build::affine_matrix(a0, {a1, a2}));
  const Vector e = r.col(1);
  const Vector c = adjoint_apply(p, build::zeros(2), SymMat(Matrix(e * e.transpose())));
  p.objective = build::x(2, 0, c(0)) + build::x(2, 1, c(1));
  PenaltyConfig cfg = config_at(build::zeros(2));
  cfg.outer_iters = 13;
  const PenaltyTrace tr = run_penalty(p, cfg);
  REQUIRE(tr.iterates.back().rho == doctest::Approx(1e12));
  for (const PenaltyIterate& it : tr.iterates) {
    CAPTURE(it.rho);
    CHECK(it.stationarity_residual <= 1e-6);
    CHECK(it.inner_iters < cfg.inner_max_iters);
  }
  CHECK(tr.iterates.back().multiplier_norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(tr.divergence_suspected);
}
