#include "nsdpcq/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "nsdpcq/detail/jacobi.hpp"
#include "nsdpcq/detail/parallel.hpp"
#include "nsdpcq/detail/rotations.hpp"
#include "nsdpcq/errors.hpp"

namespace nsdpcq {

namespace {

using LD = long double;
using ML = detail::MatrixX<LD>;
using VL = detail::VectorX<LD>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct PenaltyEval {
  LD phi = 0;
  LD phi_err = 0;  // rounding bound on phi, dominated by rho |Pi| |G| eps
  VL grad;
  LD scale = 1;  // 1 + |grad f + x - a| + |DG^*[Y]| + |eq part|
  ML y;          // rho * proj_psd(-G)
  detail::JacobiResult<LD> spectrum;
};

PenaltyEval evaluate_penalty(const NsdpProblem& p, const VL& x, const VL& a, LD rho, bool want_grad) {
  PenaltyEval out;
  const ML g = p.constraint.evaluate<LD>(x.data());
  out.spectrum = detail::jacobi_eigen<LD>(g, 200);
  const auto m = g.rows();
  ML pi = ML::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const LD lam = -out.spectrum.values(i);
    if (lam > 0) pi += lam * out.spectrum.vectors.col(i) * out.spectrum.vectors.col(i).transpose();
  }
  out.y = rho * pi;
  LD phi = p.objective.eval_as(x.data()) + LD(0.5) * (x - a).squaredNorm() + LD(0.5) * rho * pi.squaredNorm();
  std::vector<LD> hv(p.equalities.size());
  for (std::size_t q = 0; q < p.equalities.size(); ++q) {
    hv[q] = p.equalities[q].eval_as(x.data());
    phi += LD(0.5) * rho * hv[q] * hv[q];
  }
  out.phi = phi;
  const LD eps = std::numeric_limits<LD>::epsilon();
  out.phi_err = 16 * eps * (std::abs(phi) + rho * pi.norm() * (pi.norm() + g.cwiseAbs().maxCoeff()));
  if (!want_grad) return out;
  VL gf = VL::Zero(p.n);
  p.objective.accumulate_gradient(x.data(), LD(1), gf.data());
  gf += x - a;
  VL gadj = VL::Zero(p.n);
  for (const auto& [ij, poly] : p.constraint.entries()) {
    const LD w = (ij.first == ij.second ? LD(1) : LD(2)) * out.y(ij.first, ij.second);
    if (w != 0) poly.accumulate_gradient(x.data(), w, gadj.data());
  }
  VL geq = VL::Zero(p.n);
  for (std::size_t q = 0; q < p.equalities.size(); ++q)
    if (hv[q] != 0) p.equalities[q].accumulate_gradient(x.data(), rho * hv[q], geq.data());
  out.grad = gf - gadj + geq;
  out.scale = 1 + gf.norm() + gadj.norm() + geq.norm();
  return out;
}

VL to_ld(const Vector& v) { return v.cast<LD>(); }

}  // namespace

void PenaltyConfig::validate(int n) const {
  if (!(rho0 > 0)) throw PreconditionError("penalty: rho0 must be positive");
  if (!(rho_mult > 1)) throw PreconditionError("penalty: rho_mult must exceed 1");
  if (!(inner_tol > 0)) throw PreconditionError("penalty: inner_tol must be positive");
  if (outer_iters < 1 || inner_max_iters < 1) throw PreconditionError("penalty: iteration limits must be positive");
  if (anchor.size() != n) throw DimensionError("penalty: anchor has the wrong length");
}

double penalty_value(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho) {
  return static_cast<double>(evaluate_penalty(p, to_ld(x), to_ld(anchor), rho, false).phi);
}

Vector penalty_gradient(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho) {
  return evaluate_penalty(p, to_ld(x), to_ld(anchor), rho, true).grad.cast<double>();
}

InnerResult inner_minimize(const NsdpProblem& p, const PenaltyConfig& cfg, double rho, const Vector& x_start) {
  cfg.validate(p.n);
  constexpr int kMemory = 10;
  constexpr LD kArmijo = 1e-4L;
  constexpr LD kWolfeDelta = 0.1L, kWolfeSigma = 0.9L;
  const VL a = to_ld(cfg.anchor);
  const LD r = rho;
  VL x = to_ld(x_start);
  PenaltyEval cur = evaluate_penalty(p, x, a, r, true);
  std::deque<VL> ss, ys;
  InnerResult res;
  int it = 0;
  for (; it < cfg.inner_max_iters; ++it) {
    if (cur.grad.norm() <= LD(cfg.inner_tol) * cur.scale) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    VL q = cur.grad;
    std::vector<LD> alpha(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      const auto u = static_cast<std::size_t>(i);
      alpha[u] = ss[u].dot(q) / ys[u].dot(ss[u]);
      q -= alpha[u] * ys[u];
    }
    LD gamma = ss.empty() ? LD(1) / std::max(LD(1), cur.grad.norm()) : ss.back().dot(ys.back()) / ys.back().squaredNorm();
    VL d = gamma * q;
    for (std::size_t u = 0; u < ss.size(); ++u) {
      const LD beta = ys[u].dot(d) / ys[u].dot(ss[u]);
      d += (alpha[u] - beta) * ss[u];
    }
    d = -d;
    LD slope = cur.grad.dot(d);
    if (!(slope < 0)) {
      ss.clear();
      ys.clear();
      d = -cur.grad / std::max(LD(1), cur.grad.norm());
      slope = cur.grad.dot(d);
    }
    LD t = 1;
    bool accepted = false;
    PenaltyEval next;
    VL xn;
    for (int h = 0; h < 80; ++h, t *= LD(0.5)) {
      xn = x + t * d;
      next = evaluate_penalty(p, xn, a, r, false);
      const LD noise = next.phi_err + cur.phi_err;
      // Armijo only decides while the predicted decrease exceeds the rounding
      // of phi; below that, approximate Wolfe on the directional derivative.
      if (-t * slope > noise) {
        if (next.phi <= cur.phi + kArmijo * t * slope) {
          accepted = true;
          break;
        }
      } else if (next.phi <= cur.phi + noise) {
        next = evaluate_penalty(p, xn, a, r, true);
        const LD dd = next.grad.dot(d);
        if (dd >= kWolfeSigma * slope && dd <= (2 * kWolfeDelta - 1) * slope) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      if (!ss.empty()) {
        ss.clear();
        ys.clear();
        continue;
      }
      break;  // stalled at the resolution of phi
    }
    if (next.grad.size() == 0) next = evaluate_penalty(p, xn, a, r, true);
    const VL s = xn - x, yv = next.grad - cur.grad;
    if (s.dot(yv) > std::numeric_limits<LD>::epsilon() * s.norm() * yv.norm()) {
      ss.push_back(s);
      ys.push_back(yv);
      if (static_cast<int>(ss.size()) > kMemory) {
        ss.pop_front();
        ys.pop_front();
      }
    }
    x = xn;
    cur = std::move(next);
  }
  res.x = x.cast<double>();
  res.iters = it;
  res.grad_norm = static_cast<double>(cur.grad.norm());
  return res;
}

PenaltyIterate make_iterate(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho, int k) {
  const PenaltyEval e = evaluate_penalty(p, to_ld(x), to_ld(anchor), rho, true);
  PenaltyIterate it;
  it.k = k;
  it.rho = rho;
  it.x = x;
  it.y = SymMat(Matrix(e.y.cast<double>()));
  it.eigenvalues = e.spectrum.values.cast<double>();
  it.eigenvectors = e.spectrum.vectors.cast<double>();
  it.equality_multipliers = Vector(static_cast<Eigen::Index>(p.equalities.size()));
  for (std::size_t q = 0; q < p.equalities.size(); ++q)
    it.equality_multipliers(static_cast<Eigen::Index>(q)) = rho * p.equalities[q].eval(x);
  it.stationarity_residual = static_cast<double>(e.grad.norm());
  it.multiplier_norm = it.y.norm_fro();
  return it;
}

PenaltyTrace run_penalty(const NsdpProblem& p, const PenaltyConfig& cfg, const std::optional<Vector>& x_start) {
  cfg.validate(p.n);
  PenaltyTrace tr;
  Vector x = x_start ? *x_start : cfg.anchor;
  Vector prev = x;
  double rho = cfg.rho0;
  for (int k = 0; k < cfg.outer_iters; ++k, rho *= cfg.rho_mult) {
    // x(rho) ~ x* + d / rho predicts the next solution from the last step.
    Vector start = x;
    if (k >= 2) {
      const Vector extra = x + (x - prev) / cfg.rho_mult;
      if (penalty_value(p, extra, cfg.anchor, rho) < penalty_value(p, x, cfg.anchor, rho)) start = extra;
    }
    const InnerResult ir = inner_minimize(p, cfg, rho, start);
    prev = x;
    x = ir.x;
    PenaltyIterate it = make_iterate(p, x, cfg.anchor, rho, k);
    it.converged = ir.converged;
    it.inner_iters = ir.iters;
    tr.iterates.push_back(std::move(it));
  }
  tr.converged_point = x;
  tr.divergence_suspected = multiplier_divergence(tr);
  if (tr.divergence_suspected) tr.note = "multiplier divergence suspected";
  return tr;
}

bool multiplier_divergence(const PenaltyTrace& t) {
  const std::size_t n = t.iterates.size();
  if (n < 3) return false;
  const PenaltyIterate& last = t.iterates[n - 1];
  const double base = t.iterates[n - 3].multiplier_norm;
  const bool small = last.converged || last.stationarity_residual <= 1e-4 * (1.0 + last.multiplier_norm);
  return small && last.multiplier_norm > 1e-8 && last.multiplier_norm >= 2.0 * base;
}

PenaltyTrace path_trace(const NsdpProblem& p, const Vector& xbar, const Vector& d, int steps) {
  if (d.size() != p.n || xbar.size() != p.n) throw DimensionError("path_trace: wrong vector length");
  const Vector u = d.normalized();
  PenaltyTrace tr;
  for (int k = 0; k < steps; ++k) {
    const Vector x = xbar + std::pow(10.0, -(k + 1)) * u;
    const SymMat g = eval_G(p, x);
    const Spectral s = eigh(g);
    PenaltyIterate it;
    it.k = k;
    it.x = x;
    it.y = SymMat(p.m());
    it.eigenvalues = s.values;
    it.eigenvectors = s.vectors;
    it.equality_multipliers = Vector::Zero(static_cast<Eigen::Index>(p.equalities.size()));
    tr.iterates.push_back(std::move(it));
  }
  tr.converged_point = tr.iterates.back().x;
  tr.note = "straight path";
  return tr;
}

EigbasisSequence extract_eigbasis_sequence(const PenaltyTrace& trace, int rank) {
  EigbasisSequence out;
  // m - r = 0: nothing to track.
  if (!trace.iterates.empty() && rank >= trace.iterates.front().eigenvalues.size()) return out;
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const PenaltyIterate& it = trace.iterates[i];
    const auto m = it.eigenvalues.size();
    const int k = static_cast<int>(m) - rank;
    if (k <= 0) continue;
    if (rank > 0) {
      const double tk = kRankTol * (1.0 + it.eigenvalues.cwiseAbs().maxCoeff());
      if (!(it.eigenvalues(rank - 1) > 2.0 * tk)) continue;
    }
    Matrix e = it.eigenvectors.rightCols(k);
    Vector lam = it.eigenvalues.tail(k);
    if (!out.bases.empty()) {
      // Greedy matching by |dot| against the previous aligned block.
      const Matrix& prev = out.bases.back();
      Matrix al(e.rows(), k);
      Vector lv(k);
      std::vector<bool> used(static_cast<std::size_t>(k), false);
      for (int c = 0; c < k; ++c) {
        int best = -1;
        double bd = -1.0;
        for (int j = 0; j < k; ++j) {
          if (used[static_cast<std::size_t>(j)]) continue;
          const double dd = std::abs(prev.col(c).dot(e.col(j)));
          if (dd > bd) {
            bd = dd;
            best = j;
          }
        }
        used[static_cast<std::size_t>(best)] = true;
        const double sg = prev.col(c).dot(e.col(best)) < 0 ? -1.0 : 1.0;
        al.col(c) = sg * e.col(best);
        lv(c) = lam(best);
      }
      e = al;
      lam = lv;
    }
    out.index.push_back(static_cast<int>(i));
    out.bases.push_back(e);
    out.values.push_back(lam);
  }
  if (out.bases.size() < 3) throw PreconditionError("eigenbasis sequence: fewer than three usable iterates");
  return out;
}

namespace {

// Partition of aligned columns into clusters that stay within
// tau = 1e-6 (1 + |G(x^k)|) at every one of the last three usable iterates.
std::vector<std::vector<int>> tail_clusters(const PenaltyTrace& trace, const EigbasisSequence& seq) {
  const int k = static_cast<int>(seq.values.back().size());
  std::vector<int> label(static_cast<std::size_t>(k), 0);
  const std::size_t n = seq.values.size();
  for (std::size_t t = n - 3; t < n; ++t) {
    const Vector& lam = seq.values[t];
    const PenaltyIterate& it = trace.iterates[static_cast<std::size_t>(seq.index[t])];
    const double tau = 1e-6 * (1.0 + it.eigenvalues.cwiseAbs().maxCoeff());
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lam(a) < lam(b); });
    std::vector<int> cl(static_cast<std::size_t>(k));
    int c = 0;
    for (int i = 0; i < k; ++i) {
      if (i > 0 && lam(order[static_cast<std::size_t>(i)]) - lam(order[static_cast<std::size_t>(i - 1)]) >= tau) ++c;
      cl[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = c;
    }
    // Meet of partitions: combine labels.
    for (int i = 0; i < k; ++i) label[static_cast<std::size_t>(i)] = label[static_cast<std::size_t>(i)] * (k + 1) + cl[static_cast<std::size_t>(i)];
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < k; ++i) groups[label[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [l, g] : groups) out.push_back(g);
  return out;
}

enum class ProbeMode { Li, Pli };

struct FamilyScore {
  double value = 0.0;  // sigma_min (Li) or LP margin (Pli)
  bool pass = false;
  LiResult li;
  PliResult pli;
  Matrix family;
};

FamilyScore score_family(const NsdpProblem& p, const Vector& xbar, const Matrix& e, ProbeMode mode, double tol) {
  FamilyScore s;
  const Matrix v = diagonal_vij(p, xbar, e);
  const Matrix w = equality_jacobian_t(p, xbar);
  s.family.resize(p.n, v.cols() + w.cols());
  s.family << v, w;
  if (mode == ProbeMode::Li) {
    s.li = li_test(s.family, tol);
    s.value = s.li.sigma_min;
    s.pass = s.li.independent;
  } else {
    s.pli = pli_test(v, w);
    s.value = s.pli.margin;
    s.pass = s.pli.pos_independent;
  }
  return s;
}

SequenceProbeResult probe_one(const NsdpProblem& p, const Vector& xbar, const KernelBasis& kb,
                              const PenaltyTrace& trace, ProbeMode mode, int rotations, std::uint64_t seed,
                              double tol) {
  SequenceProbeResult r;
  if ((trace.converged_point - xbar).norm() > 1e-6)
    throw PreconditionError("probe: trace does not converge to the point (distance " +
                            fmt((trace.converged_point - xbar).norm()) + ")");
  const EigbasisSequence seq = extract_eigbasis_sequence(trace, kb.rank_r);
  const int k = kb.kernel_dim();
  // Project the tail basis onto Ker G(xbar) and take the polar factor.
  const Matrix c0 = kb.cols.transpose() * seq.bases.back();
  Eigen::JacobiSVD<Matrix> svd(c0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix ebar = kb.cols * (svd.matrixU() * svd.matrixV().transpose());
  const auto clusters = tail_clusters(trace, seq);
  r.exhaustive = std::all_of(clusters.begin(), clusters.end(), [](const auto& c) { return c.size() == 1; });
  {
    std::ostringstream os;
    os << "tail clusters:";
    for (const auto& c : clusters) os << " " << c.size();
    r.rotation_search_log.push_back(os.str());
  }

  Matrix best_c = Matrix::Identity(k, k);
  FamilyScore best = score_family(p, xbar, ebar, mode, tol);
  if (!best.pass && !r.exhaustive) {
    std::mt19937_64 rng(seed);
    const int random_rounds = rotations * 3 / 5;
    const int givens_steps = rotations - random_rounds;
    for (int t = 0; t < random_rounds && !best.pass; ++t) {
      Matrix c = Matrix::Identity(k, k);
      for (const auto& cl : clusters) {
        if (cl.size() < 2) continue;
        const Matrix h = haar_orthogonal(static_cast<int>(cl.size()), rng);
        for (std::size_t a = 0; a < cl.size(); ++a)
          for (std::size_t b = 0; b < cl.size(); ++b)
            c(cl[a], cl[b]) = h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
      FamilyScore s = score_family(p, xbar, ebar * c, mode, tol);
      if (s.value > best.value) {
        best = std::move(s);
        best_c = c;
      }
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& cl : clusters)
      for (std::size_t a = 0; a < cl.size(); ++a)
        for (std::size_t b = a + 1; b < cl.size(); ++b) pairs.emplace_back(cl[a], cl[b]);
    for (int step = 0; step < givens_steps && !pairs.empty() && !best.pass; ++step) {
      const auto [a, b] = pairs[static_cast<std::size_t>(step) % pairs.size()];
      double val = 0.0;
      const double th = detail::minimize_angle(
          [&](double t) {
            Matrix c = best_c;
            detail::apply_givens(c, a, b, t);
            return -score_family(p, xbar, ebar * c, mode, tol).value;
          },
          16, val);
      if (-val > best.value) {
        detail::apply_givens(best_c, a, b, th);
        best = score_family(p, xbar, ebar * best_c, mode, tol);
      }
    }
    r.rotation_search_log.push_back("rotation search best " + std::string(mode == ProbeMode::Li ? "sigma_min " : "margin ") +
                                    fmt(best.value));
  }
  r.limit_basis.cols = ebar * best_c;
  r.limit_basis.complement = kb.complement;
  r.limit_basis.rank_r = kb.rank_r;
  r.limit_basis.provenance = Provenance::SequenceLimit;
  r.family = best.family;
  if (mode == ProbeMode::Li) {
    r.sigma_min = best.value;
    r.li_verdict = best.pass ? Status::HoldsSampled : (r.exhaustive ? Status::Fails : Status::Undetermined);
  } else {
    r.margin = best.value;
    r.pli_verdict = best.pass ? Status::HoldsSampled : (r.exhaustive ? Status::Fails : Status::Undetermined);
  }
  return r;
}

ProbeOutcome run_probe(const NsdpProblem& p, const Vector& xbar, const std::vector<PenaltyTrace>& traces,
                       const ProbeOptions& opt, ProbeMode mode) {
  ProbeOutcome out;
  CqVerdict& v = out.verdict;
  // Every supplied trace must end at the point, whichever path decides the verdict.
  for (std::size_t i = 0; i < traces.size(); ++i)
    if ((traces[i].converged_point - xbar).norm() > 1e-6)
      throw PreconditionError("probe: trace " + std::to_string(i) + " does not converge to the point (distance " +
                              fmt((traces[i].converged_point - xbar).norm()) + ")");
  const KernelBasis kb = feasible_kernel(p, xbar, opt.tol_rank);
  const int k = kb.kernel_dim();
  const int q = static_cast<int>(p.equalities.size());
  if (k == 0) {
    const LiResult li = li_test(equality_jacobian_t(p, xbar), opt.tol_rank);
    v.status = (q == 0 || li.independent) ? Status::HoldsCertified : Status::Fails;
    v.log.push_back("Ker G(x) = {0}");
    return out;
  }
  if (mode == ProbeMode::Li && p.n < k + q) {
    v.status = Status::Fails;
    Witness w;
    w.kind = "kernel_dimension";
    w.basis = kb.cols;
    w.residual = k + q - p.n;
    w.note = "every limit basis gives k + q vectors in R^n";
    v.witness = w;
    v.log.push_back("dimension bound: n = " + std::to_string(p.n) + " < m - r + q = " + std::to_string(k + q));
    return out;
  }

  // Structurally diagonal constraints reduce to LICQ / MFCQ on active gradients.
  if (is_structurally_diagonal(p.constraint)) {
    const SymMat g = eval_G(p, xbar);
    const double scale = std::max(1.0, g.dense().diagonal().maxCoeff());
    std::vector<int> active;
    for (int i = 0; i < p.m(); ++i)
      if (std::abs(g(i, i)) <= opt.tol_rank * scale) active.push_back(i);
    if (static_cast<int>(active.size()) == k) {
      Matrix e = Matrix::Zero(p.m(), k);
      for (int a = 0; a < k; ++a) e(active[static_cast<std::size_t>(a)], a) = 1.0;
      std::vector<TermLabel> labels;
      for (int a = 0; a < k; ++a) labels.emplace_back(a, a);
      for (int qq = 0; qq < q; ++qq) labels.emplace_back(kEqualityRow, qq);
      const FamilyScore s = score_family(p, xbar, e, mode, opt.tol_rank);
      Witness w;
      w.basis = e;
      w.labels = labels;
      if (mode == ProbeMode::Pli) {
        v.log.push_back("structurally diagonal constraint: MFCQ on the active gradients, margin " + fmt(s.value));
        v.status = s.pass ? Status::HoldsCertified : Status::Fails;
        w.kind = s.pass ? "pli_basis" : "pli_dependence";
        if (!s.pass) {
          w.coefficients.resize(k + q);
          w.coefficients << s.pli.alpha, s.pli.beta;
        }
        w.residual = s.value;
        v.witness = w;
        return out;
      }
      v.log.push_back("structurally diagonal constraint: LICQ on the active gradients, sigma_min " + fmt(s.value));
      if (!s.pass) {
        v.status = Status::Fails;
        w.kind = "li_dependence";
        w.coefficients = s.li.coeffs;
        w.residual = (s.family * s.li.coeffs).norm();
        v.witness = w;
        return out;
      }
    }
  }

  if (traces.empty()) {
    v.status = Status::Undetermined;
    v.reason = "no trace converging to the point";
    v.log.push_back(v.reason);
    return out;
  }
  out.per_trace.resize(traces.size());
  std::vector<std::string> errors(traces.size());
  detail::parallel_for(static_cast<int>(traces.size()), opt.jobs, [&](int i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out.per_trace[u] = probe_one(p, xbar, kb, traces[u], mode, opt.rotations,
                                   opt.seed * 0x9E3779B97F4A7C15ULL + u + 1, opt.tol_rank);
    } catch (const PreconditionError& e) {
      errors[u] = e.what();
    }
  });
  int passed = 0, usable = 0;
  std::optional<std::size_t> failing;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!errors[i].empty()) {
      v.log.push_back("trace " + std::to_string(i) + " skipped: " + errors[i]);
      continue;
    }
    ++usable;
    const Status st = mode == ProbeMode::Li ? out.per_trace[i].li_verdict : out.per_trace[i].pli_verdict;
    if (st == Status::HoldsSampled) ++passed;
    if (st == Status::Fails && !failing) failing = i;
  }
  v.samples = usable;
  v.log.push_back(std::to_string(passed) + " of " + std::to_string(usable) + " traces pass");
  if (failing) {
    const SequenceProbeResult& r = out.per_trace[*failing];
    v.status = Status::Fails;
    Witness w;
    w.basis = r.limit_basis.cols;
    for (int a = 0; a < k; ++a) w.labels.emplace_back(a, a);
    for (int qq = 0; qq < q; ++qq) w.labels.emplace_back(kEqualityRow, qq);
    const FamilyScore s = score_family(p, xbar, w.basis, mode, opt.tol_rank);
    if (mode == ProbeMode::Li) {
      w.kind = "li_dependence";
      w.coefficients = s.li.coeffs;
      w.residual = (s.family * s.li.coeffs).norm();
    } else {
      w.kind = "pli_dependence";
      w.coefficients.resize(k + q);
      w.coefficients << s.pli.alpha, s.pli.beta;
      w.residual = s.value;
    }
    w.note = "limit basis of trace " + std::to_string(*failing) + "; every tail eigenvalue is simple";
    v.witness = w;
    return out;
  }
  if (usable > 0 && passed == usable) {
    v.status = Status::HoldsSampled;
    return out;
  }
  v.status = Status::Undetermined;
  v.reason = usable ? "some traces fail only after a non-exhaustive rotation search" : "no usable trace";
  v.log.push_back(v.reason);
  return out;
}

}  // namespace

std::vector<PenaltyTrace> probe_traces(const NsdpProblem& p, const Vector& xbar, const ProbeOptions& opt) {
  std::vector<PenaltyTrace> out;
  const KernelBasis kb = feasible_kernel(p, xbar, opt.tol_rank);
  if (kb.kernel_dim() == 0) return out;
  for (int l = 0; l < p.n; ++l)
    for (double sg : {1.0, -1.0}) out.push_back(path_trace(p, xbar, sg * Vector::Unit(p.n, l)));
  std::mt19937_64 rng(opt.seed ^ 0x5EEDULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n_pen = opt.traces / 2;
  for (int t = 0; t < opt.traces - n_pen; ++t) {
    Vector d(p.n);
    for (int l = 0; l < p.n; ++l) d(l) = gauss(rng);
    out.push_back(path_trace(p, xbar, d));
  }
  // Linear objectives c = DG^*[E Yt E^T] make xbar a KKT point, so the
  // penalty iterates approach it along the method's own path.
  const int k = kb.kernel_dim();
  std::vector<PenaltyTrace> pen(static_cast<std::size_t>(n_pen));
  std::vector<bool> keep(static_cast<std::size_t>(n_pen), false);
  std::vector<Matrix> yts;
  for (int t = 0; t < n_pen; ++t) {
    Matrix a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a(i, j) = gauss(rng);
    Matrix yt = a * a.transpose() + 0.1 * Matrix::Identity(k, k);
    yts.push_back(0.5 * yt / yt.norm());
  }
  detail::parallel_for(n_pen, opt.jobs, [&](int t) {
    const auto u = static_cast<std::size_t>(t);
    NsdpProblem q = p;
    const Vector c = adjoint_apply(p, xbar, SymMat(Matrix(kb.cols * yts[u] * kb.cols.transpose())));
    std::vector<Term> terms;
    for (int l = 0; l < p.n; ++l) {
      Exponents e(static_cast<std::size_t>(p.n), 0);
      e[static_cast<std::size_t>(l)] = 1;
      terms.push_back(Term{c(l), e});
    }
    q.objective = Poly(p.n, terms);
    PenaltyConfig cfg;
    cfg.anchor = xbar;
    cfg.outer_iters = 9;
    cfg.inner_max_iters = 2000;
    try {
      PenaltyTrace tr = run_penalty(q, cfg);
      tr.note = "penalty trace";
      if ((tr.converged_point - xbar).norm() <= 1e-6) {
        pen[u] = std::move(tr);
        keep[u] = true;
      }
    } catch (const NsdpError&) {
    }
  });
  for (int t = 0; t < n_pen; ++t)
    if (keep[static_cast<std::size_t>(t)]) out.push_back(std::move(pen[static_cast<std::size_t>(t)]));
  return out;
}

ProbeOutcome probe_weak_ndg(const NsdpProblem& p, const Vector& xbar, const std::vector<PenaltyTrace>& traces,
                            const ProbeOptions& opt) {
  return run_probe(p, xbar, traces, opt, ProbeMode::Li);
}

ProbeOutcome probe_weak_robinson(const NsdpProblem& p, const Vector& xbar, const std::vector<PenaltyTrace>& traces,
                                 const ProbeOptions& opt) {
  return run_probe(p, xbar, traces, opt, ProbeMode::Pli);
}

}  // namespace nsdpcq
