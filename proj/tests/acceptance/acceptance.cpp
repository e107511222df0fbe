// Acceptance run: one PASS/FAIL line per criterion, indented detail lines
// below it. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../support/builders.hpp"
#include "../support/oracles.hpp"
#include "nsdpcq/corpus.hpp"
#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/penalty.hpp"
#include "nsdpcq/report.hpp"
#include "nsdpcq/sparse.hpp"
#include "nsdpcq/symcore.hpp"

using namespace nsdpcq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects named checks; a suite passes when every check does.
struct Suite {
  std::string name;
  int checks = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
  bool ok() const { return failures.empty(); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string vec_str(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + ")";
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

KernelBasis basis_of(const Matrix& cols) {
  KernelBasis kb;
  kb.cols = cols;
  return kb;
}

bool poly_is(const Poly& p, const Poly& want, double tol = 1e-10) { return (p - want).pruned(tol).is_zero(); }

SymMat random_sym(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = nd(rng);
  return SymMat(Matrix(0.5 * (a + a.transpose())));
}

/// Structurally diagonal constraint diag(g_1 . x, ..., g_m . x) with some
/// entries shifted to 2 + x_1 (inactive). Returns the active gradients too.
struct DiagInstance {
  NsdpProblem problem;
  Matrix active;  // n x #active
};

DiagInstance random_diagonal(std::mt19937_64& rng) {
  const int m = build::uniform_int(rng, 1, 4), n = build::uniform_int(rng, 1, 3);
  MatrixPoly g(m, n);
  std::vector<Vector> act;
  for (int i = 0; i < m; ++i) {
    if (build::uniform_int(rng, 0, 4) == 0) {
      g.set(i, i, build::k(n, 2.0) + build::x(n, 0));
      continue;
    }
    Vector grad(n);
    Poly p(n);
    for (int l = 0; l < n; ++l) {
      grad(l) = build::small_int(rng, 0.4);
      p = p + build::x(n, l, grad(l));
    }
    if (p.is_zero()) {
      grad.setZero();
      grad(0) = 1;
      p = build::x(n, 0);
    }
    g.set(i, i, p);
    act.push_back(grad);
  }
  DiagInstance out{build::problem("diag", g), Matrix(n, static_cast<Eigen::Index>(act.size()))};
  for (std::size_t c = 0; c < act.size(); ++c) out.active.col(static_cast<Eigen::Index>(c)) = act[c];
  return out;
}

// ---------------------------------------------------------------- A1

void a1_corpus(Suite& s) {
  double worst = 0;
  for (const CorpusEntry& e : corpus()) {
    const CorpusOutcome o = run_corpus_entry(e);
    worst = std::max(worst, o.millis);
    s.check(o.pass, e.id + " verdicts");
    for (const std::string& m : o.mismatches) s.note(e.id + ": " + m);
    s.check(o.millis < 5000, e.id + " took " + fmt(o.millis) + " ms");
  }
  s.note(std::to_string(corpus().size()) + " corpus entries, slowest " + fmt(worst) + " ms");
}

void a1_diag3(Suite& s) {
  const CorpusEntry& e = corpus_entry("diag3");
  const AnalysisReport r = analyze(e.problem, e.point);
  s.check(r.verdicts.at("nondegeneracy").status == Status::Fails, "diag3 nondegeneracy Fails");
  const CqVerdict& w = r.verdicts.at("weak_ndg_probe");
  s.check(w.status == Status::HoldsSampled, "diag3 weak-ndg HoldsSampled");
  s.check(w.samples >= 8, "diag3 weak-ndg over >= 8 traces (got " + std::to_string(w.samples) + ")");
  s.check(r.verdicts.at("robinson").status == Status::HoldsCertified, "diag3 Robinson HoldsCertified");
  s.check(r.verdicts.at("sparse_ndg").status == Status::HoldsCertified, "diag3 sparse-ndg HoldsCertified");

  // The probe's trace set contains both axis paths along every coordinate.
  const std::vector<PenaltyTrace> traces = probe_traces(e.problem, e.point, ProbeOptions{});
  for (int l = 0; l < 3; ++l)
    for (double sg : {1.0, -1.0}) {
      const Vector want = 0.1 * sg * Vector::Unit(3, l);
      const bool found = std::any_of(traces.begin(), traces.end(), [&](const PenaltyTrace& t) {
        return !t.iterates.empty() && (t.iterates.front().x - want).norm() < 1e-14;
      });
      s.check(found, "diag3 axis path " + std::to_string(l) + (sg > 0 ? "+" : "-"));
    }

  const double h = 1.0 / std::sqrt(2.0);
  Matrix eb(3, 3);
  eb << 1, 0, 0, 0, -h, h, 0, h, h;
  const Matrix d = diagonal_vij(e.problem, e.point, eb);
  const Vector half = vec({0, 0.5, 0.5});
  s.check((d.col(1) - half).cwiseAbs().maxCoeff() <= 1e-10, "diag3 v_22 = " + vec_str(d.col(1)));
  s.check((d.col(2) - half).cwiseAbs().maxCoeff() <= 1e-10, "diag3 v_33 = " + vec_str(d.col(2)));
}

void a1_facial(Suite& s) {
  const NsdpProblem p = build::facial();
  const Vector z = build::zeros(2);
  s.check(check_sparse_ndg(p, z).status == Status::Fails, "facial sparse-ndg Fails");
  s.check(!score_sparse_basis(p, z, Matrix::Identity(2, 2)).item2, "facial identity basis misses item 2");

  PenaltyConfig cfg;
  cfg.anchor = z;
  const PenaltyTrace t = run_penalty(p, cfg);
  const std::size_t k = t.iterates.size();
  s.check(k >= 3, "facial trace length");
  if (k >= 3) {
    const double ratio = t.iterates[k - 1].multiplier_norm / t.iterates[k - 3].multiplier_norm;
    s.check(ratio >= 2.0, "facial |Y^K| / |Y^(K-2)| = " + fmt(ratio));
    s.note("facial |Y| ratio over the last three outer iterates " + fmt(ratio));
  }
  s.check(t.divergence_suspected && multiplier_divergence(t), "facial divergence flagged");

  const FacialReduction fr = facial_reduce(p, z);
  const KktCertificate kkt = estimate_multiplier(fr.reduced_problem, z);
  s.check(fr.reduced_problem.m() == 1, "facial reduced to m = 1");
  s.check(kkt.stationarity_residual <= 1e-8, "facial reduced KKT residual " + fmt(kkt.stationarity_residual));
  s.check(kkt.multiplier_psd, "facial reduced multiplier PSD");
}

void a1_wrob(Suite& s) {
  const NsdpProblem p = build::wrob();
  const Vector z = build::zeros(1);
  s.check(check_sparse_ndg(p, z).status == Status::Fails, "wrob sparse-ndg Fails");
  s.check(check_robinson(p, z).status == Status::HoldsCertified, "wrob Robinson HoldsCertified");
  const ProbeOptions opt;
  const ProbeOutcome o = probe_weak_ndg(p, z, probe_traces(p, z, opt), opt);
  s.check(o.verdict.status == Status::Fails, "wrob weak-ndg Fails");
  s.check(o.verdict.witness && o.verdict.witness->kind == "kernel_dimension", "wrob weak-ndg certified by n < m - r");
}

void a1_offdiag(Suite& s) {
  const NsdpProblem p = build::offdiag();
  const Vector z = build::zeros(2);

  const ProbeOptions opt;
  const ProbeOutcome o = probe_weak_ndg(p, z, probe_traces(p, z, opt), opt);
  s.check(o.verdict.status == Status::HoldsSampled, "offdiag weak-ndg passes");
  int exhaustive = 0;
  for (const SequenceProbeResult& r : o.per_trace) {
    if (!r.exhaustive || r.family.cols() != 2) continue;
    ++exhaustive;
    Matrix f = r.family;
    if (f(1, 0) > f(1, 1)) f.col(0).swap(f.col(1));
    const double err = std::max((f.col(0) - vec({1, -1})).cwiseAbs().maxCoeff(),
                                (f.col(1) - vec({1, 1})).cwiseAbs().maxCoeff());
    s.check(err <= 1e-10, "offdiag probe family off by " + fmt(err));
  }
  s.check(exhaustive >= 1, "offdiag has a trace with simple tail eigenvalues");
  s.note("offdiag probe family {(1,-1), (1,1)} on " + std::to_string(exhaustive) + " pinned traces");

  const CqVerdict sp = check_sparse_ndg(p, z);
  s.check(sp.status == Status::HoldsCertified, "offdiag sparse-ndg HoldsCertified");
  if (sp.witness) {
    const ReducedMap hm = hat_map(p, z, basis_of(sp.witness->basis));
    const bool diag = hm.poly && !hm.poly->has_entry(0, 1);
    const Poly minus = build::x(2, 0) - build::x(2, 1), plus = build::x(2, 0) + build::x(2, 1);
    bool shape = false;
    if (diag) {
      const Poly &a = hm.poly->entry(0, 0), &b = hm.poly->entry(1, 1);
      shape = (poly_is(a, minus) && poly_is(b, plus)) || (poly_is(a, plus) && poly_is(b, minus));
    }
    s.check(shape, "offdiag hat map is diag(x1 - x2, x1 + x2)");
  }

  s.check(check_forsgren(p, z, Matrix::Identity(2, 2)).status == Status::Fails, "offdiag Forsgren (U = I) Fails");

  const CqVerdict nd = check_nondegeneracy(p, z);
  s.check(nd.status == Status::Fails, "offdiag nondegeneracy Fails");
  s.check(nd.witness.has_value(), "offdiag nondegeneracy witness");
  if (nd.witness) {
    s.check(recheck_witness(p, z, *nd.witness).ok, "offdiag nondegeneracy witness rechecks");
    const Matrix b = nd.witness->basis;
    s.check((b.cwiseAbs() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12, "offdiag witness basis is the identity");
    const VijFamily f = build_vij(p, z, basis_of(b));
    s.check((f.vec(0, 0) - vec({1, 0})).cwiseAbs().maxCoeff() <= 1e-10, "offdiag v_11 = " + vec_str(f.vec(0, 0)));
    s.check((f.vec(1, 1) - vec({1, 0})).cwiseAbs().maxCoeff() <= 1e-10, "offdiag v_22 = " + vec_str(f.vec(1, 1)));
  }
}

// ---------------------------------------------------------------- A2

void a2_moreau(Suite& s) {
  double worst = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const SymMat a = random_sym(1 + seed % 8, rng);
    const SymMat pp = proj_psd(a), pn = proj_psd(-a);
    const double err = std::max({(pp - pn - a).norm_inf(), std::abs(inner(pp, pn)), (proj_psd(pp) - pp).norm_inf(),
                                 (pp.dense() - oracle::proj_psd(a.dense())).cwiseAbs().maxCoeff()});
    worst = std::max(worst, err);
    s.check(err <= 1e-8, "seed " + std::to_string(seed) + " error " + fmt(err));
  }
  s.note("worst error " + fmt(worst));
}

void a2_double_formula(Suite& s) {
  double worst = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const NsdpProblem p = build::random_instance(rng);
    const Vector at = 0.2 * Vector::Random(p.n);
    const Matrix e = oracle::random_orthogonal(p.m(), rng).leftCols(1 + seed % p.m());
    // G has degree <= 2, so central differences with unit step are exact up to rounding.
    const std::vector<Matrix> dg = build::fd_partials(p, at, 1.0);
    const VijFamily f = build_vij(p, at, basis_of(e));
    for (int c = 0; c < f.size(); ++c) {
      const auto [i, j] = f.labels[static_cast<std::size_t>(c)];
      Vector entry(p.n);
      for (int l = 0; l < p.n; ++l) entry(l) = e.col(i).dot(dg[static_cast<std::size_t>(l)] * e.col(j));
      const Vector adj = adjoint_apply(p, at, SymMat::sym_outer(e.col(i), e.col(j)));
      const double err = std::max((f.vecs.col(c) - entry).cwiseAbs().maxCoeff(), (f.vecs.col(c) - adj).cwiseAbs().maxCoeff());
      worst = std::max(worst, err);
      s.check(err <= 1e-10, "seed " + std::to_string(seed) + " v_ij error " + fmt(err));
    }
  }
  s.note("worst error " + fmt(worst));
}

void a2_gradient(Suite& s) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    NsdpProblem p = build::random_instance(rng);
    p.objective = build::x(p.n, 0) * build::x(p.n, 0) + build::x(p.n, p.n - 1, 0.5);
    if (trial % 3 == 0) p.equalities.push_back(build::x(p.n, 0) - build::k(p.n, 0.1));
    Vector at(p.n), anchor(p.n);
    for (int i = 0; i < p.n; ++i) at(i) = u(rng), anchor(i) = u(rng);
    const double rho = std::pow(10.0, 3 * u(rng));
    const Vector g = penalty_gradient(p, at, anchor, rho);
    const Vector fd =
        oracle::fd_gradient([&](const Vector& x) { return penalty_value(p, x, anchor, rho); }, at, 1e-6);
    const double rel = (g - fd).norm() / std::max(1.0, fd.norm());
    worst = std::max(worst, rel);
    s.check(rel <= 1e-4, "case " + std::to_string(trial) + " relative error " + fmt(rel));
  }
  s.note("worst relative error " + fmt(worst));
}

void a2_basis_invariance(Suite& s) {
  std::mt19937_64 rng(77);
  int instances = 0;
  while (instances < 100) {
    const NsdpProblem p = build::random_instance(rng);
    const Vector z = build::zeros(p.n);
    const KernelBasis kb = feasible_kernel(p, z);
    if (kb.kernel_dim() == 0) continue;
    ++instances;
    const bool base = holds(check_nondegeneracy(p, z).status);
    for (int t = 0; t < 20; ++t) {
      const KernelBasis r = rotate_basis(kb, haar_orthogonal(kb.kernel_dim(), rng));
      const bool rot = li_test(build_vij(p, z, r).vecs).independent;
      const bool ref = oracle::independent(build_vij(p, z, r).vecs);
      s.check(rot == base && ref == base, "instance " + std::to_string(instances) + " rotation " + std::to_string(t));
    }
  }
  s.note("100 instances x 20 rotations");
}

void a2_diagonal(Suite& s) {
  std::mt19937_64 rng(88);
  int licq = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const DiagInstance d = random_diagonal(rng);
    const NsdpProblem& p = d.problem;
    const Vector z = build::zeros(p.n);
    const bool li = oracle::independent(d.active);
    const bool mfcq = d.active.cols() == 0 || oracle::simplex_min_norm(d.active) > 1e-6;
    licq += li;
    const std::string tag = "instance " + std::to_string(trial);
    const CqVerdict sp = check_sparse_ndg(p, z);
    s.check(sp.status != Status::Undetermined && holds(sp.status) == li, tag + " sparse-ndg vs LICQ");
    const ProbeOptions opt;
    const ProbeOutcome w = probe_weak_ndg(p, z, probe_traces(p, z, opt), opt);
    s.check(w.verdict.status != Status::Undetermined && holds(w.verdict.status) == li, tag + " weak-ndg vs LICQ");
    const CqVerdict rb = check_robinson(p, z);
    s.check(rb.status != Status::Undetermined && holds(rb.status) == mfcq, tag + " Robinson vs MFCQ");
  }
  s.note(std::to_string(licq) + " of 200 satisfy LICQ");
}

/// Two random blocks on shared variables, assembled block-diagonally.
struct BlockInstance {
  std::vector<Matrix> a0;                // per block
  std::vector<std::vector<Matrix>> a;    // per block, per variable
  int n = 0;
};

BlockInstance random_blocks(std::mt19937_64& rng) {
  BlockInstance b;
  b.n = build::uniform_int(rng, 1, 4);
  const double p_zero = std::uniform_real_distribution<double>(0.2, 0.6)(rng);
  for (int blk = 0; blk < 2; ++blk) {
    // r = m leaves the block positive definite at 0.
    const int m = build::uniform_int(rng, 1, 3), r = build::uniform_int(rng, 0, m);
    Matrix a0 = Matrix::Zero(m, m);
    for (int i = 0; i < r; ++i) a0(i, i) = build::uniform_int(rng, 1, 3);
    std::vector<Matrix> al(static_cast<std::size_t>(b.n), Matrix::Zero(m, m));
    for (Matrix& x : al)
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) x(i, j) = x(j, i) = build::small_int(rng, p_zero);
    b.a0.push_back(a0);
    b.a.push_back(al);
  }
  return b;
}

/// Assembled matrices with rows and columns reordered by `perm`.
NsdpProblem assemble(const BlockInstance& b, const std::vector<int>& perm, bool declare) {
  const int m1 = static_cast<int>(b.a0[0].rows()), m = m1 + static_cast<int>(b.a0[1].rows());
  Matrix pm = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) pm(i, perm[static_cast<std::size_t>(i)]) = 1;
  auto blockdiag = [&](const Matrix& x, const Matrix& y) {
    Matrix out = Matrix::Zero(m, m);
    out.topLeftCorner(x.rows(), x.cols()) = x;
    out.bottomRightCorner(y.rows(), y.cols()) = y;
    return Matrix(pm * out * pm.transpose());
  };
  std::vector<Matrix> al;
  for (int l = 0; l < b.n; ++l) al.push_back(blockdiag(b.a[0][static_cast<std::size_t>(l)], b.a[1][static_cast<std::size_t>(l)]));
  MatrixPoly g = build::affine_matrix(blockdiag(b.a0[0], b.a0[1]), al);
  if (declare) g.set_blocks({m1, m - m1});
  return build::problem(declare ? "blocks" : "permuted", g);
}

NsdpProblem single_block(const BlockInstance& b, int blk) {
  return build::problem("block", build::affine_matrix(b.a0[static_cast<std::size_t>(blk)], b.a[static_cast<std::size_t>(blk)]));
}

void a2_blocks(Suite& s) {
  std::mt19937_64 rng(99);
  int not_preserved = 0, sparse_decided = 0, weak_decided = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const BlockInstance b = random_blocks(rng);
    const int m = static_cast<int>(b.a0[0].rows() + b.a0[1].rows());
    std::vector<int> ident(static_cast<std::size_t>(m)), perm;
    for (int i = 0; i < m; ++i) ident[static_cast<std::size_t>(i)] = i;
    perm = ident;
    std::shuffle(perm.begin(), perm.end(), rng);
    const NsdpProblem declared = assemble(b, ident, true), hidden = assemble(b, perm, false);
    const Vector z = build::zeros(b.n);
    const std::string tag = "instance " + std::to_string(trial);

    AnalysisOptions opt;
    opt.timing = false;
    const AnalysisReport ra = analyze(declared, z, opt), rb = analyze(hidden, z, opt);
    for (const std::string& name : checker_names())
      s.check(ra.verdicts.at(name).status == rb.verdicts.at(name).status,
              tag + " " + name + ": " + to_string(ra.verdicts.at(name).status) + " vs " +
                  to_string(rb.verdicts.at(name).status));

    // Multifold decomposition G_1(x) >= 0, G_2(x) >= 0, block by block.
    Matrix fam(b.n, 0), sparse_fam(b.n, 0);
    int with_kernel = 0;
    bool sparse_blocks_hold = true, sparse_block_fails = false, weak_block_fails = false;
    auto append = [&](Matrix& into, const Matrix& v) {
      Matrix next(b.n, into.cols() + v.cols());
      next << into, v;
      into = next;
    };
    for (int blk = 0; blk < 2; ++blk) {
      const NsdpProblem q = single_block(b, blk);
      const Matrix ker = build::oracle_kernel(q.constraint.evaluate<double>(z.data()));
      if (ker.cols() == 0) continue;
      ++with_kernel;
      append(fam, build_vij(q, z, basis_of(ker)).vecs);
      const CqVerdict sp = check_sparse_ndg(q, z);
      sparse_block_fails = sparse_block_fails || sp.status == Status::Fails;
      if (holds(sp.status) && sp.witness && sp.witness->kind == "sparse_basis")
        append(sparse_fam, labelled_family(q, z, sp.witness->basis, sp.witness->labels));
      else
        sparse_blocks_hold = false;
      const ProbeOptions po;
      weak_block_fails = weak_block_fails || probe_weak_ndg(q, z, probe_traces(q, z, po), po).verdict.status == Status::Fails;
    }

    // Assembled nondegeneracy also sees the cross-block v_ij, which vanish identically.
    const bool multifold_ndg = fam.cols() == 0 || oracle::independent(fam);
    const bool assembled_ndg = multifold_ndg && with_kernel <= 1;
    not_preserved += multifold_ndg && !assembled_ndg;
    s.check(holds(ra.verdicts.at("nondegeneracy").status) == assembled_ndg, tag + " nondegeneracy vs assembled family");

    const Status sa = ra.verdicts.at("sparse_ndg").status;
    if (sparse_block_fails) {
      ++sparse_decided;
      s.check(!holds(sa), tag + " sparse-ndg holds although a block refutes it");
    } else if (sparse_blocks_hold && (sparse_fam.cols() == 0 || oracle::independent(sparse_fam))) {
      ++sparse_decided;
      s.check(holds(sa), tag + " sparse-ndg misses the multifold witness");
    }
    if (weak_block_fails) {
      ++weak_decided;
      s.check(!holds(ra.verdicts.at("weak_ndg_probe").status), tag + " weak-ndg holds although a block refutes it");
    }
  }
  s.note("multifold oracle decided sparse-ndg on " + std::to_string(sparse_decided) + " and weak-ndg refutations on " +
         std::to_string(weak_decided) + " of 100");
  s.note(std::to_string(not_preserved) + " instances are nondegenerate block by block but not assembled");
}

void a2_lattice(Suite& s) {
  std::mt19937_64 rng(111);
  int violations = 0;
  std::map<std::string, int> holding;
  for (int trial = 0; trial < 500; ++trial) {
    const NsdpProblem p = build::random_instance(rng);
    AnalysisOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    opt.timing = false;
    const AnalysisReport r = analyze(p, build::zeros(p.n), opt);
    const std::vector<std::string> v = lattice_violations(r.verdicts);
    violations += static_cast<int>(v.size());
    for (const std::string& w : v) s.check(false, "instance " + std::to_string(trial) + ": " + w);
    for (const auto& [name, verdict] : r.verdicts) holding[name] += holds(verdict.status);
  }
  s.check(violations == 0, std::to_string(violations) + " lattice violations");
  std::string line = "holding counts:";
  for (const auto& [name, c] : holding) line += " " + name + "=" + std::to_string(c);
  s.note(line);
}

void a2_cardinality(Suite& s) {
  int eligible = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    build::RandomShape shape;
    shape.m_max = 3;
    shape.n_max = 4;
    const NsdpProblem p = build::random_instance(rng, shape);
    const CardinalityReport r = sparse_card_invariance(p, build::zeros(p.n), 12, static_cast<std::uint64_t>(seed));
    if (r.passing < 2) continue;
    ++eligible;
    s.check(r.consistent, "seed " + std::to_string(seed) + ": " + r.detail);
  }
  s.check(eligible > 0, "some instance has two passing bases");
  s.note(std::to_string(eligible) + " of 1000 instances with >= 2 passing bases");
}

// ---------------------------------------------------------------- A3

/// Affine G feasible at 0 with Robinson's CQ built in, and a convex objective
/// whose gradient at 0 is DG(0)^*[E Yt E^T] for a random Yt > 0.
NsdpProblem convex_instance(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const int m = build::uniform_int(rng, 2, 4), n = build::uniform_int(rng, 1, 4);
  const int r = build::uniform_int(rng, 0, m - 1), k = m - r;
  const Matrix u = oracle::random_orthogonal(m, rng);
  const Matrix e = u.rightCols(k);
  Vector d = Vector::Zero(m);
  for (int i = 0; i < r; ++i) d(i) = 1.0 + 2.0 * std::abs(nd(rng));
  const Matrix a0 = u * d.asDiagonal() * u.transpose();
  std::vector<Matrix> a;
  for (int l = 0; l < n; ++l) a.push_back(random_sym(m, rng).dense());
  // Shift along E so that d = e_1 is a strictly feasible direction on the face.
  const double lmin = oracle::eig(e.transpose() * a[0] * e).values.minCoeff();
  a[0] += (1.0 + std::max(0.0, -lmin)) * e * e.transpose();
  NsdpProblem p = build::problem("convex", build::affine_matrix(a0, a));
  Matrix bt(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) bt(i, j) = nd(rng);
  const Matrix yt = bt * bt.transpose() / k + 0.1 * Matrix::Identity(k, k);
  const Vector c = adjoint_apply(p, build::zeros(n), SymMat(Matrix(e * yt * e.transpose())));
  Poly f(n);
  for (int l = 0; l < n; ++l) {
    f = f + build::x(n, l, c(l));
    f = f + build::x(n, l) * build::x(n, l, 0.5 * std::abs(nd(rng)));
  }
  p.objective = f;
  return p;
}

void a3_boundedness(Suite& s) {
  std::mt19937_64 rng(333);
  int accepted = 0, attempts = 0;
  double worst_ratio = 0, worst_res = 0;
  while (accepted < 50 && attempts < 500) {
    ++attempts;
    const NsdpProblem p = convex_instance(rng);
    const Vector z = build::zeros(p.n);
    if (check_robinson(p, z).status != Status::HoldsCertified) continue;
    if (estimate_multiplier(p, z).stationarity_residual > 1e-8) continue;
    ++accepted;
    PenaltyConfig cfg;
    cfg.anchor = z;
    cfg.outer_iters = 13;  // rho = 1 .. 1e12
    const PenaltyTrace t = run_penalty(p, cfg);
    const std::string tag = "instance " + std::to_string(accepted);
    const auto ref = std::find_if(t.iterates.begin(), t.iterates.end(),
                                  [](const PenaltyIterate& it) { return std::abs(it.rho - 1e3) <= 1e-6; });
    s.check(ref != t.iterates.end(), tag + " reaches rho = 1e3");
    s.check(std::abs(t.iterates.back().rho - 1e12) <= 1e-3, tag + " reaches rho = 1e12");
    if (ref == t.iterates.end()) continue;
    for (auto it = ref; it != t.iterates.end(); ++it) {
      const double ratio = it->multiplier_norm / std::max(ref->multiplier_norm, 1e-300);
      if (ref->multiplier_norm > 0) worst_ratio = std::max(worst_ratio, ratio);
      s.check(it->multiplier_norm <= 10 * ref->multiplier_norm,
              tag + " |Y| = " + fmt(it->multiplier_norm) + " at rho = " + fmt(it->rho) + " vs " +
                  fmt(ref->multiplier_norm) + " at 1e3");
    }
    const double res = t.iterates.back().stationarity_residual;
    worst_res = std::max(worst_res, res);
    s.check(res <= 1e-4, tag + " final stationarity residual " + fmt(res));
  }
  s.check(accepted == 50, "accepted " + std::to_string(accepted) + " instances in " + std::to_string(attempts) + " draws");
  s.note(std::to_string(accepted) + " instances, worst |Y^k| / |Y(1e3)| " + fmt(worst_ratio) +
         ", worst final residual " + fmt(worst_res));
}

// ---------------------------------------------------------------- driver

struct Part {
  std::string name;
  std::function<void(Suite&)> run;
  double limit_s;  // wall-clock budget
};

bool run_criterion(const std::string& id, const std::string& title, const std::vector<Part>& parts) {
  bool ok = true;
  std::vector<std::string> lines;
  for (const Part& part : parts) {
    Suite s;
    s.name = part.name;
    const auto t0 = Clock::now();
    try {
      part.run(s);
    } catch (const std::exception& e) {
      s.check(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    s.check(secs <= part.limit_s, "took " + fmt(secs) + " s, budget " + fmt(part.limit_s) + " s");
    ok = ok && s.ok();
    lines.push_back("  " + std::string(s.ok() ? "ok   " : "FAIL ") + part.name + " (" + std::to_string(s.checks) +
                    " checks, " + fmt(secs) + " s)");
    for (const std::string& n : s.notes) lines.push_back("       " + n);
    const std::size_t shown = std::min<std::size_t>(s.failures.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) lines.push_back("       failed: " + s.failures[i]);
    if (s.failures.size() > shown)
      lines.push_back("       ... " + std::to_string(s.failures.size() - shown) + " more failures");
  }
  std::printf("%s %s: %s\n", id.c_str(), ok ? "PASS" : "FAIL", title.c_str());
  for (const std::string& l : lines) std::printf("%s\n", l.c_str());
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion("A1", "example verdicts and exact values",
                      {{"corpus", a1_corpus, 40},
                       {"diag(x1,x2,x3)", a1_diag3, 5},
                       {"[[x1,x2],[x2,0]]", a1_facial, 5},
                       {"diag(x,x)", a1_wrob, 5},
                       {"[[x1,x2],[x2,x1]]", a1_offdiag, 5}});
  ok &= run_criterion("A2", "property suites",
                      {{"Moreau decomposition", a2_moreau, 60},
                       {"v_ij double formula", a2_double_formula, 60},
                       {"penalty gradient", a2_gradient, 60},
                       {"nondegeneracy basis invariance", a2_basis_invariance, 60},
                       {"diagonal reductions", a2_diagonal, 60},
                       {"block invariance", a2_blocks, 60},
                       {"implication lattice", a2_lattice, 60},
                       {"cardinality invariance", a2_cardinality, 60}});
  ok &= run_criterion("A3", "bounded multipliers under Robinson's CQ", {{"penalty boundedness", a3_boundedness, 600}});
  return ok ? 0 : 1;
}
