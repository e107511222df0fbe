#include "nsdpcq/cqcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nsdpcq/detail/parallel.hpp"
#include "nsdpcq/detail/rotations.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/simplex.hpp"

namespace nsdpcq {

std::string to_string(Status s) {
  switch (s) {
    case Status::HoldsCertified: return "HoldsCertified";
    case Status::HoldsSampled: return "HoldsSampled";
    case Status::Fails: return "Fails";
    case Status::Undetermined: return "Undetermined";
  }
  return "?";
}

bool holds(Status s) { return s == Status::HoldsCertified || s == Status::HoldsSampled; }

const Vector VijFamily::vec(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (std::size_t c = 0; c < labels.size(); ++c)
    if (labels[c] == TermLabel{i, j}) return vecs.col(static_cast<Eigen::Index>(c));
  throw DimensionError("VijFamily: index out of range");
}

std::vector<Matrix> reduced_partials(const NsdpProblem& p, const Vector& x, const Matrix& e) {
  if (e.rows() != p.m()) throw DimensionError("basis row count does not match the constraint dimension");
  const std::vector<SymMat> d = eval_partials(p, x);
  std::vector<Matrix> b;
  b.reserve(d.size());
  for (const SymMat& dl : d) b.push_back(e.transpose() * dl.dense() * e);
  return b;
}

Matrix labelled_family(const NsdpProblem& p, const Vector& x, const Matrix& basis,
                       const std::vector<TermLabel>& labels) {
  Matrix out(p.n, static_cast<Eigen::Index>(labels.size()));
  std::vector<Matrix> b;
  const bool need_b = std::any_of(labels.begin(), labels.end(), [](const TermLabel& l) { return l.first >= 0; });
  if (need_b) b = reduced_partials(p, x, basis);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto [i, j] = labels[c];
    const auto col = static_cast<Eigen::Index>(c);
    if (i >= 0) {
      for (int l = 0; l < p.n; ++l) out(l, col) = b[static_cast<std::size_t>(l)](i, j);
    } else if (i == kEqualityRow) {
      out.col(col) = p.equalities.at(static_cast<std::size_t>(j)).eval_gradient(x);
    } else {
      out.col(col) = p.constraint.entry(j, j).eval_gradient(x);
    }
  }
  return out;
}

VijFamily build_vij(const NsdpProblem& p, const Vector& x, const KernelBasis& e) {
  VijFamily f;
  f.basis = e;
  f.point = x;
  const int k = e.kernel_dim();
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) f.labels.emplace_back(i, j);
  f.vecs = labelled_family(p, x, e.cols, f.labels);
  return f;
}

Matrix diagonal_vij(const NsdpProblem& p, const Vector& x, const Matrix& e) {
  const std::vector<Matrix> b = reduced_partials(p, x, e);
  const int k = static_cast<int>(e.cols());
  Matrix v(p.n, k);
  for (int l = 0; l < p.n; ++l) v.row(l) = b[static_cast<std::size_t>(l)].diagonal().transpose();
  return v;
}

LiResult li_test(const Matrix& vectors, double tol) {
  LiResult r;
  const int k = static_cast<int>(vectors.cols());
  if (k == 0) {
    r.sigma_min = std::numeric_limits<double>::infinity();
    return r;
  }
  const SymMat gram(Matrix(vectors.transpose() * vectors));
  const Spectral s = eigh(gram);
  const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
  for (int i = 0; i < k; ++i)
    if (std::abs(s.values(i)) > tol * scale) ++r.rank;
  r.independent = r.rank == k;
  r.sigma_min = std::sqrt(std::max(0.0, s.values(k - 1)));
  if (!r.independent) r.coeffs = s.vectors.col(k - 1);
  return r;
}

PliResult pli_test(const Matrix& v, const Matrix& w, double tol) {
  const int n = static_cast<int>(v.rows());
  const int k = static_cast<int>(v.cols());
  const int q = static_cast<int>(w.cols());
  if (w.rows() != n && q > 0) throw DimensionError("pli_test: row count mismatch");
  PliResult r;
  if (k == 0) {
    r.margin = std::numeric_limits<double>::infinity();
    return r;
  }
  const double scale = std::max({1.0, v.cwiseAbs().maxCoeff(), q ? w.cwiseAbs().maxCoeff() : 0.0});
  // Variables: alpha (k), beta+ (q), beta- (q), s+ (n), s- (n).
  const int nv = k + 2 * q + 2 * n;
  Matrix a = Matrix::Zero(n + 1, nv);
  a.block(0, 0, n, k) = v / scale;
  if (q) {
    a.block(0, k, n, q) = w / scale;
    a.block(0, k + q, n, q) = -w / scale;
  }
  a.block(0, k + 2 * q, n, n).setIdentity();
  a.block(0, k + 2 * q + n, n, n) = -Matrix::Identity(n, n);
  a.block(n, 0, 1, k).setOnes();
  Vector b = Vector::Zero(n + 1);
  b(n) = 1.0;
  Vector c = Vector::Zero(nv);
  c.tail(2 * n).setOnes();
  const LpResult lp = solve_lp(a, b, c);
  if (lp.status != LpStatus::Optimal) throw NumericError("pli_test: LP did not reach an optimum");
  r.margin = lp.objective;
  r.alpha = lp.x.head(k);
  r.beta = q ? Vector(lp.x.segment(k, q) - lp.x.segment(k + q, q)) : Vector();
  r.pos_independent = r.margin > tol;
  return r;
}

PliResult pli_test(const Matrix& v, double tol) { return pli_test(v, Matrix(v.rows(), 0), tol); }

KernelBasis feasible_kernel(const NsdpProblem& p, const Vector& x, double tol_rank) {
  const SymMat g = eval_G(p, x);
  KernelBasis kb = kernel_basis(g, tol_rank);
  for (std::size_t q = 0; q < p.equalities.size(); ++q) {
    const double h = p.equalities[q].eval(x);
    if (std::abs(h) > 1e-8 * (1.0 + p.equalities[q].max_abs_coef())) {
      std::ostringstream os;
      os << "equality constraint " << q << " is violated: h = " << h;
      throw NotFeasibleError(os.str(), -std::abs(h));
    }
  }
  return kb;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void append_equality_labels(const NsdpProblem& p, std::vector<TermLabel>& labels) {
  for (std::size_t q = 0; q < p.equalities.size(); ++q) labels.emplace_back(kEqualityRow, static_cast<int>(q));
}

Witness li_witness(const Matrix& basis, std::vector<TermLabel> labels, const LiResult& li,
                   const Matrix& family) {
  Witness w;
  w.kind = "li_dependence";
  w.basis = basis;
  w.labels = std::move(labels);
  w.coefficients = li.coeffs;
  w.residual = (family * li.coeffs).norm();
  return w;
}

// Orthonormal basis of {d : W^T d = 0}; W must have independent columns.
Matrix equality_null_space(const Matrix& w, int n) {
  if (w.cols() == 0) return Matrix::Identity(n, n);
  Matrix q = w;
  modified_gram_schmidt(q);
  return orthonormal_complement(q, n);
}

}  // namespace

CqVerdict check_nondegeneracy(const NsdpProblem& p, const Vector& x, const CheckOptions& opt) {
  CqVerdict v;
  const KernelBasis kb = feasible_kernel(p, x, opt.tol_rank);
  const int k = kb.kernel_dim();
  v.log.push_back("rank r = " + std::to_string(kb.rank_r) + ", kernel dimension " + std::to_string(k));
  std::vector<TermLabel> labels;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) labels.emplace_back(i, j);
  append_equality_labels(p, labels);
  if (labels.empty()) {
    v.status = Status::HoldsCertified;
    v.log.push_back("Ker G(x) = {0}: nondegeneracy holds trivially");
    return v;
  }
  const int count = static_cast<int>(labels.size());
  if (p.n < count)
    v.log.push_back("dimension count: " + std::to_string(count) + " vectors in R^" + std::to_string(p.n) +
                    " cannot be independent");
  const Matrix fam = labelled_family(p, x, kb.cols, labels);
  const LiResult li = li_test(fam, opt.tol_rank);
  v.log.push_back("li_test on the fixed basis: rank " + std::to_string(li.rank) + " of " +
                  std::to_string(count) + ", sigma_min = " + fmt(li.sigma_min));
  if (li.independent) {
    v.status = Status::HoldsCertified;
    Witness w;
    w.kind = "basis";
    w.basis = kb.cols;
    w.labels = labels;
    w.residual = li.sigma_min;
    w.note = "v_ij family linearly independent for this basis";
    v.witness = w;
  } else {
    v.status = Status::Fails;
    v.witness = li_witness(kb.cols, labels, li, fam);
  }
  return v;
}

LambdaMinSearch maximize_lambda_min(const std::vector<Matrix>& mats, int iters, int restarts,
                                    std::uint64_t seed) {
  LambdaMinSearch best;
  const int j = static_cast<int>(mats.size());
  if (j == 0) {
    best.value = 0.0;
    best.z = Vector();
    return best;
  }
  const int k = static_cast<int>(mats[0].rows());
  auto combine = [&](const Vector& z) {
    Matrix a = Matrix::Zero(k, k);
    for (int t = 0; t < j; ++t)
      if (z(t) != 0.0) a += z(t) * mats[static_cast<std::size_t>(t)];
    return SymMat(a);
  };
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  best.value = -std::numeric_limits<double>::infinity();
  Vector best_z = Vector::Zero(j);

  for (int rs = 0; rs < std::max(1, restarts); ++rs) {
    Vector z(j);
    if (rs == 0) {
      for (int t = 0; t < j; ++t) z(t) = mats[static_cast<std::size_t>(t)].trace();
      if (z.norm() == 0.0) z(0) = 1.0;
    } else {
      for (int t = 0; t < j; ++t) z(t) = gauss(rng);
    }
    z.normalize();
    for (int it = 1; it <= iters; ++it) {
      const Spectral s = eigh(combine(z));
      const double lam = s.values(k - 1);
      if (lam > best.value) {
        best.value = lam;
        best_z = z;
      }
      const Vector u = s.vectors.col(k - 1);
      Vector g(j);
      for (int t = 0; t < j; ++t) g(t) = u.dot(mats[static_cast<std::size_t>(t)] * u);
      const double gn = g.norm();
      if (gn == 0.0) break;
      z += (1.0 / std::sqrt(static_cast<double>(it))) * g / gn;
      const double zn = z.norm();
      if (zn > 1.0) z /= zn;
    }
  }
  best.z = best_z;
  const Spectral s = eigh(combine(best_z));
  const double lam = s.values(k - 1);
  int cnt = 0;
  for (int i = k - 1; i >= 0; --i)
    if (s.values(i) <= lam + 1e-6 * (1.0 + std::abs(lam))) ++cnt;
  best.min_vectors = s.vectors.rightCols(cnt);
  return best;
}

namespace {

// Margin of the diagonal family of E*C; smaller means closer to positive
// dependence.
struct DiagScorer {
  const std::vector<Matrix>& b;
  const Matrix& w;
  int n;

  Matrix family(const Matrix& c) const {
    const int k = static_cast<int>(c.cols());
    Matrix v(n, k);
    for (int l = 0; l < n; ++l) {
      const Matrix t = c.transpose() * b[static_cast<std::size_t>(l)] * c;
      v.row(l) = t.diagonal().transpose();
    }
    return v;
  }
  PliResult score(const Matrix& c) const { return pli_test(family(c), w); }
};

Matrix complete_rotation(const Matrix& cols, int k) {
  Matrix q = cols;
  modified_gram_schmidt(q);
  Matrix c(k, k);
  c.leftCols(q.cols()) = q;
  if (q.cols() < k) c.rightCols(k - q.cols()) = orthonormal_complement(q, k);
  return c;
}

}  // namespace

CqVerdict check_robinson(const NsdpProblem& p, const Vector& x, const CheckOptions& opt) {
  CqVerdict v;
  const KernelBasis kb = feasible_kernel(p, x, opt.tol_rank);
  const int k = kb.kernel_dim();
  const int q = static_cast<int>(p.equalities.size());
  v.log.push_back("rank r = " + std::to_string(kb.rank_r) + ", kernel dimension " + std::to_string(k));

  const Matrix w = equality_jacobian_t(p, x);
  if (q > 0) {
    std::vector<TermLabel> eq_labels;
    append_equality_labels(p, eq_labels);
    const LiResult li = li_test(w, opt.tol_rank);
    if (!li.independent) {
      v.status = Status::Fails;
      v.log.push_back("equality gradients are linearly dependent");
      v.witness = li_witness(Matrix(p.m(), 0), eq_labels, li, w);
      return v;
    }
  }
  if (k == 0) {
    v.status = Status::HoldsCertified;
    v.log.push_back(q ? "G(x) positive definite and equality gradients independent"
                      : "G(x) positive definite: Robinson's CQ holds trivially");
    return v;
  }

  const Matrix z = equality_null_space(w, p.n);
  std::vector<Matrix> b = reduced_partials(p, x, kb.cols);

  if (is_structurally_diagonal(p.constraint)) {
    // Diagonal case: active gradients must be positively independent (MFCQ).
    const SymMat g = eval_G(p, x);
    const double scale = std::max(1.0, g.dense().diagonal().maxCoeff());
    std::vector<int> active;
    for (int i = 0; i < p.m(); ++i)
      if (std::abs(g(i, i)) <= opt.tol_rank * scale) active.push_back(i);
    if (static_cast<int>(active.size()) == k) {
      Matrix e = Matrix::Zero(p.m(), k);
      for (int a = 0; a < k; ++a) e(active[static_cast<std::size_t>(a)], a) = 1.0;
      const Matrix va = diagonal_vij(p, x, e);
      const PliResult pli = pli_test(va, w);
      v.log.push_back("structurally diagonal constraint: MFCQ test on " + std::to_string(k) +
                      " active gradients, LP margin " + fmt(pli.margin));
      if (pli.pos_independent) {
        v.status = Status::HoldsCertified;
        Witness wt;
        wt.kind = "pli_basis";
        wt.basis = e;
        for (int a = 0; a < k; ++a) wt.labels.emplace_back(a, a);
        append_equality_labels(p, wt.labels);
        wt.residual = pli.margin;
        wt.note = "active gradients positively linearly independent";
        const LambdaMinSearch s = maximize_lambda_min(
            [&] {
              std::vector<Matrix> mats;
              const std::vector<Matrix> be = reduced_partials(p, x, e);
              for (int c = 0; c < z.cols(); ++c) {
                Matrix acc = Matrix::Zero(k, k);
                for (int l = 0; l < p.n; ++l) acc += z(l, c) * be[static_cast<std::size_t>(l)];
                mats.push_back(acc);
              }
              return mats;
            }(),
            opt.primal_iters, opt.primal_restarts, opt.seed);
        if (s.value > 1e-6) {
          wt.kind = "direction";
          wt.direction = z * s.z;
          wt.residual = s.value;
        }
        v.witness = wt;
      } else {
        v.status = Status::Fails;
        Witness wt;
        wt.kind = "pli_dependence";
        wt.basis = e;
        for (int a = 0; a < k; ++a) wt.labels.emplace_back(a, a);
        append_equality_labels(p, wt.labels);
        wt.coefficients.resize(k + q);
        wt.coefficients << pli.alpha, pli.beta;
        wt.residual = pli.margin;
        wt.note = "active gradients positively dependent";
        v.witness = wt;
      }
      return v;
    }
    v.log.push_back("active set size differs from kernel dimension; using the general test");
  }

  // (a) primal certificate on d = Z*y.
  std::vector<Matrix> mats;
  for (int c = 0; c < z.cols(); ++c) {
    Matrix acc = Matrix::Zero(k, k);
    for (int l = 0; l < p.n; ++l)
      if (z(l, c) != 0.0) acc += z(l, c) * b[static_cast<std::size_t>(l)];
    mats.push_back(acc);
  }
  const LambdaMinSearch search = maximize_lambda_min(mats, opt.primal_iters, opt.primal_restarts, opt.seed);
  v.log.push_back("primal search: best lambda_min(E^T DG[d] E) = " + fmt(search.value));
  const DiagScorer scorer{b, w, p.n};

  if (search.value > 1e-6 || k == 1) {
    const PliResult pli = k == 1 ? scorer.score(Matrix::Identity(1, 1)) : PliResult{};
    if (search.value > 1e-6 || pli.pos_independent) {
      v.status = Status::HoldsCertified;
      Witness wt;
      wt.kind = "direction";
      wt.basis = kb.cols;
      if (search.value > 1e-6) {
        wt.direction = z * search.z;
        wt.residual = search.value;
      } else {
        // k = 1: the projection of v_11 onto the equality null space.
        const Vector v11 = scorer.family(Matrix::Identity(1, 1)).col(0);
        wt.direction = z * (z.transpose() * v11);
        wt.direction.normalize();
        wt.residual = wt.direction.dot(v11);
        v.log.push_back("kernel dimension 1: decided exactly by the single vector v_11");
      }
      v.witness = wt;
      return v;
    }
    v.status = Status::Fails;
    Witness wt;
    wt.kind = "pli_dependence";
    wt.basis = kb.cols;
    wt.labels = {{0, 0}};
    append_equality_labels(p, wt.labels);
    wt.coefficients.resize(1 + q);
    wt.coefficients << pli.alpha, pli.beta;
    wt.residual = pli.margin;
    v.log.push_back("kernel dimension 1: v_11 lies in the span of the equality gradients");
    v.witness = wt;
    return v;
  }

  // (b) refutation: positive dependence of {v_ii(E C)} for some rotation C.
  std::vector<Matrix> candidates;
  candidates.push_back(Matrix::Identity(k, k));
  if (search.min_vectors.cols() > 0) {
    candidates.push_back(complete_rotation(search.min_vectors, k));
    for (Eigen::Index c = 0; c < search.min_vectors.cols(); ++c)
      candidates.push_back(complete_rotation(search.min_vectors.col(c), k));
  }
  for (const Matrix& m : mats) candidates.push_back(eigh(SymMat(m)).vectors);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < 10 && !mats.empty(); ++t) {
    Matrix acc = Matrix::Zero(k, k);
    for (const Matrix& m : mats) acc += gauss(rng) * m;
    candidates.push_back(eigh(SymMat(acc)).vectors);
  }
  const int structured = static_cast<int>(candidates.size());
  for (int s = 0; s < opt.samples; ++s) {
    std::mt19937_64 srng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(s) + 1);
    candidates.push_back(haar_orthogonal(k, srng));
  }

  std::vector<PliResult> scores(candidates.size());
  detail::parallel_for(static_cast<int>(candidates.size()), opt.jobs,
                       [&](int i) { scores[static_cast<std::size_t>(i)] = scorer.score(candidates[static_cast<std::size_t>(i)]); });

  auto fail_with = [&](const Matrix& c, const PliResult& pli, const std::string& how) {
    v.status = Status::Fails;
    Witness wt;
    wt.kind = "pli_dependence";
    wt.basis = kb.cols * c;
    for (int a = 0; a < k; ++a) wt.labels.emplace_back(a, a);
    append_equality_labels(p, wt.labels);
    wt.coefficients.resize(k + q);
    wt.coefficients << pli.alpha, pli.beta;
    wt.residual = pli.margin;
    wt.note = how;
    v.witness = wt;
    v.log.push_back("refuted: {v_ii} positively dependent for a " + how + " basis");
  };

  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!scores[i].pos_independent) {
      fail_with(candidates[i], scores[i], static_cast<int>(i) < structured ? "structured" : "sampled");
      return v;
    }

  // Local refinement by Givens coordinate descent from the best candidates.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return scores[a].margin < scores[c].margin; });
  const int starts = std::min<int>(3, static_cast<int>(order.size()));
  double best_margin = scores[order[0]].margin;
  for (int st = 0; st < starts; ++st) {
    Matrix c = candidates[order[static_cast<std::size_t>(st)]];
    double cur = scores[order[static_cast<std::size_t>(st)]].margin;
    int step = 0;
    for (int sweep = 0; step < opt.refine_steps && sweep < opt.refine_steps; ++sweep) {
      for (int a = 0; a < k && step < opt.refine_steps; ++a)
        for (int bb = a + 1; bb < k && step < opt.refine_steps; ++bb, ++step) {
          double val = cur;
          const double th = detail::minimize_angle(
              [&](double t) {
                Matrix cc = c;
                detail::apply_givens(cc, a, bb, t);
                return scorer.score(cc).margin;
              },
              16, val);
          if (val < cur) {
            detail::apply_givens(c, a, bb, th);
            cur = val;
          }
        }
      if (k < 2) break;
    }
    const PliResult fin = scorer.score(c);
    best_margin = std::min(best_margin, fin.margin);
    if (!fin.pos_independent) {
      fail_with(c, fin, "refined");
      return v;
    }
  }

  v.status = Status::Undetermined;
  v.samples = static_cast<int>(candidates.size());
  v.reason = "no interior direction found (best lambda_min " + fmt(search.value) +
             ") and no positive dependence among " + std::to_string(candidates.size()) +
             " candidate bases (smallest LP margin " + fmt(best_margin) + ")";
  v.log.push_back(v.reason);
  return v;
}

KktCertificate kkt_residual(const NsdpProblem& p, const Vector& x, const SymMat& y, const Vector& mu) {
  if (y.dim() != p.m()) throw DimensionError("kkt_residual: multiplier dimension mismatch");
  if (mu.size() != static_cast<Eigen::Index>(p.equalities.size()))
    throw DimensionError("kkt_residual: equality multiplier count mismatch");
  KktCertificate c;
  c.multiplier = y;
  c.equality_multipliers = mu;
  Vector g = p.objective.eval_gradient(x) - adjoint_apply(p, x, y);
  if (mu.size()) g -= equality_jacobian_t(p, x) * mu;
  c.stationarity_residual = g.norm();
  c.complementarity_residual = std::abs(inner(eval_G(p, x), y));
  const Spectral s = eigh(y);
  c.multiplier_psd = s.values(y.dim() - 1) >= -kEigTol * (1.0 + y.norm_inf());
  return c;
}

KktCertificate estimate_multiplier(const NsdpProblem& p, const Vector& x, double tol_rank) {
  const KernelBasis kb = feasible_kernel(p, x, tol_rank);
  const int k = kb.kernel_dim();
  const int q = static_cast<int>(p.equalities.size());
  const Vector grad = p.objective.eval_gradient(x);
  const Matrix w = equality_jacobian_t(p, x);
  const int nk = k * (k + 1) / 2;

  // Columns: adjoint of E S_s E^T for the svec basis S_s of S^k.
  Matrix a(p.n, nk);
  for (int s = 0; s < nk; ++s) {
    Vector e = Vector::Zero(nk);
    e(s) = 1.0;
    a.col(s) = adjoint_apply(p, x, SymMat(Matrix(kb.cols * smat(e, k) * kb.cols.transpose())));
  }
  // Eliminate mu exactly: residual of grad - A y in the complement of range(W).
  Matrix proj = Matrix::Identity(p.n, p.n);
  Matrix wpinv(q, p.n);
  if (q > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(w);
    wpinv = cod.pseudoInverse();
    proj -= w * wpinv;
  }
  const Matrix pa = proj * a;
  const Vector pg = proj * grad;

  auto psd_part = [&](const Vector& y) { return svec(proj_psd(SymMat(smat(y, k))).dense()); };
  Vector y = Vector::Zero(nk);
  if (nk > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(pa);
    Vector y0 = cod.solve(pg);
    const Spectral s0 = eigh(SymMat(smat(y0, k)));
    if (s0.values(k - 1) >= -1e-12 * (1.0 + y0.cwiseAbs().maxCoeff())) {
      y = psd_part(y0);
    } else {
      // Accelerated projected gradient on 0.5 || P (grad - A y) ||^2 over PSD y.
      const double lip = std::max(1e-12, (pa.transpose() * pa).eval().norm());
      Vector yk = psd_part(y0), yprev = yk, u = yk;
      double tk = 1.0;
      for (int it = 0; it < 5000; ++it) {
        const Vector gr = -pa.transpose() * (pg - pa * u);
        yprev = yk;
        yk = psd_part(u - gr / lip);
        const double tn = (1.0 + std::sqrt(1.0 + 4.0 * tk * tk)) / 2.0;
        u = yk + ((tk - 1.0) / tn) * (yk - yprev);
        tk = tn;
      }
      y = yk;
    }
  }
  const SymMat ybig(nk > 0 ? Matrix(kb.cols * smat(y, k) * kb.cols.transpose()) : Matrix::Zero(p.m(), p.m()));
  Vector mu = Vector::Zero(q);
  if (q > 0) mu = wpinv * (grad - adjoint_apply(p, x, ybig));
  return kkt_residual(p, x, ybig, mu);
}

WitnessCheck recheck_witness(const NsdpProblem& p, const Vector& x, const Witness& w, double tol) {
  WitnessCheck r;
  const double g_scale = 1.0;
  if (w.kind == "li_dependence" || w.kind == "pli_dependence") {
    const Matrix fam = labelled_family(p, x, w.basis, w.labels);
    if (w.coefficients.size() != fam.cols()) {
      r.detail = "coefficient count does not match the family";
      return r;
    }
    const double scale = std::max(g_scale, fam.size() ? fam.cwiseAbs().maxCoeff() : 0.0);
    r.residual = (fam * w.coefficients).norm() / scale;
    bool coeffs_ok = true;
    if (w.kind == "li_dependence") {
      coeffs_ok = std::abs(w.coefficients.norm() - 1.0) <= tol;
    } else {
      double sum = 0.0;
      for (std::size_t c = 0; c < w.labels.size(); ++c) {
        if (w.labels[c].first == kEqualityRow) continue;
        const double a = w.coefficients(static_cast<Eigen::Index>(c));
        if (a < -tol) coeffs_ok = false;
        sum += a;
      }
      if (std::abs(sum - 1.0) > tol) coeffs_ok = false;
    }
    r.ok = coeffs_ok && r.residual <= tol;
    r.detail = coeffs_ok ? "combination residual recomputed" : "coefficients violate the normalization";
    return r;
  }
  if (w.kind == "direction") {
    const SymMat g = eval_G(p, x);
    const double tk = kernel_tolerance(g);
    if (w.basis.cols() == 0 || (g.dense() * w.basis).cwiseAbs().maxCoeff() > tk ||
        orthogonality_defect(w.basis) > 1e-10) {
      r.detail = "stored basis is not an orthonormal kernel basis";
      return r;
    }
    Matrix acc = Matrix::Zero(w.basis.cols(), w.basis.cols());
    const std::vector<Matrix> b = reduced_partials(p, x, w.basis);
    for (int l = 0; l < p.n; ++l) acc += w.direction(l) * b[static_cast<std::size_t>(l)];
    const Spectral s = eigh(SymMat(acc));
    r.residual = s.values(s.values.size() - 1);
    const Matrix wt = equality_jacobian_t(p, x);
    const double eq = wt.cols() ? (wt.transpose() * w.direction).cwiseAbs().maxCoeff() : 0.0;
    r.ok = r.residual > 0.0 && eq <= tol;
    r.detail = "lambda_min of E^T DG[d] E recomputed";
    return r;
  }
  if (w.kind == "kernel_dimension") {
    const KernelBasis kb = feasible_kernel(p, x);
    const int need = kb.kernel_dim() + static_cast<int>(p.equalities.size());
    r.residual = need - p.n;
    r.ok = need > p.n;
    r.detail = "k + q compared with n";
    return r;
  }
  if (w.kind == "subspace_dependence") {
    const int k = static_cast<int>(w.matrix.rows());
    const Matrix big = w.basis * w.matrix * w.basis.transpose();
    Vector img = adjoint_apply(p, x, SymMat(big));
    if (w.coefficients.size()) img += equality_jacobian_t(p, x) * w.coefficients;
    r.residual = img.norm();
    bool in_t = true;
    if (w.subspace.size()) {
      const Vector sv = svec(w.matrix);
      in_t = (sv - w.subspace * (w.subspace.transpose() * sv)).norm() <= tol;
    }
    r.ok = std::abs(w.matrix.norm() - 1.0) <= tol && in_t && r.residual <= tol && k > 0;
    r.detail = "adjoint image of the subspace element recomputed";
    return r;
  }
  if (w.kind == "dual_matrix") {
    const Spectral s = eigh(SymMat(w.matrix));
    const Vector sv = svec(w.matrix);
    r.residual = w.subspace.cols() ? (w.subspace.transpose() * sv).cwiseAbs().maxCoeff() : 0.0;
    r.ok = s.values(s.values.size() - 1) >= -tol && std::abs(w.matrix.norm() - 1.0) <= tol && r.residual <= tol;
    r.detail = "orthogonality of the PSD matrix to the subspace recomputed";
    return r;
  }
  if (w.kind == "basis") {
    const Matrix fam = labelled_family(p, x, w.basis, w.labels);
    const LiResult li = li_test(fam);
    r.residual = li.sigma_min;
    r.ok = li.independent;
    r.detail = "independence of the labelled family recomputed";
    return r;
  }
  if (w.kind == "pli_basis") {
    const Matrix fam = labelled_family(p, x, w.basis, w.labels);
    std::vector<Eigen::Index> cone, eq;
    for (std::size_t c = 0; c < w.labels.size(); ++c)
      (w.labels[c].first == kEqualityRow ? eq : cone).push_back(static_cast<Eigen::Index>(c));
    const PliResult pli = pli_test(fam(Eigen::all, cone), fam(Eigen::all, eq));
    r.residual = pli.margin;
    r.ok = pli.pos_independent;
    r.detail = "positive independence of the labelled family recomputed";
    return r;
  }
  if (w.kind == "sparse_basis") {
    const MatrixPoly h = congruence(p.constraint, w.basis, 1e-12 * std::max(1.0, [&] {
      double mc = 0.0;
      for (const auto& [ij, poly] : p.constraint.entries()) mc = std::max(mc, poly.max_abs_coef());
      return mc;
    }()));
    bool item2 = true;
    for (int i = 0; i < h.dim(); ++i) item2 = item2 && h.has_entry(i, i);
    bool labels_match = true;
    for (const TermLabel& lb : w.labels)
      if (lb.first >= 0 && !h.has_entry(lb.first, lb.second)) labels_match = false;
    const Matrix fam = labelled_family(p, x, w.basis, w.labels);
    const LiResult li = li_test(fam);
    r.residual = li.sigma_min;
    r.ok = item2 && labels_match && li.independent;
    r.detail = "diagonal support and independence over I recomputed";
    return r;
  }
  if (w.kind == "forsgren_certificate") {
    const int k = static_cast<int>(w.matrix.rows());
    const Spectral s = eigh(SymMat(w.matrix));
    const Vector sv = svec(w.matrix);
    const bool in_t = (sv - w.subspace * (w.subspace.transpose() * sv)).norm() <= tol * std::max(1.0, sv.norm());
    const std::vector<Matrix> b = reduced_partials(p, x, w.basis);
    const Matrix wt = equality_jacobian_t(p, x);
    Matrix fam(p.n, w.subspace.cols() + wt.cols());
    for (int l = 0; l < p.n; ++l)
      for (Eigen::Index c = 0; c < w.subspace.cols(); ++c)
        fam(l, c) = svec(b[static_cast<std::size_t>(l)]).dot(w.subspace.col(c));
    fam.rightCols(wt.cols()) = wt;
    const LiResult li = li_test(fam);
    r.residual = s.values(s.values.size() - 1);
    r.ok = k > 0 && in_t && r.residual > 0.0 && li.independent;
    r.detail = "positive definite element of T and injectivity of the restricted adjoint recomputed";
    return r;
  }
  r.detail = "unknown witness kind " + w.kind;
  return r;
}

}  // namespace nsdpcq
