#include "nsdpcq/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "nsdpcq/detail/parallel.hpp"
#include "nsdpcq/detail/rotations.hpp"
#include "nsdpcq/errors.hpp"

namespace nsdpcq {

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

Matrix complete_rotation(const Matrix& cols, int k) {
  Matrix q = cols;
  modified_gram_schmidt(q);
  Matrix c(k, k);
  c.leftCols(q.cols()) = q;
  if (q.cols() < k) c.rightCols(k - q.cols()) = orthonormal_complement(q, k);
  return c;
}

// Orthonormal basis of the column span, rank decided on the Gram spectrum.
Matrix range_basis(const Matrix& a, double tol = 1e-10) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  const Spectral s = eigh(SymMat(Matrix(a * a.transpose())));
  const double top = std::max(s.values(0), 0.0);
  int r = 0;
  while (r < s.values.size() && s.values(r) > tol * std::max(1.0, top)) ++r;
  return s.vectors.leftCols(r);
}

// Givens sweeps that reduce sum_l off(C^T B_l C)^2.
Matrix joint_diagonalizer(const std::vector<Matrix>& mats, int k, int sweeps = 30) {
  Matrix c = Matrix::Identity(k, k);
  if (k < 2 || mats.empty()) return c;
  std::vector<Matrix> a = mats;
  auto off_pair = [&](int p, int q, double th) {
    const double cs = std::cos(th), sn = std::sin(th);
    double s = 0.0;
    for (const Matrix& m : a) {
      // Entry (p,q) after rotating columns/rows p and q.
      const double app = m(p, p), aqq = m(q, q), apq = m(p, q);
      const double npq = cs * sn * (app - aqq) + (cs * cs - sn * sn) * apq;
      s += npq * npq;
    }
    return s;
  };
  for (int sw = 0; sw < sweeps; ++sw) {
    bool moved = false;
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q) {
        Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
        for (const Matrix& m : a) {
          const Eigen::Vector2d h(m(p, p) - m(q, q), 2.0 * m(p, q));
          g += h * h.transpose();
        }
        const Spectral s = eigh(SymMat(Matrix(g)));
        const double th0 = 0.5 * std::atan2(s.vectors(1, 0), s.vectors(0, 0));
        double best = off_pair(p, q, 0.0), best_th = 0.0;
        for (double th : {th0 + std::numbers::pi / 4, th0 - std::numbers::pi / 4, th0, -th0}) {
          const double v = off_pair(p, q, th);
          if (v < best - 1e-15) {
            best = v;
            best_th = th;
          }
        }
        if (best_th != 0.0) {
          moved = true;
          Matrix r = Matrix::Identity(k, k);
          detail::apply_givens(r, p, q, best_th);
          for (Matrix& m : a) m = r.transpose() * m * r;
          c = c * r;
        }
      }
    if (!moved) break;
  }
  return c;
}

// Structured rotations (identity, eigenbases, joint diagonalizer) followed by
// Haar samples.
std::vector<Matrix> rotation_candidates(const std::vector<Matrix>& b, int k, int haar, std::uint64_t seed) {
  std::vector<Matrix> out;
  out.push_back(Matrix::Identity(k, k));
  if (k == 1) return out;
  out.push_back(joint_diagonalizer(b, k));
  for (const Matrix& m : b)
    if (m.cwiseAbs().maxCoeff() > 0.0) out.push_back(eigh(SymMat(m)).vectors);
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < 6 && !b.empty(); ++t) {
    Matrix acc = Matrix::Zero(k, k);
    for (const Matrix& m : b) acc += gauss(rng) * m;
    out.push_back(eigh(SymMat(acc)).vectors);
  }
  for (int s = 0; s < haar; ++s) {
    std::mt19937_64 srng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(s) + 7);
    out.push_back(haar_orthogonal(k, srng));
  }
  return out;
}

double scalar_score(const SparseBasisScore& s, int max_card) {
  return 4.0 * s.item2 + 2.0 * s.item1 + s.sigma_min / (1.0 + s.sigma_min) +
         0.5 * (max_card - s.cardinality) / std::max(1, max_card);
}

}  // namespace

std::vector<int> SparsityPattern::missing_diagonal() const {
  std::vector<int> out;
  for (int i = 0; i < dim; ++i)
    if (!contains(i, i)) out.push_back(i);
  return out;
}

SparsityPattern exact_pattern(const MatrixPoly& g) {
  SparsityPattern s;
  s.dim = g.dim();
  for (const auto& [ij, poly] : g.entries())
    if (!structural_zero(poly)) s.index_set.insert(ij);
  return s;
}

double hat_threshold(const MatrixPoly& g) {
  double m = 0.0;
  for (const auto& [ij, poly] : g.entries()) m = std::max(m, poly.max_abs_coef());
  return 1e-12 * std::max(1.0, m);
}

std::vector<Poly> bilinear_entries(const MatrixPoly& g, const Matrix& a, const Matrix& b, double prune) {
  const MonomialMatrices mm = monomial_matrices(g);
  const auto ra = a.cols(), rb = b.cols();
  std::vector<std::vector<Term>> terms(static_cast<std::size_t>(ra * rb));
  for (std::size_t t = 0; t < mm.exps.size(); ++t) {
    const Matrix c = a.transpose() * mm.coefs[t] * b;
    for (Eigen::Index i = 0; i < ra; ++i)
      for (Eigen::Index j = 0; j < rb; ++j)
        if (std::abs(c(i, j)) > prune) terms[static_cast<std::size_t>(i * rb + j)].push_back(Term{c(i, j), mm.exps[t]});
  }
  std::vector<Poly> out;
  out.reserve(terms.size());
  for (auto& t : terms) out.emplace_back(g.n_vars(), std::move(t));
  return out;
}

ReducedMap hat_map(const NsdpProblem& p, const Vector& x, const KernelBasis& e) {
  if (e.dim() != p.m() && e.kernel_dim() > 0) throw DimensionError("hat_map: basis row count mismatch");
  (void)x;
  ReducedMap r;
  r.kind = ReducedMap::Kind::Hat;
  r.transform = e.cols;
  r.rank_r = e.rank_r;
  r.pattern.source = PatternSource::ExactPolynomial;
  if (e.kernel_dim() == 0) {
    r.pattern.dim = 0;
    r.evaluator = [](const Vector&) -> SymMat { throw DimensionError("hat_map: empty kernel basis"); };
    return r;
  }
  const double thr = hat_threshold(p.constraint);
  MatrixPoly h = congruence(p.constraint, e.cols, thr);
  r.pattern = exact_pattern(h);
  r.pattern.tol = thr;
  r.poly = h;
  r.evaluator = [h](const Vector& z) { return SymMat(h.evaluate(z.data())); };
  return r;
}

ReducedMap tilde_map(const NsdpProblem& p, const Vector& x, const std::optional<Matrix>& u_in,
                     const TildeOptions& opt, double tol_rank) {
  const SymMat g0 = eval_G(p, x);
  const int m = p.m();
  Matrix u;
  if (u_in) {
    u = *u_in;
  } else {
    u = eigh(g0).vectors;
  }
  const Matrix d = u.transpose() * g0.dense() * u;
  const double scale = std::max(1.0, d.diagonal().maxCoeff());
  std::vector<int> pos, ker;
  for (int i = 0; i < m; ++i) (d(i, i) > tol_rank * scale ? pos : ker).push_back(i);

  ReducedMap r;
  r.kind = ReducedMap::Kind::Tilde;
  r.transform = u;
  r.rank_r = static_cast<int>(pos.size());
  // The evaluator may outlive the caller's problem, so it owns a copy.
  const auto owned = std::make_shared<const NsdpProblem>(p);
  if (pos.empty()) {
    r.pattern = exact_pattern(p.constraint);
    r.evaluator = [owned](const Vector& z) { return eval_G(*owned, z); };
    return r;
  }
  Matrix pbar(m, static_cast<Eigen::Index>(pos.size()));
  for (std::size_t c = 0; c < pos.size(); ++c) pbar.col(static_cast<Eigen::Index>(c)) = u.col(pos[c]);
  auto eval = [owned, pbar](const Vector& z) -> std::optional<SymMat> {
    const Matrix g = eval_G(*owned, z).dense();
    const Matrix gp = g * pbar;
    Eigen::LLT<Matrix> llt(pbar.transpose() * gp);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return SymMat(Matrix(g - gp * llt.solve(gp.transpose())));
  };
  r.evaluator = [eval](const Vector& z) {
    auto v = eval(z);
    if (!v) throw NumericError("tilde map: P^T G(x) P is not positive definite at this point");
    return *v;
  };

  r.pattern.dim = m;
  r.pattern.source = PatternSource::Sampled;
  r.pattern.tol = opt.tau;
  std::mt19937_64 rng(opt.seed ^ 0xC0FFEEULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int used = 0;
  for (int s = 0; s < opt.samples; ++s) {
    Vector dir(p.n);
    for (int l = 0; l < p.n; ++l) dir(l) = gauss(rng);
    dir.normalize();
    const auto val = eval(x + opt.delta * dir);
    if (!val) continue;
    ++used;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j)
        if (std::abs((*val)(i, j)) > opt.tau) r.pattern.index_set.insert({i, j});
  }
  if (used == 0) throw NumericError("tilde map: every sample point was skipped");
  r.pattern.points = used;
  return r;
}

SparseBasisScore score_sparse_basis(const NsdpProblem& p, const Vector& x, const Matrix& e) {
  SparseBasisScore s;
  const int k = static_cast<int>(e.cols());
  MatrixPoly h = congruence(p.constraint, e, hat_threshold(p.constraint));
  s.pattern = exact_pattern(h);
  s.cardinality = static_cast<int>(s.pattern.index_set.size());
  s.item2 = s.pattern.missing_diagonal().empty();
  std::vector<TermLabel> labels(s.pattern.index_set.begin(), s.pattern.index_set.end());
  append_equality_labels(p, labels);
  if (labels.empty()) {
    s.item1 = true;
    s.sigma_min = std::numeric_limits<double>::infinity();
    return s;
  }
  (void)k;
  const Matrix fam = labelled_family(p, x, e, labels);
  const LiResult li = li_test(fam);
  s.item1 = li.independent;
  s.sigma_min = li.sigma_min;
  return s;
}

namespace {

struct BlockSearch {
  Matrix kernel;                   // m x k_b, block-supported
  std::vector<Matrix> bases;       // ranked m x k_b candidates
  std::vector<SparseBasisScore> scores;
  std::vector<Matrix> tried;       // every candidate visited
};

BlockSearch search_block(const NsdpProblem& p, const Vector& x, const Matrix& kernel, int haar,
                         int refine_steps, std::uint64_t seed, int jobs) {
  BlockSearch bs;
  bs.kernel = kernel;
  const int k = static_cast<int>(kernel.cols());
  const std::vector<Matrix> b = reduced_partials(p, x, kernel);
  const std::vector<Matrix> rots = rotation_candidates(b, k, haar, seed);
  std::vector<SparseBasisScore> sc(rots.size());
  detail::parallel_for(static_cast<int>(rots.size()), jobs, [&](int i) {
    sc[static_cast<std::size_t>(i)] = score_sparse_basis(p, x, kernel * rots[static_cast<std::size_t>(i)]);
  });
  const int max_card = k * (k + 1) / 2;
  std::vector<std::size_t> order(rots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return scalar_score(sc[a], max_card) > scalar_score(sc[c], max_card);
  });
  for (const Matrix& r : rots) bs.tried.push_back(kernel * r);

  // Givens refinement of the leading candidates unless one already passes.
  std::vector<Matrix> ranked;
  std::vector<SparseBasisScore> ranked_sc;
  for (std::size_t i : order) {
    ranked.push_back(rots[i]);
    ranked_sc.push_back(sc[i]);
  }
  if (k >= 2 && !(ranked_sc[0].item1 && ranked_sc[0].item2)) {
    const int starts = std::min<int>(3, static_cast<int>(ranked.size()));
    for (int st = 0; st < starts; ++st) {
      Matrix c = ranked[static_cast<std::size_t>(st)];
      double cur = -scalar_score(ranked_sc[static_cast<std::size_t>(st)], max_card);
      int step = 0;
      while (step < refine_steps) {
        bool improved = false;
        for (int a = 0; a < k && step < refine_steps; ++a)
          for (int bb = a + 1; bb < k && step < refine_steps; ++bb, ++step) {
            double val = cur;
            const double th = detail::minimize_angle(
                [&](double t) {
                  Matrix cc = c;
                  detail::apply_givens(cc, a, bb, t);
                  return -scalar_score(score_sparse_basis(p, x, kernel * cc), max_card);
                },
                16, val);
            if (val < cur - 1e-12) {
              detail::apply_givens(c, a, bb, th);
              cur = val;
              improved = true;
            }
          }
        if (!improved) break;
      }
      const SparseBasisScore fin = score_sparse_basis(p, x, kernel * c);
      bs.tried.push_back(kernel * c);
      ranked.push_back(c);
      ranked_sc.push_back(fin);
    }
    std::vector<std::size_t> o2(ranked.size());
    std::iota(o2.begin(), o2.end(), std::size_t{0});
    std::stable_sort(o2.begin(), o2.end(), [&](std::size_t a, std::size_t c) {
      return scalar_score(ranked_sc[a], max_card) > scalar_score(ranked_sc[c], max_card);
    });
    std::vector<Matrix> r2;
    std::vector<SparseBasisScore> s2;
    for (std::size_t i : o2) {
      r2.push_back(ranked[i]);
      s2.push_back(ranked_sc[i]);
    }
    ranked = std::move(r2);
    ranked_sc = std::move(s2);
  }
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    bs.bases.push_back(kernel * ranked[i]);
    bs.scores.push_back(ranked_sc[i]);
  }
  return bs;
}

// Kernel bases per block of the constraint (one block when dense).
std::vector<Matrix> block_kernels(const NsdpProblem& p, const Vector& x, double tol_rank, Partition& parts) {
  const SymMat g = eval_G(p, x);
  const auto detected = detect_blocks(p);
  if (!detected) {
    parts = {std::vector<int>(static_cast<std::size_t>(p.m()))};
    std::iota(parts[0].begin(), parts[0].end(), 0);
  } else {
    parts = *detected;
  }
  const double scale = std::max(1.0, eigh(g).values(0));
  std::vector<Matrix> out;
  for (const auto& idx : parts) {
    Matrix sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t c = 0; c < idx.size(); ++c) sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = g(idx[a], idx[c]);
    // Relative to the whole matrix so the split agrees with the global kernel.
    const Spectral s = eigh(SymMat(sub));
    int r = 0;
    while (r < s.values.size() && std::abs(s.values(r)) > tol_rank * scale) ++r;
    const int kb = static_cast<int>(idx.size()) - r;
    Matrix e = Matrix::Zero(p.m(), kb);
    Matrix loc = s.vectors.rightCols(kb);
    if (kb > 1) modified_gram_schmidt(loc);
    for (std::size_t a = 0; a < idx.size(); ++a) e.row(idx[a]) = loc.row(static_cast<Eigen::Index>(a));
    out.push_back(e);
  }
  return out;
}

}  // namespace

SparseNdgResult check_sparse_ndg_full(const NsdpProblem& p, const Vector& x, const SparseOptions& opt) {
  SparseNdgResult res;
  CqVerdict& v = res.verdict;
  const KernelBasis kb = feasible_kernel(p, x, opt.check.tol_rank);
  const int k = kb.kernel_dim();
  const int q = static_cast<int>(p.equalities.size());
  v.log.push_back("rank r = " + std::to_string(kb.rank_r) + ", kernel dimension " + std::to_string(k));

  auto finish_sparse_robinson = [&]() {
    if (!opt.sparse_robinson) return;
    if (v.status == Status::HoldsCertified) res.sparse_robinson = Status::HoldsCertified;
  };

  if (k == 0) {
    if (q == 0) {
      v.status = Status::HoldsCertified;
      v.log.push_back("Ker G(x) = {0}: sparse-nondegeneracy holds trivially");
    } else {
      const Matrix w = equality_jacobian_t(p, x);
      const LiResult li = li_test(w, opt.check.tol_rank);
      v.status = li.independent ? Status::HoldsCertified : Status::Fails;
      if (!li.independent) {
        Witness wt;
        wt.kind = "li_dependence";
        append_equality_labels(p, wt.labels);
        wt.basis = Matrix(p.m(), 0);
        wt.coefficients = li.coeffs;
        wt.residual = (w * li.coeffs).norm();
        v.witness = wt;
      }
    }
    finish_sparse_robinson();
    return res;
  }

  if (is_structurally_diagonal(p.constraint)) {
    const SymMat g = eval_G(p, x);
    const double scale = std::max(1.0, g.dense().diagonal().maxCoeff());
    std::vector<int> active;
    for (int i = 0; i < p.m(); ++i)
      if (std::abs(g(i, i)) <= opt.check.tol_rank * scale) active.push_back(i);
    if (static_cast<int>(active.size()) == k) {
      Matrix e = Matrix::Zero(p.m(), k);
      for (int a = 0; a < k; ++a) e(active[static_cast<std::size_t>(a)], a) = 1.0;
      std::vector<TermLabel> labels;
      for (int a = 0; a < k; ++a) labels.emplace_back(a, a);
      append_equality_labels(p, labels);
      const Matrix fam = labelled_family(p, x, e, labels);
      const LiResult li = li_test(fam, opt.check.tol_rank);
      v.log.push_back("structurally diagonal constraint: LICQ on " + std::to_string(k) +
                      " active gradients, sigma_min " + fmt(li.sigma_min));
      Witness wt;
      wt.basis = e;
      wt.labels = labels;
      if (li.independent) {
        v.status = Status::HoldsCertified;
        wt.kind = "basis";
        wt.residual = li.sigma_min;
        wt.note = "active gradients linearly independent";
      } else {
        v.status = Status::Fails;
        wt.kind = "li_dependence";
        wt.coefficients = li.coeffs;
        wt.residual = (fam * li.coeffs).norm();
        wt.note = "active gradients linearly dependent";
      }
      v.witness = wt;
      finish_sparse_robinson();
      return res;
    }
  }

  if (p.n < k + q) {
    v.status = Status::Fails;
    Witness wt;
    wt.kind = "kernel_dimension";
    wt.basis = kb.cols;
    wt.residual = k + q - p.n;
    wt.note = "item 2 forces all diagonal v_ii into the family: k + q > n";
    v.witness = wt;
    v.log.push_back("dimension bound: " + std::to_string(k + q) + " vectors in R^" + std::to_string(p.n));
    finish_sparse_robinson();
    return res;
  }

  Partition parts;
  const std::vector<Matrix> kernels = block_kernels(p, x, opt.check.tol_rank, parts);
  if (parts.size() > 1) v.log.push_back("block decomposition with " + std::to_string(parts.size()) + " blocks");
  std::vector<BlockSearch> searches;
  int total = 0;
  for (std::size_t bidx = 0; bidx < kernels.size(); ++bidx) {
    if (kernels[bidx].cols() == 0) continue;
    total += static_cast<int>(kernels[bidx].cols());
    searches.push_back(search_block(p, x, kernels[bidx], opt.bases, opt.check.refine_steps,
                                    opt.check.seed + 31 * bidx, opt.check.jobs));
  }
  if (total != k) throw NumericError("block kernels do not add up to the kernel dimension");

  // Combine per-block candidates: best first, then single-block substitutions.
  auto assemble = [&](const std::vector<std::size_t>& pick) {
    Matrix e(p.m(), k);
    int col = 0;
    for (std::size_t b = 0; b < searches.size(); ++b) {
      const Matrix& eb = searches[b].bases[pick[b]];
      e.middleCols(col, eb.cols()) = eb;
      col += static_cast<int>(eb.cols());
    }
    return e;
  };
  std::vector<std::vector<std::size_t>> combos;
  combos.push_back(std::vector<std::size_t>(searches.size(), 0));
  for (std::size_t b = 0; b < searches.size(); ++b)
    for (std::size_t alt = 1; alt < std::min<std::size_t>(4, searches[b].bases.size()); ++alt) {
      std::vector<std::size_t> c(searches.size(), 0);
      c[b] = alt;
      combos.push_back(c);
    }
  bool all_item2 = true;
  for (const BlockSearch& s : searches) all_item2 = all_item2 && s.scores[0].item2;

  std::optional<Matrix> best_item2;
  for (const auto& combo : combos) {
    const Matrix e = assemble(combo);
    const SparseBasisScore s = score_sparse_basis(p, x, e);
    if (s.item2 && !best_item2) best_item2 = e;
    if (s.item1 && s.item2) {
      v.status = Status::HoldsCertified;
      Witness wt;
      wt.kind = "sparse_basis";
      wt.basis = e;
      wt.labels.assign(s.pattern.index_set.begin(), s.pattern.index_set.end());
      append_equality_labels(p, wt.labels);
      wt.residual = s.sigma_min;
      wt.note = "items 1 and 2 hold for this basis; |I| = " + std::to_string(s.cardinality);
      v.witness = wt;
      v.log.push_back("found a basis with full diagonal support and independent v_ij over I (|I| = " +
                      std::to_string(s.cardinality) + ", sigma_min " + fmt(s.sigma_min) + ")");
      finish_sparse_robinson();
      return res;
    }
  }
  v.log.push_back(all_item2 ? "no candidate basis satisfied item 1"
                            : "no candidate basis satisfied items 1 and 2 together");

  // Certified refutations; sparse-nondegeneracy implies Robinson's CQ.
  std::vector<Matrix> columns;
  for (int i = 0; i < p.m(); ++i) {
    Vector e = Vector::Zero(p.m());
    e(i) = 1.0;
    const Vector proj = kb.cols * (kb.cols.transpose() * e);
    if ((proj - e).norm() <= 1e-10) columns.push_back(e);
  }
  for (const BlockSearch& s : searches)
    for (const Matrix& t : s.tried)
      for (Eigen::Index c = 0; c < t.cols(); ++c) columns.push_back(t.col(c));
  const double thr = hat_threshold(p.constraint);
  for (const Matrix& col : columns) {
    const std::vector<Poly> quad = bilinear_entries(p.constraint, col, col, thr);
    if (!quad[0].is_zero()) continue;
    // e^T G(x) e vanishes identically, so Y = e e^T annihilates DG(x)^*.
    const Matrix c = complete_rotation(kb.cols.transpose() * col, k);
    Witness wt;
    wt.kind = "pli_dependence";
    wt.basis = kb.cols * c;
    for (int a = 0; a < k; ++a) wt.labels.emplace_back(a, a);
    append_equality_labels(p, wt.labels);
    wt.coefficients = Vector::Zero(k + q);
    wt.coefficients(0) = 1.0;
    wt.note = "kernel direction with structurally zero e^T G(x) e; Robinson's CQ fails, hence so does sparse-nondegeneracy";
    v.status = Status::Fails;
    v.witness = wt;
    v.log.push_back("structurally null kernel direction found: item 2 cannot be repaired without losing Robinson's CQ");
    finish_sparse_robinson();
    return res;
  }

  const CqVerdict rob = check_robinson(p, x, opt.check);
  if (rob.status == Status::Fails) {
    v.status = Status::Fails;
    v.witness = rob.witness;
    if (v.witness) v.witness->note = "Robinson's CQ refuted, hence sparse-nondegeneracy fails";
    v.log.push_back("Robinson's CQ refuted; sparse-nondegeneracy implies Robinson's CQ");
    finish_sparse_robinson();
    return res;
  }

  v.status = Status::Undetermined;
  v.samples = static_cast<int>(columns.size());
  v.reason = "no basis satisfying items 1 and 2 was found and no refutation applies";
  v.log.push_back(v.reason);

  if (opt.sparse_robinson) {
    res.sparse_robinson = Status::Undetermined;
    if (best_item2) {
      // Experimental: a d with mask(E^T DG[d] E) > 0 excludes PSD multipliers
      // supported on I.
      const SparseBasisScore s = score_sparse_basis(p, x, *best_item2);
      const std::vector<Matrix> b = reduced_partials(p, x, *best_item2);
      const Matrix w = equality_jacobian_t(p, x);
      Matrix z = Matrix::Identity(p.n, p.n);
      if (q > 0) {
        Matrix wq = w;
        modified_gram_schmidt(wq);
        z = orthonormal_complement(wq, p.n);
      }
      std::vector<Matrix> mats;
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        Matrix acc = Matrix::Zero(k, k);
        for (int l = 0; l < p.n; ++l) acc += z(l, c) * b[static_cast<std::size_t>(l)];
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j)
            if (!s.pattern.contains(i, j)) acc(i, j) = 0.0;
        mats.push_back(acc);
      }
      const LambdaMinSearch ls = maximize_lambda_min(mats, opt.check.primal_iters, opt.check.primal_restarts,
                                                     opt.check.seed);
      v.log.push_back("experimental sparse-Robinson: masked lambda_min " + fmt(ls.value));
      if (ls.value > 1e-6) res.sparse_robinson = Status::HoldsCertified;
    }
  }
  return res;
}

CqVerdict check_sparse_ndg(const NsdpProblem& p, const Vector& x, const SparseOptions& opt) {
  return check_sparse_ndg_full(p, x, opt).verdict;
}

CqVerdict check_forsgren(const NsdpProblem& p, const Vector& x, const std::optional<Matrix>& u_in,
                         const CheckOptions& opt) {
  CqVerdict v;
  const KernelBasis kb = feasible_kernel(p, x, opt.tol_rank);
  const SymMat g = eval_G(p, x);
  const int m = p.m();
  const int q = static_cast<int>(p.equalities.size());
  Matrix u = u_in ? *u_in : eigh(g).vectors;
  if (u.rows() != m || u.cols() != m) throw DimensionError("check_forsgren: U must be m x m");
  if (orthogonality_defect(u) > 1e-10) throw PreconditionError("check_forsgren: U is not orthogonal");
  const Matrix d = u.transpose() * g.dense() * u;
  Matrix off = d;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 1e-8 * (1.0 + g.norm_inf()))
    throw PreconditionError("check_forsgren: U does not diagonalize G(x)");
  const double scale = std::max(1.0, d.diagonal().maxCoeff());
  std::vector<int> ker;
  for (int i = 0; i < m; ++i)
    if (d(i, i) <= opt.tol_rank * scale) ker.push_back(i);
  const int k = static_cast<int>(ker.size());
  if (k != kb.kernel_dim()) throw PreconditionError("check_forsgren: U does not separate the kernel of G(x)");
  v.log.push_back("rank r = " + std::to_string(m - k) + ", kernel dimension " + std::to_string(k));

  const Matrix w = equality_jacobian_t(p, x);
  if (k == 0) {
    const LiResult li = li_test(w, opt.tol_rank);
    v.status = li.independent ? Status::HoldsCertified : Status::Fails;
    v.log.push_back("Ker G(x) = {0}: Forsgren's CQ reduces to the equality gradients");
    if (!li.independent) {
      Witness wt;
      wt.kind = "li_dependence";
      append_equality_labels(p, wt.labels);
      wt.basis = Matrix(m, 0);
      wt.coefficients = li.coeffs;
      v.witness = wt;
    }
    return v;
  }
  Matrix e(m, k);
  for (int c = 0; c < k; ++c) e.col(c) = u.col(ker[static_cast<std::size_t>(c)]);

  TildeOptions topt;
  topt.seed = opt.seed;
  const ReducedMap tilde = tilde_map(p, x, u, topt, opt.tol_rank);
  v.log.push_back("Schur-complement pattern: " + std::to_string(tilde.pattern.index_set.size()) + " entries" +
                  (tilde.pattern.source == PatternSource::Sampled
                       ? " (sampled at " + std::to_string(tilde.pattern.points) + " points)"
                       : " (exact)"));

  // T = E^T S(G~) E in svec coordinates.
  const int nk = k * (k + 1) / 2;
  Matrix gens(nk, static_cast<Eigen::Index>(tilde.pattern.index_set.size()));
  Eigen::Index col = 0;
  for (const auto& [i, j] : tilde.pattern.index_set) {
    const Matrix sym = 0.5 * (e.row(i).transpose() * e.row(j) + e.row(j).transpose() * e.row(i));
    gens.col(col++) = svec(sym);
  }
  const Matrix t = range_basis(gens);
  const int tdim = static_cast<int>(t.cols());
  v.log.push_back("dim E^T S(G~) E = " + std::to_string(tdim) + " of " + std::to_string(nk));

  const std::vector<Matrix> b = reduced_partials(p, x, e);
  Matrix a(p.n, tdim);
  for (int l = 0; l < p.n; ++l)
    for (int s = 0; s < tdim; ++s) a(l, s) = svec(b[static_cast<std::size_t>(l)]).dot(t.col(s));

  // (F1): M in T and DG(x)^*[E M E^T] = 0 imply M = 0.
  Matrix fam(p.n, tdim + q);
  fam << a, w;
  if (tdim + q > 0) {
    const LiResult li = li_test(fam, opt.tol_rank);
    v.log.push_back("(F1) adjoint restricted to T: rank " + std::to_string(li.rank) + " of " +
                    std::to_string(tdim + q));
    if (!li.independent) {
      v.status = Status::Fails;
      const Vector gamma = li.coeffs.head(tdim);
      Witness wt;
      if (gamma.norm() > 1e-9) {
        wt.kind = "subspace_dependence";
        wt.basis = e;
        wt.matrix = smat(t * gamma, k) / gamma.norm();
        wt.coefficients = li.coeffs.tail(q) / gamma.norm();
        wt.subspace = t;
        wt.residual = (fam * li.coeffs).norm() / gamma.norm();
        wt.note = "(F1) fails: nonzero M in T with DG(x)^*[E M E^T] = 0";
      } else {
        wt.kind = "li_dependence";
        append_equality_labels(p, wt.labels);
        wt.basis = Matrix(m, 0);
        wt.coefficients = li.coeffs.tail(q).normalized();
        wt.note = "equality gradients dependent";
      }
      v.witness = wt;
      return v;
    }
  }

  // (F2): some M in T positive definite.
  std::vector<Matrix> mats;
  for (int s = 0; s < tdim; ++s) mats.push_back(smat(t.col(s), k));
  const LambdaMinSearch ls = maximize_lambda_min(mats, opt.primal_iters, opt.primal_restarts, opt.seed);
  v.log.push_back("(F2) best lambda_min over the unit ball of T: " + fmt(ls.value));
  if (tdim > 0 && ls.value > 1e-6) {
    v.status = Status::HoldsCertified;
    Witness wt;
    wt.kind = "forsgren_certificate";
    wt.basis = e;
    wt.matrix = smat(t * ls.z, k);
    wt.subspace = t;
    wt.residual = ls.value;
    wt.note = "(F1) holds and M in T is positive definite";
    v.witness = wt;
    return v;
  }
  // Dual certificate: Z >= 0, Z != 0, orthogonal to T.
  std::vector<Vector> us;
  for (Eigen::Index c = 0; c < ls.min_vectors.cols(); ++c) us.push_back(ls.min_vectors.col(c));
  for (int i = 0; i < k; ++i) us.push_back(Vector::Unit(k, i));
  for (const Matrix& mt : mats) {
    const Spectral s = eigh(SymMat(mt));
    for (int c = 0; c < k; ++c) us.push_back(s.vectors.col(c));
  }
  Matrix proj(tdim, static_cast<Eigen::Index>(us.size()));
  for (std::size_t c = 0; c < us.size(); ++c)
    proj.col(static_cast<Eigen::Index>(c)) = tdim ? Vector(t.transpose() * svec(us[c] * us[c].transpose())) : Vector();
  if (tdim == 0) {
    v.status = Status::Fails;
    Witness wt;
    wt.kind = "dual_matrix";
    wt.basis = e;
    wt.matrix = Matrix::Identity(k, k) / std::sqrt(static_cast<double>(k));
    wt.subspace = t;
    wt.note = "(F2) fails: T = {0}";
    v.witness = wt;
    return v;
  }
  const PliResult pli = pli_test(proj);
  if (!pli.pos_independent) {
    Matrix zmat = Matrix::Zero(k, k);
    for (std::size_t c = 0; c < us.size(); ++c) zmat += pli.alpha(static_cast<Eigen::Index>(c)) * us[c] * us[c].transpose();
    zmat /= zmat.norm();
    v.status = Status::Fails;
    Witness wt;
    wt.kind = "dual_matrix";
    wt.basis = e;
    wt.matrix = zmat;
    wt.subspace = t;
    wt.residual = (t.transpose() * svec(zmat)).cwiseAbs().maxCoeff();
    wt.note = "(F2) fails: nonzero PSD Z orthogonal to T";
    v.witness = wt;
    v.log.push_back("(F2) refuted by a PSD matrix orthogonal to T");
    return v;
  }
  v.status = Status::Undetermined;
  v.reason = "(F1) holds but no positive definite element of T was found and no dual certificate applies";
  v.log.push_back(v.reason);
  return v;
}

FacialReduction facial_reduce(const NsdpProblem& p, const Vector& x, double tol_rank) {
  FacialReduction fr;
  NsdpProblem cur = p;
  cur.constraint = MatrixPoly(p.m(), p.n);
  for (const auto& [ij, poly] : p.constraint.entries()) cur.constraint.set(ij.first, ij.second, poly);
  Matrix v1 = Matrix::Identity(p.m(), p.m());
  Matrix v2(p.m(), 0);
  const int base_eqs = static_cast<int>(p.equalities.size());
  bool exhausted = false;

  for (int round = 0; round < p.m() && !exhausted; ++round) {
    const KernelBasis kb = feasible_kernel(cur, x, tol_rank);
    if (kb.kernel_dim() == 0) break;
    const ReducedMap hat = hat_map(cur, x, kb);
    const std::vector<int> j = hat.pattern.missing_diagonal();
    if (j.empty()) break;
    const int mc = cur.m();
    const int omega = static_cast<int>(j.size());
    Matrix w2(mc, omega);
    for (int c = 0; c < omega; ++c) w2.col(c) = kb.cols.col(j[static_cast<std::size_t>(c)]);
    const Matrix w1 = orthonormal_complement(w2, mc);

    // V2^T G(x) V = 0: the block V2^T G V1 and the upper triangle of V2^T G V2.
    const double thr = hat_threshold(cur.constraint);
    std::vector<Poly> fresh = bilinear_entries(cur.constraint, w2, w1, thr);
    const std::vector<Poly> sq = bilinear_entries(cur.constraint, w2, w2, thr);
    for (int a = 0; a < omega; ++a)
      for (int c = a; c < omega; ++c) fresh.push_back(sq[static_cast<std::size_t>(a * omega + c)]);
    for (Poly& h : fresh) {
      if (h.is_zero()) continue;
      const double lead = h.terms().front().coef;
      const Poly normalized = h * (1.0 / lead);
      bool duplicate = false;
      for (const Poly& e : cur.equalities) {
        if (e.terms().empty()) continue;
        const Poly en = e * (1.0 / e.terms().front().coef);
        if ((en - normalized).pruned(1e-12).is_zero()) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) cur.equalities.push_back(normalized);
    }

    fr.J.push_back(j);
    fr.omega.push_back(omega);
    v2.conservativeResize(Eigen::NoChange, v2.cols() + omega);
    v2.rightCols(omega) = v1 * w2;
    ++fr.rounds;
    if (mc - omega == 0) {
      // The whole constraint collapses into equalities; keep a trivial 1x1 block.
      MatrixPoly one(1, p.n);
      one.set(0, 0, Poly::constant(p.n, 1.0));
      cur.constraint = one;
      v1 = Matrix(p.m(), 0);
      exhausted = true;
      break;
    }
    cur.constraint = congruence(cur.constraint, w1, thr);
    v1 = v1 * w1;
  }
  cur.name = p.name + (fr.rounds ? "_reduced" : "");
  fr.V1 = v1;
  fr.V2 = v2;
  fr.emitted_equalities = static_cast<int>(cur.equalities.size()) - base_eqs;
  fr.reduced_problem = cur;
  return fr;
}

CardinalityReport sparse_card_invariance(const NsdpProblem& p, const Vector& x, int trials, std::uint64_t seed,
                                         double tol_rank) {
  CardinalityReport rep;
  const KernelBasis kb = feasible_kernel(p, x, tol_rank);
  const int k = kb.kernel_dim();
  if (k == 0) {
    rep.detail = "kernel is trivial";
    return rep;
  }
  const std::vector<Matrix> b = reduced_partials(p, x, kb.cols);
  std::vector<Matrix> cands = rotation_candidates(b, k, trials, seed);
  std::mt19937_64 rng(seed ^ 0x1234ULL);
  std::vector<Matrix> extra;
  for (const Matrix& c : cands) {
    if (!score_sparse_basis(p, x, kb.cols * c).item1) continue;
    // Signed permutations of a passing basis also pass.
    for (int t = 0; t < 3; ++t) {
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Matrix pc(k, k);
      for (int a = 0; a < k; ++a) pc.col(a) = c.col(perm[static_cast<std::size_t>(a)]) * ((rng() & 1) ? -1.0 : 1.0);
      extra.push_back(pc);
    }
  }
  cands.insert(cands.end(), extra.begin(), extra.end());
  for (const Matrix& c : cands) {
    ++rep.trials;
    const SparseBasisScore s = score_sparse_basis(p, x, kb.cols * c);
    if (!s.item1) continue;
    ++rep.passing;
    rep.cardinalities.push_back(s.cardinality);
  }
  for (int c : rep.cardinalities)
    if (c != rep.cardinalities.front()) rep.consistent = false;
  std::ostringstream os;
  os << rep.passing << " of " << rep.trials << " bases pass item 1";
  if (!rep.cardinalities.empty()) os << "; |I| = " << rep.cardinalities.front();
  if (!rep.consistent) os << "; cardinalities differ";
  rep.detail = os.str();
  return rep;
}

}  // namespace nsdpcq
