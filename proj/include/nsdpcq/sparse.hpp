#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/model.hpp"

namespace nsdpcq {

using IndexSet = std::set<std::pair<int, int>>;

enum class PatternSource { ExactPolynomial, Sampled };

/// I(F, x): entries (i, j), i <= j, that are not structurally zero.
struct SparsityPattern {
  int dim = 0;
  IndexSet index_set;
  PatternSource source = PatternSource::ExactPolynomial;
  int points = 0;
  double tol = 0.0;

  bool contains(int i, int j) const { return index_set.count({std::min(i, j), std::max(i, j)}) > 0; }
  /// Diagonal indices absent from the pattern.
  std::vector<int> missing_diagonal() const;
};

SparsityPattern exact_pattern(const MatrixPoly& g);

struct ReducedMap {
  enum class Kind { Hat, Tilde };
  Kind kind = Kind::Hat;
  Matrix transform;  // E (Hat) or U = [P, E] (Tilde)
  int rank_r = 0;
  std::optional<MatrixPoly> poly;  // exact entries (Hat only)
  std::function<SymMat(const Vector&)> evaluator;
  SparsityPattern pattern;
};

/// Coefficient threshold used when a numeric basis is pushed through the
/// polynomial constraint: 1e-12 * max(1, largest coefficient of G).
double hat_threshold(const MatrixPoly& g);

ReducedMap hat_map(const NsdpProblem& p, const Vector& x, const KernelBasis& e);

struct TildeOptions {
  int samples = 32;
  double delta = 1e-3;
  double tau = 1e-9;
  std::uint64_t seed = 0;
};
/// Schur-complement map; U defaults to the eigenvectors of G(x).
ReducedMap tilde_map(const NsdpProblem& p, const Vector& x, const std::optional<Matrix>& u = std::nullopt,
                     const TildeOptions& opt = {}, double tol_rank = kRankTol);

struct SparseOptions {
  CheckOptions check;
  int bases = 200;
  bool sparse_robinson = false;
};

struct SparseNdgResult {
  CqVerdict verdict;
  /// Experimental PSD-restricted variant, evaluated only when requested.
  std::optional<Status> sparse_robinson;
};

SparseNdgResult check_sparse_ndg_full(const NsdpProblem& p, const Vector& x, const SparseOptions& opt = {});
CqVerdict check_sparse_ndg(const NsdpProblem& p, const Vector& x, const SparseOptions& opt = {});

/// Item 1 and item 2 for one basis.
struct SparseBasisScore {
  bool item2 = false;
  bool item1 = false;
  int cardinality = 0;
  double sigma_min = 0.0;
  SparsityPattern pattern;
};
SparseBasisScore score_sparse_basis(const NsdpProblem& p, const Vector& x, const Matrix& e);

CqVerdict check_forsgren(const NsdpProblem& p, const Vector& x, const std::optional<Matrix>& u = std::nullopt,
                         const CheckOptions& opt = {});

struct FacialReduction {
  std::vector<std::vector<int>> J;  // per round, indices into that round's kernel basis
  std::vector<int> omega;           // |J| per round
  Matrix V1;                        // m x (m - sum omega), original coordinates
  Matrix V2;                        // m x sum omega
  NsdpProblem reduced_problem;
  int rounds = 0;
  int emitted_equalities = 0;
};
FacialReduction facial_reduce(const NsdpProblem& p, const Vector& x, double tol_rank = kRankTol);

struct CardinalityReport {
  int trials = 0;
  int passing = 0;
  std::vector<int> cardinalities;  // one per passing basis, in trial order
  bool consistent = true;
  std::string detail;
};
CardinalityReport sparse_card_invariance(const NsdpProblem& p, const Vector& x, int trials, std::uint64_t seed,
                                         double tol_rank = kRankTol);

/// Left/right congruence A^T G(x) B as a (non-symmetric) list of polynomials,
/// row-major, coefficient magnitudes at most `prune` dropped.
std::vector<Poly> bilinear_entries(const MatrixPoly& g, const Matrix& a, const Matrix& b, double prune);

}  // namespace nsdpcq
