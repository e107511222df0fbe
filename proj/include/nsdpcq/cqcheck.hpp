#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsdpcq/model.hpp"
#include "nsdpcq/symcore.hpp"

namespace nsdpcq {

enum class Status { HoldsCertified, HoldsSampled, Fails, Undetermined };
std::string to_string(Status s);
bool holds(Status s);

/// Label of a column in a vector family: (i,j) with 0 <= i <= j for v_ij,
/// (kEqualityRow, q) for the gradient of equality q, (kActiveRow, i) for the
/// gradient of the i-th diagonal entry of a structurally diagonal constraint.
using TermLabel = std::pair<int, int>;
inline constexpr int kEqualityRow = -1;
inline constexpr int kActiveRow = -2;

struct Witness {
  /// One of: li_dependence, pli_dependence, direction, kernel_dimension,
  /// subspace_dependence, dual_matrix, basis, pli_basis, sparse_basis,
  /// forsgren_certificate.
  std::string kind;
  Matrix basis;  // kernel basis used (m x k), may be empty
  std::vector<TermLabel> labels;
  Vector coefficients;  // combination over `labels`
  Vector direction;     // primal Robinson direction d
  Matrix matrix;        // M (subspace_dependence) or Z (dual_matrix)
  Matrix subspace;      // svec columns spanning the subspace T, when relevant
  double residual = 0.0;
  std::string note;
};

struct CqVerdict {
  Status status = Status::Undetermined;
  int samples = 0;
  std::string reason;
  std::optional<Witness> witness;
  std::vector<std::string> log;
};

struct CheckOptions {
  double tol_rank = kRankTol;
  int samples = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  int primal_iters = 200;
  int primal_restarts = 5;
  int refine_steps = 50;
};

/// v_ij(x, E) = E_i^T D_l G(x) E_j for all i <= j of the kernel basis.
struct VijFamily {
  KernelBasis basis;
  Vector point;
  std::vector<TermLabel> labels;  // (i,j), i <= j, row-major
  Matrix vecs;                    // n x labels.size()

  const Vector vec(int i, int j) const;
  int size() const { return static_cast<int>(labels.size()); }
};

/// B_l = E^T D_l G(x) E for l = 0..n-1 (each k x k).
std::vector<Matrix> reduced_partials(const NsdpProblem& p, const Vector& x, const Matrix& e);

VijFamily build_vij(const NsdpProblem& p, const Vector& x, const KernelBasis& e);
/// Only the diagonal v_ii, as columns of an n x k matrix.
Matrix diagonal_vij(const NsdpProblem& p, const Vector& x, const Matrix& e);

struct LiResult {
  bool independent = true;
  Vector coeffs;  // unit null vector of the Gram matrix when dependent
  double sigma_min = 0.0;
  int rank = 0;
};
/// Linear independence of the columns via Gram-matrix eigenvalues.
LiResult li_test(const Matrix& vectors, double tol = kRankTol);

struct PliResult {
  bool pos_independent = true;
  Vector alpha;       // cone coefficients (>= 0, sum 1) when dependent
  Vector beta;        // free coefficients of the equality columns
  double margin = 0;  // min || V a + W b ||_1 over the LP, divided by the data scale
};
/// Positive linear independence of the columns of V with free columns W:
/// dependent iff V a + W b = 0 for some a >= 0, sum a = 1.
PliResult pli_test(const Matrix& v, const Matrix& w, double tol = 1e-9);
PliResult pli_test(const Matrix& v, double tol = 1e-9);

/// Fixed kernel basis of G(x) after the feasibility checks (PSD within the
/// rank tolerance, equalities within 1e-8).
KernelBasis feasible_kernel(const NsdpProblem& p, const Vector& x, double tol_rank = kRankTol);

CqVerdict check_nondegeneracy(const NsdpProblem& p, const Vector& x, const CheckOptions& opt = {});
CqVerdict check_robinson(const NsdpProblem& p, const Vector& x, const CheckOptions& opt = {});

/// Maximizes lambda_min(sum_j z_j M_j) over the unit ball ||z|| <= 1 by
/// projected supergradient ascent with step 1/sqrt(t).
struct LambdaMinSearch {
  double value = -1.0;
  Vector z;
  Matrix min_vectors;  // eigenvectors of the near-minimal eigenvalues at the best z
};
LambdaMinSearch maximize_lambda_min(const std::vector<Matrix>& mats, int iters, int restarts,
                                    std::uint64_t seed);

struct KktCertificate {
  SymMat multiplier{1};
  Vector equality_multipliers;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  bool multiplier_psd = true;
};
/// Residuals for the Lagrangian L = f - <G, Y> - sum mu_i h_i.
KktCertificate kkt_residual(const NsdpProblem& p, const Vector& x, const SymMat& y, const Vector& mu);
/// Best multiplier of the form Y = E Yt E^T, Yt >= 0, with free mu.
KktCertificate estimate_multiplier(const NsdpProblem& p, const Vector& x, double tol_rank = kRankTol);

/// Recomputes a witness from the problem data. Returns the recomputed
/// violation measure; the witness is valid when `ok` is true.
struct WitnessCheck {
  bool ok = false;
  double residual = 0.0;
  std::string detail;
};
WitnessCheck recheck_witness(const NsdpProblem& p, const Vector& x, const Witness& w,
                             double tol = 1e-7);

/// Family of the labelled vectors at (x, basis).
Matrix labelled_family(const NsdpProblem& p, const Vector& x, const Matrix& basis,
                       const std::vector<TermLabel>& labels);

}  // namespace nsdpcq
