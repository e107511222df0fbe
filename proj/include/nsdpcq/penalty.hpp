#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/model.hpp"
#include "nsdpcq/symcore.hpp"

namespace nsdpcq {

/// Outer schedule rho_k = rho0 * rho_mult^k around the regularization
/// center `anchor`.
struct PenaltyConfig {
  double rho0 = 1.0;
  double rho_mult = 10.0;
  int outer_iters = 12;
  /// Relative inner tolerance: ||grad phi|| <= inner_tol * (1 + |grad f| + |x - anchor| + |DG^*[Y]|).
  double inner_tol = 1e-8;
  int inner_max_iters = 5000;
  Vector anchor;
  std::uint64_t seed = 0;

  /// Throws PreconditionError when rho0 <= 0, rho_mult <= 1 or a tolerance is not positive.
  void validate(int n) const;
};

struct PenaltyIterate {
  int k = 0;
  double rho = 0.0;
  Vector x;
  SymMat y;                   // rho * proj_psd(-G(x)), exact by construction
  Vector eigenvalues;         // of G(x), descending
  Matrix eigenvectors;        // matching columns
  Vector equality_multipliers;  // rho * h(x)
  double stationarity_residual = 0.0;
  double multiplier_norm = 0.0;
  bool converged = true;
  int inner_iters = 0;
};

struct PenaltyTrace {
  std::vector<PenaltyIterate> iterates;
  Vector converged_point;
  bool divergence_suspected = false;
  std::string note;
};

/// phi_rho(x) = f + 0.5|x - anchor|^2 + (rho/2)|proj_psd(-G)|^2 + (rho/2) sum h^2.
double penalty_value(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho);
/// grad f + (x - anchor) - DG^*[rho proj_psd(-G)] + rho sum h grad h.
Vector penalty_gradient(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho);

struct InnerResult {
  Vector x;
  bool converged = false;
  int iters = 0;
  double grad_norm = 0.0;
};
/// L-BFGS (memory 10) with Armijo backtracking (c = 1e-4, halving).
InnerResult inner_minimize(const NsdpProblem& p, const PenaltyConfig& cfg, double rho, const Vector& x_start);

/// Full outer loop from x_start (anchor when absent), warm-started and
/// extrapolated along the previous step.
PenaltyTrace run_penalty(const NsdpProblem& p, const PenaltyConfig& cfg,
                         const std::optional<Vector>& x_start = std::nullopt);

/// Fills the derived fields of an iterate (Y, eigenpairs, residual) at x.
PenaltyIterate make_iterate(const NsdpProblem& p, const Vector& x, const Vector& anchor, double rho, int k);

/// Sequence x^k = xbar + t_k d with t_k = 10^-1 .. 10^-steps, recorded as a
/// trace with rho = 0.
PenaltyTrace path_trace(const NsdpProblem& p, const Vector& xbar, const Vector& d, int steps = 7);

struct EigbasisSequence {
  std::vector<int> index;             // iterate index of each entry
  std::vector<Matrix> bases;          // aligned m x (m - r) eigenvector blocks
  std::vector<Vector> values;         // eigenvalue of each aligned column
};
/// Eigenvectors of the m - r smallest eigenvalues along the trace, greedily
/// matched column by column to the previous iterate. Empty when m - r = 0;
/// otherwise throws PreconditionError when fewer than three iterates are usable.
EigbasisSequence extract_eigbasis_sequence(const PenaltyTrace& trace, int rank);

struct SequenceProbeResult {
  KernelBasis limit_basis;
  double sigma_min = 0.0;
  double margin = 0.0;
  Status li_verdict = Status::Undetermined;
  Status pli_verdict = Status::Undetermined;
  bool exhaustive = false;  // every eigenvalue cluster of the tail is simple
  Matrix family;            // v_ii(xbar, limit basis) and equality gradients
  std::vector<std::string> rotation_search_log;
};

struct ProbeOutcome {
  std::vector<SequenceProbeResult> per_trace;
  CqVerdict verdict;
};

struct ProbeOptions {
  int traces = 8;
  int rotations = 100;  // 60 random block rotations + 40 Givens steps
  std::uint64_t seed = 0;
  double tol_rank = kRankTol;
  int jobs = 1;
};

/// Axis paths, random straight paths and multiplier-driven penalty traces
/// towards xbar; only traces whose last iterate is within 1e-6 are kept.
std::vector<PenaltyTrace> probe_traces(const NsdpProblem& p, const Vector& xbar, const ProbeOptions& opt);

ProbeOutcome probe_weak_ndg(const NsdpProblem& p, const Vector& xbar, const std::vector<PenaltyTrace>& traces,
                            const ProbeOptions& opt = {});
ProbeOutcome probe_weak_robinson(const NsdpProblem& p, const Vector& xbar, const std::vector<PenaltyTrace>& traces,
                                 const ProbeOptions& opt = {});

/// |Y^K| / |Y^{K-2}| >= 2 over the last three outer iterates.
bool multiplier_divergence(const PenaltyTrace& t);

}  // namespace nsdpcq
