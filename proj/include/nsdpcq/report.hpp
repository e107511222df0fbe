#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/model.hpp"
#include "nsdpcq/penalty.hpp"

namespace nsdpcq {

struct AnalysisOptions {
  double tol_rank = kRankTol;
  int samples = 200;
  int traces = 8;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool timing = true;
  std::optional<Matrix> forsgren_u;
};

/// Checker keys, in report order.
inline const std::vector<std::string>& checker_names() {
  static const std::vector<std::string> names = {"nondegeneracy", "robinson",       "sparse_ndg",
                                                 "forsgren",      "weak_ndg_probe", "weak_robinson_probe"};
  return names;
}

/// Implications between the conditions: (stronger, weaker).
const std::vector<std::pair<std::string, std::string>>& implication_edges();

struct AnalysisReport {
  std::string problem;
  Vector point;
  int rank = 0;
  Vector eigenvalues;
  std::map<std::string, CqVerdict> verdicts;
  std::map<std::string, double> timing;  // milliseconds per checker
  std::vector<std::string> lattice_warnings;
  std::uint64_t seed = 0;
};

/// Runs every checker at x with a shared seed. Throws NotFeasibleError when
/// x is not feasible.
AnalysisReport analyze(const NsdpProblem& p, const Vector& x, const AnalysisOptions& opt = {});

/// Edges (a, b) with a holding and b failing.
std::vector<std::string> lattice_violations(const std::map<std::string, CqVerdict>& verdicts);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);
nlohmann::json witness_to_json(const Witness& w);
nlohmann::json verdict_to_json(const CqVerdict& v);
/// Top-level keys: problem, point, rank, eigenvalues, verdicts, witnesses, seed, timing.
nlohmann::json report_to_json(const AnalysisReport& r);
std::string report_to_text(const AnalysisReport& r);

/// One JSON object per outer iterate.
std::string trace_to_jsonl(const PenaltyTrace& t);
std::string trace_table(const PenaltyTrace& t);

}  // namespace nsdpcq
