#include "nsdpcq/report.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include "nsdpcq/sparse.hpp"

namespace nsdpcq {

using nlohmann::json;

const std::vector<std::pair<std::string, std::string>>& implication_edges() {
  static const std::vector<std::pair<std::string, std::string>> edges = {
      {"nondegeneracy", "weak_ndg_probe"}, {"nondegeneracy", "forsgren"}, {"nondegeneracy", "sparse_ndg"},
      {"sparse_ndg", "robinson"},          {"forsgren", "robinson"},      {"robinson", "weak_robinson_probe"},
      {"weak_ndg_probe", "weak_robinson_probe"}};
  return edges;
}

std::vector<std::string> lattice_violations(const std::map<std::string, CqVerdict>& verdicts) {
  std::vector<std::string> out;
  for (const auto& [a, b] : implication_edges()) {
    const auto ia = verdicts.find(a), ib = verdicts.find(b);
    if (ia == verdicts.end() || ib == verdicts.end()) continue;
    if (holds(ia->second.status) && ib->second.status == Status::Fails)
      out.push_back(a + " " + to_string(ia->second.status) + " but " + b + " Fails");
  }
  return out;
}

AnalysisReport analyze(const NsdpProblem& p, const Vector& x, const AnalysisOptions& opt) {
  AnalysisReport r;
  r.problem = p.name;
  r.point = x;
  r.seed = opt.seed;
  const KernelBasis kb = feasible_kernel(p, x, opt.tol_rank);
  r.rank = kb.rank_r;
  r.eigenvalues = eigh(eval_G(p, x)).values;

  CheckOptions co;
  co.tol_rank = opt.tol_rank;
  co.samples = opt.samples;
  co.seed = opt.seed;
  co.jobs = opt.jobs;
  using clock = std::chrono::steady_clock;
  auto timed = [&](const std::string& key, auto&& fn) {
    const auto t0 = clock::now();
    r.verdicts[key] = fn();
    r.timing[key] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  timed("nondegeneracy", [&] { return check_nondegeneracy(p, x, co); });
  timed("robinson", [&] { return check_robinson(p, x, co); });
  timed("sparse_ndg", [&] {
    SparseOptions so;
    so.check = co;
    so.bases = opt.samples;
    return check_sparse_ndg(p, x, so);
  });
  timed("forsgren", [&] { return check_forsgren(p, x, opt.forsgren_u, co); });
  ProbeOptions po;
  po.traces = opt.traces;
  po.seed = opt.seed;
  po.tol_rank = opt.tol_rank;
  po.jobs = opt.jobs;
  std::vector<PenaltyTrace> traces;
  timed("weak_ndg_probe", [&] {
    traces = probe_traces(p, x, po);
    return probe_weak_ndg(p, x, traces, po).verdict;
  });
  timed("weak_robinson_probe", [&] { return probe_weak_robinson(p, x, traces, po).verdict; });
  r.lattice_warnings = lattice_violations(r.verdicts);
  if (!opt.timing) r.timing.clear();
  return r;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json witness_to_json(const Witness& w) {
  json j;
  j["kind"] = w.kind;
  j["basis"] = matrix_to_json(w.basis);
  json labels = json::array();
  for (const auto& [a, b] : w.labels) labels.push_back({a, b});
  j["labels"] = labels;
  j["coefficients"] = vector_to_json(w.coefficients);
  if (w.direction.size()) j["direction"] = vector_to_json(w.direction);
  if (w.matrix.size()) j["matrix"] = matrix_to_json(w.matrix);
  if (w.subspace.size()) j["subspace"] = matrix_to_json(w.subspace);
  j["residual"] = w.residual;
  j["note"] = w.note;
  return j;
}

json verdict_to_json(const CqVerdict& v) {
  json j;
  j["status"] = to_string(v.status);
  j["samples"] = v.samples;
  j["reason"] = v.reason;
  j["log"] = v.log;
  return j;
}

json report_to_json(const AnalysisReport& r) {
  json j;
  j["problem"] = r.problem;
  j["point"] = vector_to_json(r.point);
  j["rank"] = r.rank;
  j["eigenvalues"] = vector_to_json(r.eigenvalues);
  json verdicts = json::object(), witnesses = json::object();
  for (const auto& [k, v] : r.verdicts) {
    verdicts[k] = verdict_to_json(v);
    if (v.witness) witnesses[k] = witness_to_json(*v.witness);
  }
  j["verdicts"] = verdicts;
  j["witnesses"] = witnesses;
  j["seed"] = r.seed;
  j["timing"] = r.timing;
  if (!r.lattice_warnings.empty()) j["lattice_warnings"] = r.lattice_warnings;
  return j;
}

std::string report_to_text(const AnalysisReport& r) {
  std::ostringstream os;
  os << "problem: " << r.problem << "\n";
  os << "point:";
  for (Eigen::Index i = 0; i < r.point.size(); ++i) os << " " << r.point(i);
  os << "\nrank G(x) = " << r.rank << " of " << r.eigenvalues.size() << "; eigenvalues:";
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) os << " " << r.eigenvalues(i);
  os << "\n\n";
  for (const std::string& k : checker_names()) {
    const auto it = r.verdicts.find(k);
    if (it == r.verdicts.end()) continue;
    const CqVerdict& v = it->second;
    os << std::left << std::setw(22) << k << to_string(v.status);
    if (v.status == Status::HoldsSampled) os << " (" << v.samples << " traces)";
    os << "\n";
    for (const std::string& line : v.log) os << "    " << line << "\n";
    if (v.witness) os << "    witness: " << v.witness->kind << (v.witness->note.empty() ? "" : ", " + v.witness->note) << "\n";
  }
  for (const std::string& w : r.lattice_warnings) os << "warning: implication violated: " << w << "\n";
  return os.str();
}

std::string trace_to_jsonl(const PenaltyTrace& t) {
  std::ostringstream os;
  for (const PenaltyIterate& it : t.iterates) {
    json j;
    j["k"] = it.k;
    j["rho"] = it.rho;
    j["x"] = vector_to_json(it.x);
    j["y"] = matrix_to_json(it.y.dense());
    j["eigenvalues"] = vector_to_json(it.eigenvalues);
    j["eigenvectors"] = matrix_to_json(it.eigenvectors);
    j["equality_multipliers"] = vector_to_json(it.equality_multipliers);
    j["stationarity_residual"] = it.stationarity_residual;
    j["multiplier_norm"] = it.multiplier_norm;
    j["converged"] = it.converged;
    j["inner_iters"] = it.inner_iters;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string trace_table(const PenaltyTrace& t) {
  std::ostringstream os;
  os << std::setw(4) << "k" << std::setw(12) << "rho" << std::setw(16) << "|Y|_F" << std::setw(16) << "residual"
     << std::setw(8) << "inner" << "\n";
  for (const PenaltyIterate& it : t.iterates) {
    os << std::setw(4) << it.k << std::setw(12) << std::setprecision(3) << std::scientific << it.rho << std::setw(16)
       << std::setprecision(6) << it.multiplier_norm << std::setw(16) << it.stationarity_residual << std::setw(8)
       << it.inner_iters << (it.converged ? "" : "  (not converged)") << "\n";
    os << std::defaultfloat;
  }
  os << "x = ";
  for (Eigen::Index i = 0; i < t.converged_point.size(); ++i) os << (i ? "," : "") << t.converged_point(i);
  os << "\n";
  if (!t.note.empty()) os << t.note << "\n";
  return os.str();
}

}  // namespace nsdpcq
