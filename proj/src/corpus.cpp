#include "nsdpcq/corpus.hpp"

#include <chrono>

#include "nsdpcq/errors.hpp"
#include "nsdpcq/problem_io.hpp"

namespace nsdpcq {

namespace {

constexpr Status HC = Status::HoldsCertified;
constexpr Status HS = Status::HoldsSampled;
constexpr Status F = Status::Fails;

CorpusEntry make(std::string id, const char* json_text, const std::string& point, std::string source,
                 std::map<std::string, Status> expected) {
  CorpusEntry e;
  e.id = std::move(id);
  e.problem = parse_problem(json_text);
  e.point = parse_point(point, e.problem.n);
  e.source = std::move(source);
  e.expected = std::move(expected);
  return e;
}

std::vector<CorpusEntry> build() {
  std::vector<CorpusEntry> out;
  out.push_back(make("diag3", R"({"name": "diag3", "n": 3, "m": 3, "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1, 0, 0]}]},
      {"i": 1, "j": 1, "poly": [{"c": 1, "e": [0, 1, 0]}]},
      {"i": 2, "j": 2, "poly": [{"c": 1, "e": [0, 0, 1]}]}]})",
                     "0,0,0", "diag(x1,x2,x3) at the origin: weak- but not nondegenerate",
                     {{"nondegeneracy", F}, {"weak_ndg_probe", HS}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", HC}, {"weak_robinson_probe", HC}}));
  out.push_back(make("diag3_kkt", R"({"name": "diag3_kkt", "n": 3, "m": 3,
      "objective": [{"c": 1, "e": [1, 0, 0]}, {"c": 1, "e": [0, 1, 0]}, {"c": 1, "e": [0, 0, 1]}],
      "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1, 0, 0]}]},
      {"i": 1, "j": 1, "poly": [{"c": 1, "e": [0, 1, 0]}]},
      {"i": 2, "j": 2, "poly": [{"c": 1, "e": [0, 0, 1]}]}]})",
                     "0,0,0", "diag(x1,x2,x3) with f = x1+x2+x3; multiplier I",
                     {{"nondegeneracy", F}, {"weak_ndg_probe", HS}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", HC}, {"weak_robinson_probe", HC}}));
  out.push_back(make("facial", R"({"name": "facial", "n": 2, "m": 2,
      "objective": [{"c": 1, "e": [0, 1]}],
      "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1, 0]}]},
      {"i": 0, "j": 1, "poly": [{"c": 1, "e": [0, 1]}]}]})",
                     "0,0", "[[x1,x2],[x2,0]] with f = x2: minimizer without multipliers",
                     {{"nondegeneracy", F}, {"weak_ndg_probe", F}, {"robinson", F}, {"sparse_ndg", F},
                      {"forsgren", F}, {"weak_robinson_probe", F}}));
  out.push_back(make("wrob", R"({"name": "wrob", "n": 1, "m": 2, "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1]}]},
      {"i": 1, "j": 1, "poly": [{"c": 1, "e": [1]}]}]})",
                     "0", "diag(x,x): Robinson's CQ without weak-nondegeneracy",
                     {{"nondegeneracy", F}, {"weak_ndg_probe", F}, {"robinson", HC}, {"sparse_ndg", F},
                      {"forsgren", F}, {"weak_robinson_probe", HC}}));
  out.push_back(make("offdiag", R"({"name": "offdiag", "n": 2, "m": 2, "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1, 0]}]},
      {"i": 0, "j": 1, "poly": [{"c": 1, "e": [0, 1]}]},
      {"i": 1, "j": 1, "poly": [{"c": 1, "e": [1, 0]}]}]})",
                     "0,0", "[[x1,x2],[x2,x1]]: sparse- and weak-nondegenerate, Forsgren fails with U = I",
                     {{"nondegeneracy", F}, {"weak_ndg_probe", HS}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", F}, {"weak_robinson_probe", HS}}));
  out.push_back(make("interior", R"({"name": "interior", "n": 2, "m": 2,
      "objective": [{"c": 1, "e": [2, 0]}, {"c": 1, "e": [0, 2]}],
      "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [0, 0]}, {"c": 1, "e": [1, 0]}]},
      {"i": 0, "j": 1, "poly": [{"c": 0.5, "e": [1, 1]}]},
      {"i": 1, "j": 1, "poly": [{"c": 2, "e": [0, 0]}, {"c": 1, "e": [0, 1]}]}]})",
                     "0,0", "positive definite constraint at an interior minimizer",
                     {{"nondegeneracy", HC}, {"weak_ndg_probe", HC}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", HC}, {"weak_robinson_probe", HC}}));
  out.push_back(make("zero_block", R"({"name": "zero_block", "n": 3, "m": 3, "blocks": [2, 1], "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1, 0, 0]}]},
      {"i": 0, "j": 1, "poly": [{"c": 1, "e": [0, 1, 0]}]},
      {"i": 1, "j": 1, "poly": [{"c": 1, "e": [0, 0, 1]}]},
      {"i": 2, "j": 2, "poly": [{"c": 1, "e": [0, 0, 0]}, {"c": 1, "e": [1, 0, 0]}]}]})",
                     "0,0,0", "block diagonal: a nondegenerate 2x2 block next to a positive 1x1 block",
                     {{"nondegeneracy", HC}, {"weak_ndg_probe", HS}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", HC}, {"weak_robinson_probe", HS}}));
  out.push_back(make("m1", R"({"name": "m1", "n": 1, "m": 1, "constraint": [
      {"i": 0, "j": 0, "poly": [{"c": 1, "e": [1]}]}]})",
                     "0", "scalar constraint x >= 0 at the boundary",
                     {{"nondegeneracy", HC}, {"weak_ndg_probe", HS}, {"robinson", HC}, {"sparse_ndg", HC},
                      {"forsgren", HC}, {"weak_robinson_probe", HC}}));
  return out;
}

}  // namespace

const std::vector<CorpusEntry>& corpus() {
  static const std::vector<CorpusEntry> entries = build();
  return entries;
}

const CorpusEntry& corpus_entry(const std::string& id) {
  for (const CorpusEntry& e : corpus())
    if (e.id == id) return e;
  throw PreconditionError("unknown corpus entry \"" + id + "\"");
}

CorpusOutcome run_corpus_entry(const CorpusEntry& e, const AnalysisOptions& opt) {
  CorpusOutcome out;
  out.id = e.id;
  const auto t0 = std::chrono::steady_clock::now();
  out.report = analyze(e.problem, e.point, opt);
  out.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& [checker, want] : e.expected) {
    const Status got = out.report.verdicts.at(checker).status;
    if (got != want) {
      out.pass = false;
      out.mismatches.push_back(checker + ": expected " + to_string(want) + ", got " + to_string(got));
    }
  }
  for (const std::string& w : out.report.lattice_warnings) {
    out.pass = false;
    out.mismatches.push_back("implication violated: " + w);
  }
  return out;
}

}  // namespace nsdpcq
