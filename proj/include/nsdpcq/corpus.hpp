#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/model.hpp"
#include "nsdpcq/report.hpp"

namespace nsdpcq {

struct CorpusEntry {
  std::string id;
  NsdpProblem problem;
  Vector point;
  std::map<std::string, Status> expected;  // checker name -> status
  std::string source;
};

/// Built-in examples, each stored as problem-file JSON and parsed on load.
const std::vector<CorpusEntry>& corpus();
/// Throws PreconditionError for an unknown id.
const CorpusEntry& corpus_entry(const std::string& id);

struct CorpusOutcome {
  std::string id;
  bool pass = true;
  double millis = 0.0;
  AnalysisReport report;
  std::vector<std::string> mismatches;
};
CorpusOutcome run_corpus_entry(const CorpusEntry& e, const AnalysisOptions& opt = {});

}  // namespace nsdpcq
