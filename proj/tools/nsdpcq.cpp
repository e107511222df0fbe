// Command-line front end: analyze | solve | reduce | corpus.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nsdpcq/corpus.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/penalty.hpp"
#include "nsdpcq/problem_io.hpp"
#include "nsdpcq/report.hpp"
#include "nsdpcq/sparse.hpp"

namespace {

using namespace nsdpcq;

constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

struct Loaded {
  NsdpProblem problem;
  std::optional<Vector> default_point;
};

// "corpus:ID" selects a built-in entry, anything else is a file path.
Loaded load(const std::string& source) {
  const std::string prefix = "corpus:";
  if (source.rfind(prefix, 0) == 0) {
    const CorpusEntry& e = corpus_entry(source.substr(prefix.size()));
    return {e.problem, e.point};
  }
  return {load_problem_file(source), std::nullopt};
}

Vector resolve_point(const Loaded& l, const std::string& text) {
  if (!text.empty()) return parse_point(text, l.problem.n);
  if (l.default_point) return *l.default_point;
  throw PreconditionError("--point is required for problem files");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write " + path);
  out << text;
}

void print_infeasible(const NotFeasibleError& e) {
  std::cerr << "error: point is not feasible: " << e.what() << "\n"
            << "minimum eigenvalue of G(x): " << e.min_eigenvalue() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint qualification analysis for nonlinear semidefinite programs"};
  app.require_subcommand(1);

  std::string problem, point, json_path, trace_path, out_path, anchor;
  double tol_rank = kRankTol;
  int samples = 200, traces = 8, jobs = 1;
  std::uint64_t seed = 0;
  bool no_timestamp = false;

  auto* analyze_cmd = app.add_subcommand("analyze", "Run every checker at a feasible point");
  analyze_cmd->add_option("problem", problem, "Problem file or corpus:ID")->required();
  analyze_cmd->add_option("--point", point, "Comma-separated point");
  analyze_cmd->add_option("--tol-rank", tol_rank, "Relative rank tolerance");
  analyze_cmd->add_option("--samples", samples, "Basis samples per search");
  analyze_cmd->add_option("--traces", traces, "Traces per sequential probe");
  analyze_cmd->add_option("--seed", seed, "Random seed");
  analyze_cmd->add_option("--jobs", jobs, "Worker threads");
  analyze_cmd->add_option("--json", json_path, "Write the report JSON here");
  analyze_cmd->add_flag("--no-timestamp", no_timestamp, "Omit timing data from the report");

  PenaltyConfig pcfg;
  auto* solve_cmd = app.add_subcommand("solve", "Run the external penalty method");
  solve_cmd->add_option("problem", problem, "Problem file or corpus:ID")->required();
  solve_cmd->add_option("--anchor", anchor, "Regularization center (defaults to the corpus point)");
  solve_cmd->add_option("--rho0", pcfg.rho0, "Initial penalty parameter");
  solve_cmd->add_option("--rho-mult", pcfg.rho_mult, "Penalty growth factor");
  solve_cmd->add_option("--outer", pcfg.outer_iters, "Outer iterations");
  solve_cmd->add_option("--inner-tol", pcfg.inner_tol, "Relative inner gradient tolerance");
  solve_cmd->add_option("--trace", trace_path, "Write JSON lines, one per outer iterate");

  auto* reduce_cmd = app.add_subcommand("reduce", "Facial reduction at a feasible point");
  reduce_cmd->add_option("problem", problem, "Problem file or corpus:ID")->required();
  reduce_cmd->add_option("--point", point, "Comma-separated point");
  reduce_cmd->add_option("--tol-rank", tol_rank, "Relative rank tolerance");
  reduce_cmd->add_option("--out", out_path, "Write the reduced problem here (stdout otherwise)");

  auto* corpus_cmd = app.add_subcommand("corpus", "Built-in examples");
  auto* list_cmd = corpus_cmd->add_subcommand("list", "List entries");
  auto* run_cmd = corpus_cmd->add_subcommand("run", "Run entries against their expected verdicts");
  std::string only;
  run_cmd->add_option("--only", only, "Run a single entry");
  run_cmd->add_option("--seed", seed, "Random seed");
  run_cmd->add_option("--jobs", jobs, "Worker threads");
  corpus_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*analyze_cmd) {
      const Loaded l = load(problem);
      const Vector x = resolve_point(l, point);
      AnalysisOptions opt;
      opt.tol_rank = tol_rank;
      opt.samples = samples;
      opt.traces = traces;
      opt.seed = seed;
      opt.jobs = jobs;
      opt.timing = !no_timestamp;
      const AnalysisReport r = analyze(l.problem, x, opt);
      std::cout << report_to_text(r);
      if (!json_path.empty()) write_file(json_path, report_to_json(r).dump(2) + "\n");
      return 0;
    }
    if (*solve_cmd) {
      const Loaded l = load(problem);
      if (!anchor.empty()) {
        pcfg.anchor = parse_point(anchor, l.problem.n);
      } else if (l.default_point) {
        pcfg.anchor = *l.default_point;
      } else {
        throw PreconditionError("--anchor is required for problem files");
      }
      feasible_kernel(l.problem, pcfg.anchor);
      const PenaltyTrace t = run_penalty(l.problem, pcfg);
      std::cout << trace_table(t);
      if (!trace_path.empty()) write_file(trace_path, trace_to_jsonl(t));
      return 0;
    }
    if (*reduce_cmd) {
      const Loaded l = load(problem);
      const Vector x = resolve_point(l, point);
      const FacialReduction fr = facial_reduce(l.problem, x, tol_rank);
      std::cerr << "rounds: " << fr.rounds << "\n";
      for (std::size_t i = 0; i < fr.omega.size(); ++i) std::cerr << "round " << i + 1 << ": omega = " << fr.omega[i] << "\n";
      std::cerr << "m: " << l.problem.m() << " -> " << fr.reduced_problem.m() << "\n"
                << "emitted equalities: " << fr.emitted_equalities << "\n";
      const std::string text = serialize_problem(fr.reduced_problem);
      if (out_path.empty()) {
        std::cout << text;
      } else {
        write_file(out_path, text);
      }
      return 0;
    }
    if (*list_cmd) {
      for (const CorpusEntry& e : corpus()) std::cout << e.id << "\t" << e.source << "\n";
      return 0;
    }
    if (*run_cmd) {
      AnalysisOptions opt;
      opt.seed = seed;
      opt.jobs = jobs;
      int failed = 0, ran = 0;
      for (const CorpusEntry& e : corpus()) {
        if (!only.empty() && e.id != only) continue;
        ++ran;
        const CorpusOutcome o = run_corpus_entry(e, opt);
        std::cout << (o.pass ? "PASS " : "FAIL ") << o.id << " (" << static_cast<long>(o.millis) << " ms)\n";
        for (const std::string& m : o.mismatches) std::cout << "    " << m << "\n";
        if (!o.pass) ++failed;
      }
      if (ran == 0) throw PreconditionError("unknown corpus entry \"" + only + "\"");
      std::cout << ran - failed << " of " << ran << " entries pass\n";
      return failed ? 1 : 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.byte_offset()) std::cerr << " (byte offset " << e.byte_offset() << ")";
    std::cerr << "\n";
    return kExitParse;
  } catch (const NotFeasibleError& e) {
    print_infeasible(e);
    return kExitInfeasible;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const NsdpError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
