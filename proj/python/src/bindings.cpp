#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "nsdpcq/corpus.hpp"
#include "nsdpcq/cqcheck.hpp"
#include "nsdpcq/errors.hpp"
#include "nsdpcq/penalty.hpp"
#include "nsdpcq/problem_io.hpp"
#include "nsdpcq/report.hpp"
#include "nsdpcq/sparse.hpp"
#include "nsdpcq/symcore.hpp"

namespace py = pybind11;
using namespace nsdpcq;

// JSON crosses the boundary as text; the Python package decodes it.
namespace {

Vector point_for(const NsdpProblem& p, const Vector& x) {
  if (x.size() != p.n) throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                                            std::to_string(p.n));
  return x;
}

CheckOptions check_options(std::uint64_t seed, int jobs) {
  CheckOptions o;
  o.seed = seed;
  o.jobs = jobs;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constraint qualification checks for nonlinear semidefinite programs";

  auto base = py::register_exception<NsdpError>(m, "NsdpError");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<NotFeasibleError>(m, "NotFeasibleError", base.ptr());
  py::register_exception<EighError>(m, "EighError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<NsdpProblem>(m, "Problem")
      .def_readonly("name", &NsdpProblem::name)
      .def_readonly("n", &NsdpProblem::n)
      .def_property_readonly("m", &NsdpProblem::m)
      .def_property_readonly("n_equalities", [](const NsdpProblem& p) { return p.equalities.size(); })
      .def("to_json", &serialize_problem)
      .def("G", [](const NsdpProblem& p, const Vector& x) { return eval_G(p, point_for(p, x)).dense(); })
      .def("__repr__", [](const NsdpProblem& p) {
        return "<Problem " + p.name + " n=" + std::to_string(p.n) + " m=" + std::to_string(p.m()) + ">";
      });

  m.def("parse_problem", &parse_problem, py::arg("text"));
  m.def("load_problem", &load_problem_file, py::arg("path"));

  m.def("corpus_ids", [] {
    std::vector<std::string> ids;
    for (const CorpusEntry& e : corpus()) ids.push_back(e.id);
    return ids;
  });
  m.def(
      "corpus_entry",
      [](const std::string& id) {
        const CorpusEntry& e = corpus_entry(id);
        return py::make_tuple(e.problem, e.point);
      },
      py::arg("id"), "(problem, point) of a built-in example");

  m.def(
      "eigh",
      [](const Matrix& a) {
        const Spectral s = eigh(SymMat(a));
        return py::make_tuple(s.values, s.vectors);
      },
      py::arg("a"), "Eigenvalues in descending order and matching eigenvectors");
  m.def("proj_psd", [](const Matrix& a) { return proj_psd(SymMat(a)).dense(); }, py::arg("a"));
  m.def(
      "kernel_basis",
      [](const Matrix& a, double tol) {
        const KernelBasis kb = kernel_basis(SymMat(a), tol);
        return py::make_tuple(kb.rank_r, kb.cols);
      },
      py::arg("a"), py::arg("tol") = kRankTol, "(rank, m x (m - rank) orthonormal kernel basis)");

  m.def(
      "vij",
      [](const NsdpProblem& p, const Vector& x, const Matrix& basis) {
        KernelBasis kb;
        kb.cols = basis;
        const VijFamily f = build_vij(p, point_for(p, x), kb);
        return py::make_tuple(f.labels, f.vecs);
      },
      py::arg("problem"), py::arg("x"), py::arg("basis"), "(labels (i, j), n x count matrix of v_ij)");

  m.def(
      "analyze_json",
      [](const NsdpProblem& p, const Vector& x, std::uint64_t seed, int jobs, int samples, int traces) {
        AnalysisOptions o;
        o.seed = seed;
        o.jobs = jobs;
        o.samples = samples;
        o.traces = traces;
        o.timing = false;
        py::gil_scoped_release release;
        return report_to_json(analyze(p, point_for(p, x), o)).dump();
      },
      py::arg("problem"), py::arg("x"), py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("samples") = 200,
      py::arg("traces") = 8);

  m.def(
      "check_json",
      [](const std::string& name, const NsdpProblem& p, const Vector& x, std::uint64_t seed, int jobs) {
        const Vector xv = point_for(p, x);
        const CheckOptions o = check_options(seed, jobs);
        CqVerdict v;
        if (name == "nondegeneracy") {
          v = check_nondegeneracy(p, xv, o);
        } else if (name == "robinson") {
          v = check_robinson(p, xv, o);
        } else if (name == "sparse_ndg") {
          SparseOptions so;
          so.check = o;
          v = check_sparse_ndg(p, xv, so);
        } else if (name == "forsgren") {
          v = check_forsgren(p, xv, std::nullopt, o);
        } else {
          throw PreconditionError("unknown checker \"" + name + "\"");
        }
        return verdict_to_json(v).dump();
      },
      py::arg("name"), py::arg("problem"), py::arg("x"), py::arg("seed") = 0, py::arg("jobs") = 1);

  m.def(
      "penalty_jsonl",
      [](const NsdpProblem& p, const Vector& anchor, double rho0, double rho_mult, int outer_iters) {
        PenaltyConfig c;
        c.anchor = point_for(p, anchor);
        c.rho0 = rho0;
        c.rho_mult = rho_mult;
        c.outer_iters = outer_iters;
        PenaltyTrace t;
        {
          py::gil_scoped_release release;
          t = run_penalty(p, c);
        }
        return py::make_tuple(trace_to_jsonl(t), t.divergence_suspected);
      },
      py::arg("problem"), py::arg("anchor"), py::arg("rho0") = 1.0, py::arg("rho_mult") = 10.0,
      py::arg("outer_iters") = 12);

  m.def(
      "facial_reduce",
      [](const NsdpProblem& p, const Vector& x) {
        const FacialReduction fr = facial_reduce(p, point_for(p, x));
        return py::make_tuple(fr.reduced_problem, fr.rounds, fr.omega);
      },
      py::arg("problem"), py::arg("x"), "(reduced problem, rounds, |J| per round)");

  m.def(
      "kkt_json",
      [](const NsdpProblem& p, const Vector& x) {
        const KktCertificate k = estimate_multiplier(p, point_for(p, x));
        nlohmann::json j;
        j["multiplier"] = matrix_to_json(k.multiplier.dense());
        j["equality_multipliers"] = vector_to_json(k.equality_multipliers);
        j["stationarity_residual"] = k.stationarity_residual;
        j["complementarity_residual"] = k.complementarity_residual;
        j["multiplier_psd"] = k.multiplier_psd;
        return j.dump();
      },
      py::arg("problem"), py::arg("x"));
}
