// Python bindings. Graphs, configs and goals cross the boundary as JSON
// text in the same formats the CLI reads; the Python package converts
// dicts and paths.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qgraph/commands.hpp"
#include "qgraph/config.hpp"
#include "qgraph/error.hpp"
#include "qgraph/evolution.hpp"
#include "qgraph/goals.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

qgraph::MetricGraph prepared(const std::string& graph, const std::string& bind, bool normalize) {
  return qgraph::prepare_graph(qgraph::deserialize(graph), qgraph::ParameterBinding::parse(bind), normalize);
}

py::list roots_list(const qgraph::Spectrum& s) {
  py::list out;
  for (const auto& r : s.roots) out.append(py::make_tuple(r.k, r.multiplicity));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum graph spectra and spectrum-driven graph evolution";

  // Messages carry the error kind as a prefix, e.g. "UnboundParameter: ...".
  static py::exception<qgraph::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const qgraph::Error& e) {
      const std::string msg = std::string(qgraph::to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error.ptr(), msg.c_str());
    }
  });

  m.def("validate", [](const std::string& graph) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& v : qgraph::validate(qgraph::deserialize(graph))) out.emplace_back(to_string(v.kind), v.detail);
    return out;
  }, py::arg("graph"), "Structural violations as (kind, detail) pairs.");

  m.def("prepare", [](const std::string& graph, const std::string& bind, bool normalize) {
    return qgraph::serialize(prepared(graph, bind, normalize));
  }, py::arg("graph"), py::arg("bind") = "", py::arg("normalize") = true,
     "Binds parameters, optionally normalizes, validates; returns graph JSON.");

  m.def("spectrum", [](const std::string& graph, double k_max, const std::string& mode, const std::string& bind,
                       bool normalize) {
    qgraph::SpectrumResult r;
    {
      py::gil_scoped_release release;
      r = qgraph::spectrum_of(prepared(graph, bind, normalize), k_max, qgraph::parse_mode(mode));
    }
    py::dict out;
    out["roots"] = roots_list(r.spectrum);
    out["mode"] = qgraph::to_string(r.spectrum.mode);
    out["k_max"] = r.spectrum.k_max;
    out["warnings"] = r.warnings;
    return out;
  }, py::arg("graph"), py::arg("k_max"), py::arg("mode") = "auto", py::arg("bind") = "",
     py::arg("normalize") = true, "Roots (k, multiplicity) on [0, k_max].");

  m.def("eigenvalues", [](const std::string& graph, int count, const std::string& bind, bool normalize) {
    const auto g = prepared(graph, bind, normalize);
    py::gil_scoped_release release;
    return qgraph::leading_eigenvalues(g, count, qgraph::RootConfig{});
  }, py::arg("graph"), py::arg("count"), py::arg("bind") = "", py::arg("normalize") = true,
     "First `count` eigenvalues lambda = k^2 with multiplicity, starting at 0.");

  m.def("plot_dk", [](const std::string& graph, const std::string& k_range, const std::string& bind,
                      bool normalize) {
    return qgraph::secular_csv(qgraph::plot_dk(prepared(graph, bind, normalize), qgraph::parse_k_range(k_range)));
  }, py::arg("graph"), py::arg("k_range"), py::arg("bind") = "", py::arg("normalize") = true,
     "CSV of sigma_min and det(U - I) samples; k_range is \"a:b:n\".");

  m.def("counting_function", [](const std::string& graph, double k) {
    return qgraph::counting_function(qgraph::SecularEvaluator(qgraph::deserialize(graph)), k);
  }, py::arg("graph"), py::arg("k"), "Roots in (0, k] with multiplicity, from the phase of det U.");

  m.def("spectral_distance", [](const std::vector<double>& lambdas, const std::string& goal) {
    const qgraph::Goal g = qgraph::goal_from_json(json::parse(goal));
    const auto* d = std::get_if<qgraph::MinimizeDistance>(&g);
    if (!d) throw qgraph::Error(qgraph::ErrorKind::InvalidConfig, "goal: expected a target goal");
    return qgraph::spectral_distance(lambdas, d->target);
  }, py::arg("lambdas"), py::arg("goal"), "Distance between eigenvalues and a target goal.");

  m.def("score", [](const std::vector<double>& lambdas, const std::string& goal) {
    return qgraph::score_eigenvalues(qgraph::goal_from_json(json::parse(goal)), lambdas).value;
  }, py::arg("lambdas"), py::arg("goal"), "Goal score of an eigenvalue list; lower is better.");

  m.def("run", [](const std::string& config) {
    const qgraph::RunConfig c = qgraph::config_from_json(json::parse(config));
    qgraph::RunLog log;
    {
      py::gil_scoped_release release;
      log = qgraph::run(c);
    }
    py::dict out;
    out["log"] = qgraph::log_jsonl(log);
    out["k_trajectory"] = qgraph::k_trajectory_csv(log);
    out["final_graph"] = qgraph::serialize(log.steps.empty() ? log.initial.graph : log.steps.back().child);
    out["aborted"] = log.aborted ? py::cast(*log.aborted) : py::none();
    return out;
  }, py::arg("config"), "Runs an evolution config to completion.");
}
