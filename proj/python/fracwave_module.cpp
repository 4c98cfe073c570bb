#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fracwave/caputo.hpp"
#include "fracwave/config.hpp"
#include "fracwave/error.hpp"
#include "fracwave/forward.hpp"
#include "fracwave/run.hpp"

namespace py = pybind11;
using namespace fracwave;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the fracwave solver core";
  m.attr("__version__") = FRACWAVE_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<InstabilityError>(m, "InstabilityError", PyExc_RuntimeError);

  m.def("caputo_apply",
        [](const std::vector<double>& history, double alpha, double dt) { return caputo_apply(history, alpha, dt); },
        py::arg("history"), py::arg("alpha"), py::arg("dt"));
  m.def("caputo_monomial_reference", &caputo_monomial_reference, py::arg("p"), py::arg("alpha"), py::arg("t"));

  m.def(
      "solve_forward",
      [](const std::string& config_text) {
        const Problem p = problem_from_config(RunConfig::parse(config_text));
        const FieldHistory h = solve_forward(p);
        std::vector<std::vector<double>> rows(h.levels());
        for (std::size_t l = 0; l < h.levels(); ++l) {
          const auto r = h.u.row(l);
          rows[l].assign(r.begin(), r.end());
        }
        return py::make_tuple(std::vector<double>(p.mesh.nodes().begin(), p.mesh.nodes().end()), h.dt, rows);
      },
      py::arg("config_text"), "Solve the forward problem of an INI config; returns (nodes, dt, rows).");

  m.def(
      "run",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir) {
        const RunResult r = run_experiment(RunConfig::load(config), out_dir);
        return r.artifacts;
      },
      py::arg("config"), py::arg("out_dir"));

  m.def(
      "report",
      [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& row : emit_report(dir)) out.append(py::make_tuple(row.check, row.metric, row.value, row.pass));
        return out;
      },
      py::arg("run_dir"));
}
