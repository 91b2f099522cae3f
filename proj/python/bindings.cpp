#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "levycalc/canonical_path.hpp"
#include "levycalc/errors.hpp"
#include "levycalc/experiment.hpp"

namespace py = pybind11;
using namespace levycalc;
using json = nlohmann::json;

namespace {

ExperimentConfig config_from_text(const std::string& text) { return ExperimentConfig::from_json(json::parse(text)); }

py::dict path_dict(const ExperimentConfig& config, std::size_t index) {
    const auto ens = config.ensemble();
    if (index >= ens.size()) throw py::index_error("path index out of range");
    const auto path = ens.path(index);
    const TimeGrid& grid = path.grid();
    py::array_t<double> times(grid.size()), w(grid.size()), x(grid.size());
    auto t_ = times.mutable_unchecked<1>();
    auto w_ = w.mutable_unchecked<1>();
    auto x_ = x.mutable_unchecked<1>();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        t_(k) = grid[static_cast<int>(k)];
        w_(k) = path.brownian()[k];
        x_(k) = evaluate_X(path, ens.model(), ens.partition(), t_(k));
    }
    py::list jumps;
    for (const auto& j : path.jumps()) jumps.append(py::make_tuple(j.time, j.size, j.shell));
    py::dict out;
    out["times"] = times;
    out["brownian"] = w;
    out["X"] = x;
    out["jumps"] = jumps;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Malliavin calculus experiments on the canonical Levy space";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::enum_<Status>(m, "Status")
        .value("PASS", Status::Pass)
        .value("WARN", Status::Warn)
        .value("FAIL", Status::Fail)
        .value("INFO", Status::Info);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_static("from_json_text", &config_from_text, py::arg("text"))
        .def_static("from_file", &ExperimentConfig::from_file, py::arg("path"))
        .def_property_readonly("name", &ExperimentConfig::name)
        .def_property_readonly("kind", &ExperimentConfig::kind)
        .def_property_readonly("seed", &ExperimentConfig::seed)
        .def_property_readonly("paths", &ExperimentConfig::paths)
        .def("canonical", &ExperimentConfig::canonical)
        .def("hash", &ExperimentConfig::hash)
        .def("with_seed", &ExperimentConfig::with_seed, py::arg("seed"))
        .def("with_paths", &ExperimentConfig::with_paths, py::arg("paths"))
        .def("path", &path_dict, py::arg("index"), "Sampled path: grid times, W, X and the jump list.");

    py::class_<AssertionRecord>(m, "AssertionRecord")
        .def_readonly("experiment", &AssertionRecord::experiment)
        .def_readonly("term", &AssertionRecord::term)
        .def_readonly("statistic", &AssertionRecord::statistic)
        .def_readonly("value", &AssertionRecord::value)
        .def_readonly("std_error", &AssertionRecord::std_error)
        .def_readonly("target", &AssertionRecord::target)
        .def_readonly("tolerance", &AssertionRecord::tolerance)
        .def_readonly("status", &AssertionRecord::status)
        .def_readonly("provenance", &AssertionRecord::provenance);

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("config_hash", &RunReport::config_hash)
        .def_readonly("records", &RunReport::records)
        .def_readonly("warnings", &RunReport::warnings)
        .def_readonly("timings", &RunReport::timings)
        .def("overall", &RunReport::overall)
        .def("exit_code", &RunReport::exit_code)
        .def("csv", &RunReport::csv)
        .def("summary", &RunReport::summary);

    m.def("experiment_kinds", &experiment_kinds);
    m.def("preset_names", &preset_names);
    m.def("preset", &preset, py::arg("name"));
    m.def(
        "run",
        [](const ExperimentConfig& config, unsigned workers) {
            py::gil_scoped_release release;
            return run(config, RunOptions{workers});
        },
        py::arg("config"), py::arg("workers") = 1);
    m.def("write_artifacts", &write_artifacts, py::arg("report"), py::arg("name"), py::arg("directory"));
}
