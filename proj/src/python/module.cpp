#include "mfg1d/harness.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mfg1d;

namespace {

ExperimentConfig config_from_text(const std::string& text, int threads) {
    ExperimentConfig cfg = parse_config(text);
    if (threads > 0) cfg.threads = threads;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_mfg1d, m) {
    m.doc() = "1-D mean-field-game forward solver and boundary-data reconstruction";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<AdmissibilityError>(m, "AdmissibilityError", PyExc_ValueError);
    py::register_exception<NonConvergenceError>(m, "NonConvergenceError", PyExc_RuntimeError);
    py::register_exception<DegenerateProbeError>(m, "DegenerateProbeError", PyExc_RuntimeError);

    m.def(
        "validate_config",
        [](const std::string& text) { (void)parse_config(text); },
        py::arg("config_json"), "Parse a config document; raises ConfigError on any problem.");

    m.def(
        "simulate",
        [](const std::string& text, int threads) {
            return measurement_set_to_json(simulate_measurements(config_from_text(text, threads)));
        },
        py::arg("config_json"), py::arg("threads") = 0,
        "Run the forward solves of a config; returns the measurement set as JSON.");

    m.def(
        "reconstruct",
        [](const std::string& text, const std::string& measurements, int threads) {
            const ExperimentConfig cfg = config_from_text(text, threads);
            return report_to_json(reconstruct(cfg, measurement_set_from_json(measurements)));
        },
        py::arg("config_json"), py::arg("measurements_json"), py::arg("threads") = 0,
        "Reconstruct the configured unknowns from stored measurements; returns the report as JSON.");

    m.def(
        "run",
        [](const std::string& text, int threads) {
            return report_to_json(run_experiment(config_from_text(text, threads)));
        },
        py::arg("config_json"), py::arg("threads") = 0,
        "Simulate and reconstruct end to end; returns the report as JSON.");

    m.def(
        "positivity_demo",
        [](const std::string& text, int threads) {
            return positivity_demo_to_json(run_positivity_demo(config_from_text(text, threads)));
        },
        py::arg("config_json"), py::arg("threads") = 0,
        "Run the nonnegative-input channel comparison; returns its summary as JSON.");

    m.def("time_factor", &time_factor, py::arg("lambda_src"), py::arg("mu"), py::arg("beta"),
          py::arg("T"), "integral_0^T exp((lambda_src - beta*mu) t) dt, with the degenerate limit T.");

    m.def(
        "discrete_eigenvalue",
        [](int n_x, int k) {
            Grid g = make_grid(n_x, 1, 1.0, 1.0);
            return g.discrete_eigenvalue(k);
        },
        py::arg("n_x"), py::arg("k"),
        "Eigenvalue of the discrete Neumann Laplacian for cos(k pi x) on an n_x-node grid.");
}
