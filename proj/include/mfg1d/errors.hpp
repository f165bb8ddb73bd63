#pragma once

#include <stdexcept>
#include <string>

namespace mfg1d {

/// Exit-code taxonomy shared by the library exceptions and the CLI.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    admissibility = 3,
    non_convergence = 4,
    degenerate_probe = 5,
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input density violated the nonnegativity / unit-mass constraint.
struct AdmissibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Picard iteration exhausted its budget; carries the last residual so the
/// caller can tell near-misses from blow-ups.
struct NonConvergenceError : std::runtime_error {
    double residual;
    int iterations;
    NonConvergenceError(const std::string& what, double residual_, int iterations_)
        : std::runtime_error(what), residual(residual_), iterations(iterations_) {}
};

struct DegenerateProbeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExitCode classify_exception(const std::exception& e);

} // namespace mfg1d
