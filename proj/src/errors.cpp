#include "mfg1d/errors.hpp"

namespace mfg1d {

ExitCode classify_exception(const std::exception& e) {
    if (dynamic_cast<const AdmissibilityError*>(&e)) return ExitCode::admissibility;
    if (dynamic_cast<const NonConvergenceError*>(&e)) return ExitCode::non_convergence;
    if (dynamic_cast<const DegenerateProbeError*>(&e)) return ExitCode::degenerate_probe;
    return ExitCode::config;
}

} // namespace mfg1d
