#pragma once

#include "mfg1d/cost_models.hpp"
#include "mfg1d/errors.hpp"
#include "mfg1d/grid.hpp"
#include "mfg1d/parabolic.hpp"

#include <map>
#include <string>
#include <vector>

namespace mfg1d {

struct MfgProblem {
    KineticHamiltonian hamiltonian;
    CostModel cost;
    SpatialField m0;
    SpatialField psi;
    Grid grid;
    /// Skip the density-constraint check on m0 (linearized auxiliary solves
    /// feed signed variations through the same machinery).
    bool unchecked = false;
};

struct PicardOptions {
    int max_iter = 200;
    double tol = 1e-10;
    double damping = 0.5; // in (0, 1]
    SolverOptions solver;
};

struct MfgSolution {
    SpaceTimeField u;
    SpaceTimeField m;
    int iterations = 0;
    double residual = 0.0;      // last sweep-to-sweep max-norm change
    double pde_residual_u = 0.0; // substitution residual of the HJB scheme
    double pde_residual_m = 0.0; // substitution residual of the FPK scheme
    bool negative_density = false;
};

/// One line per nonlinear solve: proof that the submitted m0 satisfied the
/// density constraint (or was explicitly unchecked).
struct AuditEntry {
    std::string label;
    double min_m0 = 0.0;
    double mass = 0.0;
    bool unchecked = false;
};

using AuditLog = std::vector<AuditEntry>;

/// Solves the coupled forward-backward system by damped block Picard
/// iteration: forward FPK with drift kappa u_x, then backward HJB with the
/// cost term and the lagged kinetic term folded into the source. Throws
/// NonConvergenceError when the budget is exhausted and AdmissibilityError
/// when m0 violates the density constraint (unless p.unchecked).
MfgSolution solve_mfg(const MfgProblem& p, const PicardOptions& opts = {},
                      AuditLog* audit = nullptr, const std::string& audit_label = "");

/// The boundary measurement: lateral traces of u at x = 0 and x = 1 plus the
/// initial snapshot u(., 0). With Neumann data the flux trace is identically
/// zero and is not stored.
struct MeasurementRecord {
    Grid grid;
    std::vector<double> trace_left;   // u(0, t_j), length n_t + 1
    std::vector<double> trace_right;  // u(1, t_j), length n_t + 1
    std::vector<double> initial_snapshot; // u(x_i, 0), length n_x
    std::map<std::string, std::string> metadata;
};

MeasurementRecord measure(const SpaceTimeField& u,
                          std::map<std::string, std::string> metadata = {});

MeasurementRecord record_like(const Grid& g);
MeasurementRecord record_add(MeasurementRecord a, const MeasurementRecord& b, double scale = 1.0);
MeasurementRecord record_scale(double c, MeasurementRecord a);

/// JSON round trip; embedded arrays are CSV-encoded strings and finite
/// doubles survive bit-exactly.
std::string record_to_json(const MeasurementRecord& r);
MeasurementRecord record_from_json(const std::string& json_text);

} // namespace mfg1d
