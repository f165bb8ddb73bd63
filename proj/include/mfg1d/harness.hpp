#pragma once

#include "mfg1d/cost_models.hpp"
#include "mfg1d/errors.hpp"
#include "mfg1d/grid.hpp"
#include "mfg1d/linearization.hpp"
#include "mfg1d/mfg_forward.hpp"
#include "mfg1d/probe_inverse.hpp"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace mfg1d {

/// Parsed experiment description. Ground-truth fields are specified as
/// plain cosine-mode lists: pairs (k, a) mean a * cos(k pi x).
struct ExperimentConfig {
    Grid grid{201, 400, 1.0, 1.0};

    // model
    std::vector<std::pair<int, double>> kappa_modes{{0, 1.0}};
    bool local_cost = true;
    std::vector<std::vector<std::pair<int, double>>> f_coeff_modes; // per order
    std::vector<std::tuple<int, int, double>> kernel_modes;         // (k_x, k_y, a)

    // variation
    double epsilon = 1e-2;        // m0-channel base step
    double epsilon_order3 = 5e-2; // separate base for the cubic fit
    double probe_amplitude = 0.1; // effective psi-channel terminal amplitude
    PicardOptions picard;
    bool force_negative_g1 = false; // demo-only: submit the inadmissible case uncaught

    // inverse
    bool want_kappa = false;
    bool want_f_coeffs = false;
    bool want_kernel = false;
    std::vector<int> kappa_probe_modes{1};
    int max_mode = 12;
    int K_max = 2;
    int kernel_M = 3;
    bool richardson = true;

    // output
    std::string out_dir = "out";
    std::vector<std::string> formats{"json", "csv"};
    int threads = 1;
};

/// Parses and validates a config JSON document. Unknown keys anywhere are
/// rejected; every error message names the offending config path.
ExperimentConfig parse_config(const std::string& json_text);

/// sum over pairs (k, a) of a * cos(k pi x), sampled on the grid.
SpatialField synthesize_modes(const Grid& g, const std::vector<std::pair<int, double>>& modes);

/// Ground-truth model assembled from the config.
struct GroundTruth {
    KineticHamiltonian hamiltonian;
    CostModel cost;
    SpatialField kappa;
    std::vector<SpatialField> f_coeffs;
    std::vector<double> kernel; // n_x * n_x, empty for local cost
};

GroundTruth build_ground_truth(const ExperimentConfig& cfg);

/// Named measurement records, keyed by a deterministic task id.
using MeasurementSet = std::map<std::string, MeasurementRecord>;

std::string measurement_set_to_json(const MeasurementSet& set);
MeasurementSet measurement_set_from_json(const std::string& json_text);

/// Runs every nonlinear solve the configured reconstructions need (fanned
/// out over cfg.threads) and returns the labeled measurements.
MeasurementSet simulate_measurements(const ExperimentConfig& cfg, AuditLog* audit = nullptr);

/// Reconstructs the requested unknowns from stored measurements only.
ReconstructionReport reconstruct(const ExperimentConfig& cfg, const MeasurementSet& set);

/// simulate + reconstruct, with timing.
ReconstructionReport run_experiment(const ExperimentConfig& cfg, AuditLog* audit = nullptr);

struct PositivityDemo {
    AuditLog audit;
    int violations = 0; // audit entries with negative m0 minimum
    double kernel_rel_frobenius = 0.0;
    /// Probe modes whose eigenfunction changes sign and therefore cannot be
    /// submitted through the nonnegative first-order slot.
    std::vector<int> sign_constrained_modes;
    bool negative_g1_rejected = false;
    double min_m0_second_slot = 0.0; // min of eps g_1 + eps^2 g_2 for g_2 = cos(pi x)
};

/// The channel comparison: kernel recovery through nonnegative inputs only,
/// plus the demonstration that the sign-changing direction is rejected in
/// the first-order slot but admissible in the second-order one. With
/// cfg.force_negative_g1 the inadmissible solve runs uncaught and throws.
PositivityDemo run_positivity_demo(const ExperimentConfig& cfg);

/// Report serialization; wall_seconds is emitted under a clearly labeled
/// key so determinism checks can exclude it.
std::string report_to_json(const ReconstructionReport& report);
std::string positivity_demo_to_json(const PositivityDemo& demo);

/// Writes per-unknown plot tables: (x, truth, recovered, abs_error) CSVs,
/// and a flattened (x, y, truth, recovered) table for the kernel.
void emit_plot_data(const ReconstructionReport& report, const std::string& dir);

} // namespace mfg1d
