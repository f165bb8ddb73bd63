#pragma once

#include "mfg1d/grid.hpp"
#include "mfg1d/linearization.hpp"
#include "mfg1d/mfg_forward.hpp"
#include "mfg1d/parabolic.hpp"

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace mfg1d {

enum class ProbeKind { neumann_eigen, complex_exponential };

/// Caloric probes used in the integration-by-parts identity. Eigen probes
/// are omega_k = e^{-beta mu_k t} cos(k pi x); exponential probes are
/// omega = e^{-beta xi^2 t - i xi x}.
struct ProbeFamily {
    ProbeKind kind = ProbeKind::neumann_eigen;
    std::vector<double> modes; // k for eigen, xi for exponential
};

/// integral_0^T e^{(lambda_src - beta mu) t} dt, with the limit value T when
/// the exponent magnitude drops below 1e-12.
double time_factor(double lambda_src, double mu, double beta, double T);

/// Per-step decay multiplier of eigenmode k under the forward/backward
/// scheme: (1 - z/2)/(1 + z/2) for Crank-Nicolson, 1/(1 + z) for implicit
/// Euler, z = beta * mu_k^h * dt.
double step_decay(const Grid& g, int k, TimeScheme scheme = TimeScheme::crank_nicolson);

/// a(0) of the scalar backward recursion of the selected scheme with
/// coefficient beta*mu (discrete eigenvalue) and unit source gamma^j at time
/// level j; the exact discrete counterpart of time_factor.
double discrete_time_factor(const Grid& g, double gamma, double mu,
                            TimeScheme scheme = TimeScheme::crank_nicolson);

/// Eigen-probe pairing: the trapezoid inner product <v(.,0), cos(k pi x)>.
/// For a field v solving -dv/dt - beta v_xx = -S(x) e^{lambda t}, v(T) = 0
/// with Neumann data, this equals -time_factor(lambda, mu_k) * <S, g_k>.
double data_functional(const MeasurementRecord& var, int k);

/// Exponential-probe pairing: int v(x,0) e^{-i xi x} dx plus the lateral
/// term beta int_0^T [v omega_x]_0^1 dt consumed from the boundary traces.
/// Equals -time_factor(lambda, xi^2) * int S(x) e^{-i xi x} dx.
std::complex<double> data_functional_exponential(const MeasurementRecord& var, double xi);

struct SourceRecovery {
    SpatialField recovered; // S(x)
    std::vector<int> modes_used;
    std::vector<int> modes_skipped;    // degenerate time factors
    std::vector<double> time_factors;  // per used mode
};

struct RecoverOptions {
    int max_mode = -1;            // < 0 selects n_x / 4
    double gamma_override = 0.0;  // per-step source growth; 0 selects e^{lambda dt}
    TimeScheme scheme = TimeScheme::crank_nicolson;
    /// Divide by the exact discrete time factor (recursion over the scheme)
    /// instead of the continuum integral.
    bool discrete_calibration = true;
    ProbeKind probe = ProbeKind::neumann_eigen;
};

/// Inverts the probe identity mode by mode: S is synthesized from the
/// coefficients -functional_k / time_factor_k. Modes whose time factor falls
/// below 1e-6 * T are skipped and reported.
SourceRecovery recover_source(const MeasurementRecord& var, double lambda_src,
                              const RecoverOptions& opts = {});

/// One probe of the kinetic-coefficient recovery: the psi-channel cross
/// variation measured with f_1 = f_2 = A cos(k pi x), normalized so the
/// first variation at time level j is step_decay^{-j} cos(k pi x).
struct KappaProbeData {
    int mode = 1;
    MeasurementRecord second_variation;
    double gamma = 0.0; // per-step source growth; 0 selects step_decay^{-2}
};

struct KappaRecovery {
    SpatialField kappa;
    std::vector<SourceRecovery> per_mode;
    std::vector<int> extrapolated_nodes; // nodes filled from nearest interior
};

/// Recovers kappa(x) from per-mode sources S_k = kappa |grad g_k|^2 by the
/// weight-blended pointwise quotient; weights |grad g_k|^2 are thresholded
/// at 1e-3 of their max and uncovered nodes copy the nearest covered value.
KappaRecovery recover_kappa(const Grid& g, const std::vector<KappaProbeData>& probes,
                            const RecoverOptions& opts = {});

struct FCoeffRecovery {
    std::vector<SpatialField> coeffs; // F^(1), ..., F^(K_max)
    std::vector<SourceRecovery> per_order;
};

/// Recovers the local cost coefficients from m0-channel variations of orders
/// 1..K_max in the direction g_1 = 1 (g_2 = 0): order 1 reads F^(1) off the
/// measured variation directly; each higher order simulates the known part
/// of its linearized system with the coefficients recovered so far, subtracts
/// its measurement, and reads the next coefficient off the residual.
FCoeffRecovery recover_F_coeffs(const Grid& g, const std::vector<MeasurementVariation>& bundles,
                                const SpatialField& kappa, int K_max,
                                const RecoverOptions& opts = {},
                                const SolverOptions& solver = {});

struct KernelRecovery {
    std::vector<double> kernel; // n_x * n_x row-major, K(x_i, y_j)
    std::vector<SourceRecovery> per_mode;
    double mode0_diagnostic = 0.0; // max |recovered psi_0|, 0 when no k=0 bundle
};

/// Recovers the nonlocal kernel from m0-channel second variations with
/// g_1 = 1, g_2 = cos(k pi y), k = 1..M: each bundle isolates
/// psi_k(x) = int K(x,y) cos(k pi y) dy, and K is synthesized from the
/// cosine columns. A k = 0 bundle, if supplied, only feeds the consistency
/// diagnostic. Throws std::invalid_argument when M exceeds n_x / 4.
KernelRecovery recover_kernel(const Grid& g,
                              const std::vector<std::pair<int, MeasurementRecord>>& bundles,
                              int M, const RecoverOptions& opts = {});

/// Everything a reconstruction run reports: recovered unknowns, ground-truth
/// references, and error metrics on the shared grid.
struct ReconstructionReport {
    Grid grid;
    std::string experiment;

    bool has_kappa = false;
    SpatialField kappa_recovered;
    SpatialField kappa_truth;
    double kappa_rel_l2 = 0.0;
    double kappa_max_err = 0.0;

    std::vector<SpatialField> f_recovered;
    std::vector<SpatialField> f_truth;
    std::vector<double> f_rel_l2;
    std::vector<double> f_max_err;

    bool has_kernel = false;
    std::vector<double> kernel_recovered; // n_x * n_x
    std::vector<double> kernel_truth;
    double kernel_rel_frobenius = 0.0;
    double kernel_mode0_diagnostic = 0.0;

    std::vector<std::string> diagnostics;
    double wall_seconds = 0.0; // excluded from determinism comparisons
};

} // namespace mfg1d
