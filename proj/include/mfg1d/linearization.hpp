#pragma once

#include "mfg1d/cost_models.hpp"
#include "mfg1d/grid.hpp"
#include "mfg1d/mfg_forward.hpp"
#include "mfg1d/parabolic.hpp"

#include <string>
#include <vector>

namespace mfg1d {

enum class VariationChannel {
    /// Terminal-cost directions: psi = sum_l eps_l f_l, m0 = 0.
    psi_linearization,
    /// One-parameter density curve m0 = eps g_1 + eps^2 g_2, psi = 0, with
    /// g_1 >= 0 so every submitted input is an admissible density.
    m0_variation,
};

struct VariationSpec {
    VariationChannel channel = VariationChannel::m0_variation;
    /// psi channel: f_1, ..., f_N. m0 channel: exactly {g_1, g_2}.
    std::vector<SpatialField> directions;
};

/// A solution pair of one linearized system. `order` is "1", "2" (psi-channel
/// cross in directions f_1, f_2; m0-channel second eps-derivative), or "3".
struct VariationResult {
    std::string order;
    SpaceTimeField u_var;
    SpaceTimeField m_var;
};

/// First-order system around the zero solution. psi channel (direction
/// f_{dir_index}): m-part is identically zero, u-part solves the backward
/// heat equation with terminal f. m0 channel: m-part is the heat evolution
/// of g_1, u-part solves the backward equation with zero terminal and the
/// cost derivative of the m-part as source.
VariationResult solve_linearized_first(const VariationSpec& spec, const KineticHamiltonian& hk,
                                       const CostModel& cost, const Grid& grid, int dir_index = 0,
                                       const SolverOptions& opts = {});

/// Second-order system. psi channel: the (1,2) cross variation, whose only
/// source is -kappa grad u^(1) . grad u^(2). m0 channel: second
/// eps-derivative of the curve, with initial density 2 g_2, conservative
/// drift source 2 div(m^(1) kappa grad u^(1)), and HJB source built from the
/// cost derivatives and -kappa |grad u^(1)|^2.
VariationResult solve_linearized_second(const VariationSpec& spec, const KineticHamiltonian& hk,
                                        const CostModel& cost,
                                        const std::vector<VariationResult>& first_order,
                                        const Grid& grid, const SolverOptions& opts = {});

/// Third-order system, m0 channel with g_1 = 1, g_2 = 0 only (the direction
/// set used for the cubic cost coefficient). Source of the backward equation
/// is the eps^3 Taylor coefficient of the coupled system:
///   -du/dt - beta u_xx + 3 kappa u^(1)_x u^(2)_x
///     = F1 m^(3) + 3 F2 m^(1) m^(2) + F3 (m^(1))^3,
/// and the forward part carries 3 div(kappa (m^(1) u^(2)_x + m^(2) u^(1)_x)).
VariationResult solve_linearized_third(const VariationSpec& spec, const KineticHamiltonian& hk,
                                       const CostModel& cost, const VariationResult& first,
                                       const VariationResult& second, const Grid& grid,
                                       const SolverOptions& opts = {});

/// A nonlinear measurement tagged with its stencil coordinates. psi channel:
/// psi = eps1 f_1 + eps2 f_2. m0 channel: m0 = eps1 g_1 + eps1^2 g_2 (eps2
/// unused, must be 0).
struct SampledRecord {
    double eps1 = 0.0;
    double eps2 = 0.0;
    MeasurementRecord rec;
};

/// A variation of the measurement itself (trace + initial snapshot), the
/// observable quantity the reconstruction pipeline consumes.
struct MeasurementVariation {
    int order = 0;
    MeasurementRecord rec;
};

/// Divided-difference extraction of measurement variations.
/// psi channel: order 1 is the central difference (R(e,0) - R(-e,0))/2e;
/// order 2 is the four-point cross difference over (+-e1, +-e2). m0 channel:
/// least-squares fit of R(eps) = eps V1 + eps^2 V2/2 (+ eps^3 V3/6 when
/// order 3 is requested) over one-sided samples; every eps1 must be > 0.
/// Throws std::invalid_argument on an incomplete stencil, AdmissibilityError
/// on a negative m0-channel eps, DegenerateProbeError when the fit's normal
/// matrix has condition number above 1e8.
MeasurementVariation extract_variation(const std::vector<SampledRecord>& records,
                                       const VariationSpec& spec, int order);

} // namespace mfg1d
