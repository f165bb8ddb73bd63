#pragma once

#include "mfg1d/grid.hpp"

namespace mfg1d {

enum class TimeScheme { implicit_euler, crank_nicolson };
enum class DriftDiscretization { centered_flux, upwind_flux };

struct SolverOptions {
    TimeScheme scheme = TimeScheme::crank_nicolson;
    DriftDiscretization drift_discretization = DriftDiscretization::centered_flux;
};

/// Transport coefficient a(x,t) = kappa(x) * du/dx at the nodes.
struct DriftField {
    SpaceTimeField a;
};

/// Extra flux field at the half-nodes, G_{i+1/2} at time level j
/// (shape (n_t+1) x (n_x-1)). The forward solver adds div G to the
/// right-hand side in conservative form, so it contributes zero total mass.
struct HalfNodeFlux {
    Grid grid;
    std::vector<double> v; // (n_t+1) * (n_x-1)

    HalfNodeFlux() = default;
    explicit HalfNodeFlux(const Grid& g)
        : grid(g), v(static_cast<std::size_t>(g.n_t + 1) * (g.n_x - 1), 0.0) {}

    double& at(int j, int i) { return v[static_cast<std::size_t>(j) * (grid.n_x - 1) + i]; }
    double at(int j, int i) const { return v[static_cast<std::size_t>(j) * (grid.n_x - 1) + i]; }
};

/// Builds the half-node flux c * m * kappa * du/dx from nodal fields
/// (arithmetic mean of m and kappa at half-nodes, exact difference for du/dx).
HalfNodeFlux drift_flux(double c, const SpaceTimeField& m, const SpatialField& kappa,
                        const SpaceTimeField& u);

/// Solves the backward problem
///   -du/dt - beta u_xx = s(x,t)  on (0,1) x (0,T),
///   u(., T) = terminal,  u_x(0,.) = u_x(1,.) = 0,
/// by stepping from t = T down to t = 0 with the selected scheme.
SpaceTimeField solve_backward(const SpatialField& terminal, const SpaceTimeField& source,
                              const Grid& grid, const SolverOptions& opts = {});

/// Solves the forward problem in conservative (flux) form
///   dm/dt = d/dx(beta m_x + a m + G) + s,   m(., 0) = initial,
/// with zero total flux at both endpoints. Equivalent to
/// dm/dt - beta m_xx - d/dx(m a) = div G + s with the no-flux boundary
/// condition (beta m_x + m a + G) = 0 at x = 0, 1. Discrete total mass
/// (trapezoid weights) is conserved exactly when s = 0.
SpaceTimeField solve_forward(const SpatialField& initial, const DriftField* drift,
                             const SpaceTimeField& source, const Grid& grid,
                             const SolverOptions& opts = {},
                             const HalfNodeFlux* flux_source = nullptr);

/// Max-norm residual of the discrete backward step equations for a candidate
/// solution; zero (up to roundoff) iff u is the solve_backward output for
/// this source.
double backward_residual(const SpaceTimeField& u, const SpaceTimeField& source,
                         const SolverOptions& opts = {});

/// Same check for the forward scheme.
double forward_residual(const SpaceTimeField& m, const DriftField* drift,
                        const SpaceTimeField& source, const SolverOptions& opts = {},
                        const HalfNodeFlux* flux_source = nullptr);

/// Nodal derivative df/dx: second-order central differences inside,
/// second-order one-sided stencils at the endpoints.
SpatialField gradient(const SpatialField& f);
SpaceTimeField gradient_xt(const SpaceTimeField& f);

} // namespace mfg1d
