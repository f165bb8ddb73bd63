#include "mfg1d/parabolic.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfg1d {

namespace {

/// Thomas algorithm for a tridiagonal system; overwrites rhs with the
/// solution. diag/lower/upper are copied internally.
void solve_tridiag(std::vector<double> lower, std::vector<double> diag,
                   std::vector<double> upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        assert(diag[i - 1] != 0.0 && "singular tridiagonal system");
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    assert(diag[n - 1] != 0.0 && "singular tridiagonal system");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

/// Row coefficients of the spatial operator L at one time level:
/// diffusion in flux form plus optional drift flux. Rows satisfy
/// sum_i w_i (L m)_i = 0 (telescoping fluxes), which is what makes the
/// forward solver conserve mass exactly.
struct OperatorRows {
    std::vector<double> lower, diag, upper;
};

OperatorRows assemble_operator(const Grid& g, const SpaceTimeField* drift_a, int level,
                               DriftDiscretization dd) {
    const int n = g.n_x;
    const double h = g.h();
    const double beta = g.beta;
    OperatorRows rows{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                      std::vector<double>(n, 0.0)};
    // Accumulate flux contributions edge by edge. Edge i+1/2 carries
    // flux beta*(m_{i+1}-m_i)/h + a_{i+1/2}*m_tilde; node i receives +flux/w_i,
    // node i+1 receives -flux/w_{i+1}.
    for (int i = 0; i + 1 < n; ++i) {
        const double wi = g.quad_weight(i);
        const double wip = g.quad_weight(i + 1);
        // diffusion part
        rows.diag[i] += -beta / (h * wi);
        rows.upper[i] += beta / (h * wi);
        rows.diag[i + 1] += -beta / (h * wip);
        rows.lower[i + 1] += beta / (h * wip);
        if (drift_a) {
            const double a = 0.5 * (drift_a->at(level, i) + drift_a->at(level, i + 1));
            double ci = 0.0, cip = 0.0; // m_tilde = ci*m_i + cip*m_{i+1}
            if (dd == DriftDiscretization::centered_flux) {
                ci = 0.5;
                cip = 0.5;
            } else {
                if (a >= 0.0)
                    cip = 1.0;
                else
                    ci = 1.0;
            }
            rows.diag[i] += a * ci / wi;
            rows.upper[i] += a * cip / wi;
            rows.diag[i + 1] -= a * cip / wip;
            rows.lower[i + 1] -= a * ci / wip;
        }
    }
    return rows;
}

/// y = c * (L m) for the assembled rows.
void apply_operator(const OperatorRows& rows, const std::vector<double>& m, double c,
                    std::vector<double>& y) {
    const std::size_t n = rows.diag.size();
    y[0] = c * (rows.diag[0] * m[0] + rows.upper[0] * m[1]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        y[i] = c * (rows.lower[i] * m[i - 1] + rows.diag[i] * m[i] + rows.upper[i] * m[i + 1]);
    y[n - 1] = c * (rows.lower[n - 1] * m[n - 2] + rows.diag[n - 1] * m[n - 1]);
}

/// Nodal divergence of a half-node flux field at one level: (div G)_i =
/// (G_{i+1/2} - G_{i-1/2}) / w_i with zero flux outside the domain.
void flux_divergence(const HalfNodeFlux& G, int level, std::vector<double>& out) {
    const Grid& g = G.grid;
    for (int i = 0; i < g.n_x; ++i) {
        const double right = (i < g.n_x - 1) ? G.at(level, i) : 0.0;
        const double left = (i > 0) ? G.at(level, i - 1) : 0.0;
        out[static_cast<std::size_t>(i)] = (right - left) / g.quad_weight(i);
    }
}

} // namespace

HalfNodeFlux drift_flux(double c, const SpaceTimeField& m, const SpatialField& kappa,
                        const SpaceTimeField& u) {
    const Grid& g = m.grid;
    const double h = g.h();
    HalfNodeFlux G(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i + 1 < g.n_x; ++i) {
            const double mk = 0.5 * (m.at(j, i) + m.at(j, i + 1));
            const double kk = 0.5 * (kappa[i] + kappa[i + 1]);
            const double du = (u.at(j, i + 1) - u.at(j, i)) / h;
            G.at(j, i) = c * mk * kk * du;
        }
    return G;
}

SpaceTimeField solve_backward(const SpatialField& terminal, const SpaceTimeField& source,
                              const Grid& grid, const SolverOptions& opts) {
    if (terminal.grid != grid || source.grid != grid)
        throw std::invalid_argument("solve_backward: field shapes do not match grid");
    const int n = grid.n_x;
    const double dt = grid.dt();
    const bool cn = opts.scheme == TimeScheme::crank_nicolson;
    const double theta = cn ? 0.5 : 1.0;

    const OperatorRows L = assemble_operator(grid, nullptr, 0, opts.drift_discretization);

    SpaceTimeField u(grid);
    u.set_level(grid.n_t, terminal);

    std::vector<double> rhs(static_cast<std::size_t>(n));
    std::vector<double> tmp(static_cast<std::size_t>(n));
    std::vector<double> lower(static_cast<std::size_t>(n)), diag(static_cast<std::size_t>(n)),
        upper(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        lower[static_cast<std::size_t>(i)] = -theta * dt * L.lower[static_cast<std::size_t>(i)];
        diag[static_cast<std::size_t>(i)] = 1.0 - theta * dt * L.diag[static_cast<std::size_t>(i)];
        upper[static_cast<std::size_t>(i)] = -theta * dt * L.upper[static_cast<std::size_t>(i)];
    }

    for (int j = grid.n_t - 1; j >= 0; --j) {
        std::vector<double> prev(u.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n,
                                 u.v.begin() + static_cast<std::ptrdiff_t>(j + 2) * n);
        if (cn) {
            apply_operator(L, prev, (1.0 - theta) * dt, tmp);
            for (int i = 0; i < n; ++i)
                rhs[static_cast<std::size_t>(i)] =
                    prev[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(i)] +
                    0.5 * dt * (source.at(j, i) + source.at(j + 1, i));
        } else {
            for (int i = 0; i < n; ++i)
                rhs[static_cast<std::size_t>(i)] = prev[static_cast<std::size_t>(i)] + dt * source.at(j, i);
        }
        solve_tridiag(lower, diag, upper, rhs);
        for (int i = 0; i < n; ++i) u.at(j, i) = rhs[static_cast<std::size_t>(i)];
    }
    return u;
}

SpaceTimeField solve_forward(const SpatialField& initial, const DriftField* drift,
                             const SpaceTimeField& source, const Grid& grid,
                             const SolverOptions& opts, const HalfNodeFlux* flux_source) {
    if (initial.grid != grid || source.grid != grid)
        throw std::invalid_argument("solve_forward: field shapes do not match grid");
    const int n = grid.n_x;
    const double dt = grid.dt();
    const bool cn = opts.scheme == TimeScheme::crank_nicolson;
    const double theta = cn ? 0.5 : 1.0;
    const SpaceTimeField* a = drift ? &drift->a : nullptr;

    SpaceTimeField m(grid);
    m.set_level(0, initial);

    std::vector<double> rhs(static_cast<std::size_t>(n)), tmp(static_cast<std::size_t>(n)),
        div_g(static_cast<std::size_t>(n), 0.0), div_g_next(static_cast<std::size_t>(n), 0.0);
    std::vector<double> lower(static_cast<std::size_t>(n)), diag(static_cast<std::size_t>(n)),
        upper(static_cast<std::size_t>(n));

    for (int j = 0; j < grid.n_t; ++j) {
        std::vector<double> prev(m.v.begin() + static_cast<std::ptrdiff_t>(j) * n,
                                 m.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
        const OperatorRows L_next =
            assemble_operator(grid, a, j + 1, opts.drift_discretization);
        for (int i = 0; i < n; ++i) {
            lower[static_cast<std::size_t>(i)] = -theta * dt * L_next.lower[static_cast<std::size_t>(i)];
            diag[static_cast<std::size_t>(i)] = 1.0 - theta * dt * L_next.diag[static_cast<std::size_t>(i)];
            upper[static_cast<std::size_t>(i)] = -theta * dt * L_next.upper[static_cast<std::size_t>(i)];
        }
        if (flux_source) {
            flux_divergence(*flux_source, j, div_g);
            flux_divergence(*flux_source, j + 1, div_g_next);
        }
        if (cn) {
            const OperatorRows L_cur = assemble_operator(grid, a, j, opts.drift_discretization);
            apply_operator(L_cur, prev, (1.0 - theta) * dt, tmp);
            for (int i = 0; i < n; ++i) {
                const auto k = static_cast<std::size_t>(i);
                rhs[k] = prev[k] + tmp[k] + 0.5 * dt * (source.at(j, i) + source.at(j + 1, i)) +
                         0.5 * dt * (div_g[k] + div_g_next[k]);
            }
        } else {
            for (int i = 0; i < n; ++i) {
                const auto k = static_cast<std::size_t>(i);
                rhs[k] = prev[k] + dt * source.at(j + 1, i) + dt * div_g_next[k];
            }
        }
        solve_tridiag(lower, diag, upper, rhs);
        for (int i = 0; i < n; ++i) m.at(j + 1, i) = rhs[static_cast<std::size_t>(i)];
    }
    return m;
}

double backward_residual(const SpaceTimeField& u, const SpaceTimeField& source,
                         const SolverOptions& opts) {
    const Grid& grid = u.grid;
    const int n = grid.n_x;
    const double dt = grid.dt();
    const bool cn = opts.scheme == TimeScheme::crank_nicolson;
    const OperatorRows L = assemble_operator(grid, nullptr, 0, opts.drift_discretization);

    std::vector<double> lu_cur(static_cast<std::size_t>(n)), lu_next(static_cast<std::size_t>(n));
    double worst = 0.0;
    for (int j = 0; j < grid.n_t; ++j) {
        std::vector<double> cur(u.v.begin() + static_cast<std::ptrdiff_t>(j) * n,
                                u.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
        std::vector<double> next(u.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n,
                                 u.v.begin() + static_cast<std::ptrdiff_t>(j + 2) * n);
        apply_operator(L, cur, 1.0, lu_cur);
        apply_operator(L, next, 1.0, lu_next);
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            double r;
            if (cn)
                r = -(next[k] - cur[k]) / dt - 0.5 * (lu_cur[k] + lu_next[k]) -
                    0.5 * (source.at(j, i) + source.at(j + 1, i));
            else
                r = -(next[k] - cur[k]) / dt - lu_cur[k] - source.at(j, i);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

double forward_residual(const SpaceTimeField& m, const DriftField* drift,
                        const SpaceTimeField& source, const SolverOptions& opts,
                        const HalfNodeFlux* flux_source) {
    const Grid& grid = m.grid;
    const int n = grid.n_x;
    const double dt = grid.dt();
    const bool cn = opts.scheme == TimeScheme::crank_nicolson;
    const SpaceTimeField* a = drift ? &drift->a : nullptr;

    std::vector<double> lm_cur(static_cast<std::size_t>(n)), lm_next(static_cast<std::size_t>(n)),
        div_g(static_cast<std::size_t>(n), 0.0), div_g_next(static_cast<std::size_t>(n), 0.0);
    double worst = 0.0;
    for (int j = 0; j < grid.n_t; ++j) {
        std::vector<double> cur(m.v.begin() + static_cast<std::ptrdiff_t>(j) * n,
                                m.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
        std::vector<double> next(m.v.begin() + static_cast<std::ptrdiff_t>(j + 1) * n,
                                 m.v.begin() + static_cast<std::ptrdiff_t>(j + 2) * n);
        const OperatorRows L_cur = assemble_operator(grid, a, j, opts.drift_discretization);
        const OperatorRows L_next = assemble_operator(grid, a, j + 1, opts.drift_discretization);
        apply_operator(L_cur, cur, 1.0, lm_cur);
        apply_operator(L_next, next, 1.0, lm_next);
        if (flux_source) {
            flux_divergence(*flux_source, j, div_g);
            flux_divergence(*flux_source, j + 1, div_g_next);
        }
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            double r;
            if (cn)
                r = (next[k] - cur[k]) / dt - 0.5 * (lm_cur[k] + lm_next[k]) -
                    0.5 * (source.at(j, i) + source.at(j + 1, i)) -
                    0.5 * (div_g[k] + div_g_next[k]);
            else
                r = (next[k] - cur[k]) / dt - lm_next[k] - source.at(j + 1, i) - div_g_next[k];
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

SpatialField gradient(const SpatialField& f) {
    const Grid& g = f.grid;
    const double h = g.h();
    const int n = g.n_x;
    SpatialField out(g);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (int i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return out;
}

SpaceTimeField gradient_xt(const SpaceTimeField& f) {
    const Grid& g = f.grid;
    const double h = g.h();
    const int n = g.n_x;
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j) {
        out.at(j, 0) = (-3.0 * f.at(j, 0) + 4.0 * f.at(j, 1) - f.at(j, 2)) / (2.0 * h);
        for (int i = 1; i + 1 < n; ++i) out.at(j, i) = (f.at(j, i + 1) - f.at(j, i - 1)) / (2.0 * h);
        out.at(j, n - 1) =
            (3.0 * f.at(j, n - 1) - 4.0 * f.at(j, n - 2) + f.at(j, n - 3)) / (2.0 * h);
    }
    return out;
}

} // namespace mfg1d
