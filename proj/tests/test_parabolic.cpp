#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfg1d/parabolic.hpp"

#include <cmath>

using namespace mfg1d;

namespace {

double backward_caloric_error(int n_x, int n_t) {
    Grid g = make_grid(n_x, n_t, 1.0, 1.0);
    const double mu = M_PI * M_PI;
    SpatialField terminal = sample(g, [](double x) { return std::cos(M_PI * x); });
    SpaceTimeField u = solve_backward(terminal, SpaceTimeField(g), g);
    SpaceTimeField exact = sample_xt(g, [&](double x, double t) {
        return std::exp(-mu * (g.T - t)) * std::cos(M_PI * x);
    });
    return max_abs(u - exact);
}

double forward_source_error(int n_x, int n_t) {
    // dm/dt - m_xx = cos(2 pi x), m(.,0) = 1:
    // m = 1 + (1 - e^{-4 pi^2 t})/(4 pi^2) cos(2 pi x).
    Grid g = make_grid(n_x, n_t, 1.0, 1.0);
    const double mu = 4.0 * M_PI * M_PI;
    SpatialField initial = sample(g, [](double) { return 1.0; });
    SpaceTimeField src = sample_xt(g, [](double x, double) { return std::cos(2.0 * M_PI * x); });
    SpaceTimeField m = solve_forward(initial, nullptr, src, g);
    SpaceTimeField exact = sample_xt(g, [&](double x, double t) {
        return 1.0 + (1.0 - std::exp(-mu * t)) / mu * std::cos(2.0 * M_PI * x);
    });
    return max_abs(m - exact);
}

} // namespace

TEST_CASE("backward caloric solution against separation of variables") {
    CHECK(backward_caloric_error(201, 400) < 2e-4);
}

TEST_CASE("solver error drops by at least 3.5x per refinement") {
    const double e0 = backward_caloric_error(51, 50);
    const double e1 = backward_caloric_error(101, 100);
    const double e2 = backward_caloric_error(201, 200);
    CHECK(e0 / e1 > 3.5);
    CHECK(e1 / e2 > 3.5);

    const double f0 = forward_source_error(51, 50);
    const double f1 = forward_source_error(101, 100);
    const double f2 = forward_source_error(201, 200);
    CHECK(f0 / f1 > 3.5);
    CHECK(f1 / f2 > 3.5);
}

TEST_CASE("discrete eigenmode decay is exact per step") {
    Grid g = make_grid(101, 50, 0.5, 0.7);
    const int k = 3;
    SpatialField gk = sample(g, [&](double x) { return std::cos(k * M_PI * x); });
    SpaceTimeField m = solve_forward(gk, nullptr, SpaceTimeField(g), g);
    const double z = g.beta * g.discrete_eigenvalue(k) * g.dt();
    const double rho = (1.0 - 0.5 * z) / (1.0 + 0.5 * z);
    double factor = 1.0;
    for (int j = 0; j <= g.n_t; ++j) {
        for (int i = 0; i < g.n_x; i += 7)
            CHECK(m.at(j, i) == doctest::Approx(factor * gk[i]).epsilon(1e-11));
        factor *= rho;
    }
}

TEST_CASE("mass conservation with drift to 1e-12 relative") {
    Grid g = make_grid(201, 200, 1.0, 1.0);
    SpatialField m0 = sample(g, [](double x) { return 0.5 + 0.4 * std::cos(M_PI * x); });
    SpatialField kappa = sample(g, [](double x) { return 2.0 + std::cos(2.0 * M_PI * x); });
    SpaceTimeField u = sample_xt(g, [](double x, double t) {
        return 0.3 * std::sin(2.0 * M_PI * x) * std::exp(-t);
    });
    DriftField drift{gradient_xt(u)};
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) drift.a.at(j, i) *= kappa[i];

    for (auto scheme : {TimeScheme::crank_nicolson, TimeScheme::implicit_euler})
        for (auto dd : {DriftDiscretization::centered_flux, DriftDiscretization::upwind_flux}) {
            SolverOptions opts{scheme, dd};
            SpaceTimeField m = solve_forward(m0, &drift, SpaceTimeField(g), g, opts);
            const double mass0 = integrate_space(m.level(0));
            for (int j = 1; j <= g.n_t; j += 13)
                CHECK(std::abs(integrate_space(m.level(j)) - mass0) < 1e-12 * std::abs(mass0));
        }
}

TEST_CASE("flux source moves mass around but conserves the total") {
    Grid g = make_grid(101, 100, 1.0, 1.0);
    SpatialField m0 = sample(g, [](double) { return 1.0; });
    HalfNodeFlux G(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i + 1 < g.n_x; ++i)
            G.at(j, i) = std::sin(2.0 * M_PI * (i + 0.5) * g.h()) * std::exp(-g.t(j));
    SpaceTimeField m = solve_forward(m0, nullptr, SpaceTimeField(g), g, {}, &G);
    CHECK(max_abs(m - sample_xt(g, [](double, double) { return 1.0; })) > 1e-3);
    for (int j = 0; j <= g.n_t; j += 11)
        CHECK(integrate_space(m.level(j)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("implicit Euler with upwind drift preserves nonnegativity") {
    Grid g = make_grid(101, 50, 1.0, 0.05);
    // Narrow bump plus a strong oscillating drift.
    SpatialField m0 = sample(g, [](double x) {
        const double d = x - 0.3;
        return std::exp(-200.0 * d * d);
    });
    SpaceTimeField u = sample_xt(g, [](double x, double) { return std::cos(3.0 * M_PI * x); });
    DriftField drift{gradient_xt(u)};
    for (double& v : drift.a.v) v *= 2.0;
    SolverOptions opts{TimeScheme::implicit_euler, DriftDiscretization::upwind_flux};
    SpaceTimeField m = solve_forward(m0, &drift, SpaceTimeField(g), g, opts);
    double min_m = 0.0;
    for (double v : m.v) min_m = std::min(min_m, v);
    CHECK(min_m >= -1e-14);
}

TEST_CASE("upwind transport direction: flux d/dx(a m) moves mass toward -x for a > 0") {
    Grid g = make_grid(201, 200, 0.5, 1e-4);
    SpatialField m0 = sample(g, [](double x) {
        const double d = x - 0.5;
        return std::exp(-300.0 * d * d);
    });
    SpaceTimeField ones = sample_xt(g, [](double, double) { return 1.0; });
    DriftField drift{ones}; // a = +1
    SolverOptions opts{TimeScheme::implicit_euler, DriftDiscretization::upwind_flux};
    SpaceTimeField m = solve_forward(m0, &drift, SpaceTimeField(g), g, opts);
    auto center = [&](const SpatialField& f) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < g.n_x; ++i) {
            num += g.quad_weight(i) * g.x(i) * f[i];
            den += g.quad_weight(i) * f[i];
        }
        return num / den;
    };
    CHECK(center(m.level(g.n_t)) < center(m.level(0)) - 0.1);
}

TEST_CASE("duality of the source-free forward and backward sweeps") {
    Grid g = make_grid(101, 64, 1.0, 1.3);
    SpatialField m0 = sample(g, [](double x) { return 0.7 + 0.3 * std::cos(2.0 * M_PI * x); });
    SpatialField uT = sample(g, [](double x) { return std::sin(M_PI * x) + x * x; });
    SpaceTimeField m = solve_forward(m0, nullptr, SpaceTimeField(g), g);
    SpaceTimeField u = solve_backward(uT, SpaceTimeField(g), g);
    auto pair_at = [&](int j) {
        double s = 0.0;
        for (int i = 0; i < g.n_x; ++i) s += g.quad_weight(i) * m.at(j, i) * u.at(j, i);
        return s;
    };
    const double p0 = pair_at(0);
    for (int j = 1; j <= g.n_t; j += 9) CHECK(pair_at(j) == doctest::Approx(p0).epsilon(1e-12));
}

TEST_CASE("residual checks vanish on solver output and flag tampering") {
    Grid g = make_grid(51, 40, 1.0, 1.0);
    SpaceTimeField src = sample_xt(g, [](double x, double t) { return std::cos(M_PI * x) * (1.0 + t); });
    SpatialField terminal = sample(g, [](double x) { return x * (1.0 - x); });
    SpaceTimeField u = solve_backward(terminal, src, g);
    CHECK(backward_residual(u, src) < 1e-11);
    SpaceTimeField tampered = u;
    tampered.at(3, 7) += 1e-3;
    CHECK(backward_residual(tampered, src) > 1e-3);

    SpatialField m0 = sample(g, [](double x) { return 1.0 + 0.5 * std::cos(2.0 * M_PI * x); });
    SpaceTimeField m = solve_forward(m0, nullptr, src, g);
    CHECK(forward_residual(m, nullptr, src) < 1e-11);
}

TEST_CASE("nodal gradient is exact for quadratics") {
    Grid g = make_grid(41, 4, 1.0, 1.0);
    SpatialField f = sample(g, [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; });
    SpatialField df = gradient(f);
    for (int i = 0; i < g.n_x; ++i)
        CHECK(df[i] == doctest::Approx(6.0 * g.x(i) - 2.0).epsilon(1e-10));
}
