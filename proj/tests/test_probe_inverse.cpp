#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfg1d/probe_inverse.hpp"

#include <cmath>

using namespace mfg1d;

namespace {

/// Backward caloric field with source -S * gamma^j and zero terminal value.
SpaceTimeField manufactured_variation(const Grid& g, const SpatialField& S, double gamma) {
    SpaceTimeField src(g);
    double p = 1.0;
    for (int j = 0; j <= g.n_t; ++j) {
        for (int i = 0; i < g.n_x; ++i) src.at(j, i) = -S[i] * p;
        p *= gamma;
    }
    return solve_backward(SpatialField(g), src, g);
}

} // namespace

TEST_CASE("time_factor closed forms") {
    CHECK(time_factor(0.0, 0.0, 1.0, 1.0) == doctest::Approx(1.0));
    const double mu = M_PI * M_PI;
    CHECK(time_factor(0.0, mu, 1.0, 1.0) ==
          doctest::Approx((1.0 - std::exp(-mu)) / mu).epsilon(1e-14));
    CHECK(time_factor(0.0, mu, 1.0, 1.0) == doctest::Approx(0.101316).epsilon(1e-5));
    // Degenerate exponent: the integrand is 1.
    CHECK(time_factor(2.0 * mu, mu, 2.0, 0.7) == doctest::Approx(0.7));
    CHECK(time_factor(1.0, 0.0, 1.0, 2.0) ==
          doctest::Approx((std::exp(2.0) - 1.0)).epsilon(1e-14));
}

TEST_CASE("step_decay matches the scheme amplification factors") {
    Grid g = make_grid(101, 80, 1.0, 1.3);
    const int k = 4;
    const double z = g.beta * g.discrete_eigenvalue(k) * g.dt();
    CHECK(step_decay(g, k) == doctest::Approx((1.0 - 0.5 * z) / (1.0 + 0.5 * z)).epsilon(1e-14));
    CHECK(step_decay(g, k, TimeScheme::implicit_euler) ==
          doctest::Approx(1.0 / (1.0 + z)).epsilon(1e-14));
    CHECK(step_decay(g, 0) == 1.0);
}

TEST_CASE("discrete time factor is the exact calibration of the scheme") {
    Grid g = make_grid(201, 150, 1.0, 1.0);
    for (int k : {0, 1, 7, 50}) {
        for (double gamma : {1.0, 0.97}) {
            SpatialField S = sample(g, [&](double x) { return std::cos(k * M_PI * x); });
            MeasurementRecord var = measure(manufactured_variation(g, S, gamma));
            const double norm_sq = k == 0 ? 1.0 : 0.5;
            const double tf = discrete_time_factor(g, gamma, g.discrete_eigenvalue(k));
            CHECK(data_functional(var, k) == doctest::Approx(-tf * norm_sq).epsilon(1e-11));
        }
    }
}

TEST_CASE("continuum pairing identity holds up to discretization error") {
    Grid g = make_grid(401, 800, 1.0, 1.0);
    const double lambda = 1.0;
    SpatialField S = sample(g, [](double x) { return std::cos(2.0 * M_PI * x); });
    MeasurementRecord var = measure(manufactured_variation(g, S, std::exp(lambda * g.dt())));
    const double tf = time_factor(lambda, 4.0 * M_PI * M_PI, g.beta, g.T);
    CHECK(data_functional(var, 2) == doctest::Approx(-tf * 0.5).epsilon(1e-4));
}

TEST_CASE("source recovery is near exact with discrete calibration") {
    Grid g = make_grid(201, 150, 1.0, 1.0);
    SpatialField S = sample(g, [](double x) { return std::cos(M_PI * x) + std::cos(3.0 * M_PI * x); });
    MeasurementRecord var = measure(manufactured_variation(g, S, 1.0));
    SourceRecovery r = recover_source(var, 0.0);
    CHECK(max_abs(r.recovered - S) < 1e-10);
    CHECK(r.modes_skipped.empty());
    CHECK(static_cast<int>(r.modes_used.size()) == g.n_x / 4 + 1);

    SpatialField ones = sample(g, [](double) { return 1.0; });
    MeasurementRecord var0 = measure(manufactured_variation(g, ones, 1.0));
    SourceRecovery r0 = recover_source(var0, 0.0);
    CHECK(max_abs(r0.recovered - ones) < 1e-10);
}

TEST_CASE("continuum calibration error shrinks under refinement") {
    SpatialField S_c, S_f;
    auto run = [](int n_x, int n_t) {
        Grid g = make_grid(n_x, n_t, 1.0, 1.0);
        SpatialField S = sample(g, [](double x) { return std::cos(2.0 * M_PI * x); });
        MeasurementRecord var = measure(manufactured_variation(g, S, 1.0));
        RecoverOptions opts;
        opts.discrete_calibration = false;
        opts.max_mode = 8;
        return max_abs(recover_source(var, 0.0, opts).recovered - S);
    };
    const double coarse = run(101, 100);
    const double fine = run(201, 200);
    CHECK(coarse < 2e-3);
    CHECK(fine < coarse / 3.0);
}

TEST_CASE("degenerate time factors are skipped, not divided by") {
    Grid g = make_grid(101, 100, 1.0, 1.0);
    SpatialField S = sample(g, [](double x) { return std::cos(M_PI * x); });
    MeasurementRecord var = measure(manufactured_variation(g, S, 1.0));
    RecoverOptions opts;
    opts.discrete_calibration = false;
    SourceRecovery r = recover_source(var, -1e9, opts);
    CHECK_FALSE(r.modes_skipped.empty());
    CHECK(r.modes_used.empty());
    CHECK(max_abs(r.recovered) == 0.0);
}

TEST_CASE("exponential probes agree with eigen probes on the same data") {
    Grid g = make_grid(401, 400, 1.0, 1.0);
    SpatialField S = sample(g, [](double x) { return std::cos(M_PI * x) + 0.5 * std::cos(2.0 * M_PI * x); });
    MeasurementRecord var = measure(manufactured_variation(g, S, 1.0));
    RecoverOptions eigen;
    eigen.discrete_calibration = false;
    eigen.max_mode = 6;
    RecoverOptions expo = eigen;
    expo.probe = ProbeKind::complex_exponential;
    const double err_eigen = max_abs(recover_source(var, 0.0, eigen).recovered - S);
    const double err_expo = max_abs(recover_source(var, 0.0, expo).recovered - S);
    CHECK(err_eigen < 1e-3);
    CHECK(err_expo < 5.0 * std::max(err_eigen, 1e-4));
}

TEST_CASE("kinetic coefficient recovery from noise-free cross variations") {
    Grid g = make_grid(201, 200, 1.0, 1.0);
    KineticHamiltonian hk{sample(g, [](double x) { return 2.0 + std::cos(2.0 * M_PI * x); })};
    CostModel no_cost = LocalAnalyticCost{};

    // One probe mode: over this horizon the k >= 2 signal at t = 0 sits below
    // double-precision rounding noise of the terminal amplitude.
    std::vector<KappaProbeData> probes;
    for (int k : {1}) {
        const double rho = step_decay(g, k);
        const double A = std::pow(rho, -g.n_t);
        VariationSpec spec{VariationChannel::psi_linearization,
                          {sample(g, [&](double x) { return A * std::cos(k * M_PI * x); }),
                           sample(g, [&](double x) { return A * std::cos(k * M_PI * x); })}};
        VariationResult f1 = solve_linearized_first(spec, hk, no_cost, g, 0);
        VariationResult f2 = solve_linearized_first(spec, hk, no_cost, g, 1);
        VariationResult cross = solve_linearized_second(spec, hk, no_cost, {f1, f2}, g);
        probes.push_back({k, measure(cross.u_var), 0.0});
    }

    KappaRecovery r = recover_kappa(g, probes);
    CHECK(rel_l2_error(r.kappa, hk.kappa) < 2e-2);
    CHECK_FALSE(r.extrapolated_nodes.empty()); // gradient weights vanish at the walls
    for (int node : r.extrapolated_nodes) CHECK((node < 5 || node > g.n_x - 6));
}

TEST_CASE("local cost coefficients from noise-free density variations") {
    Grid g = make_grid(201, 200, 1.0, 1.0);
    SpatialField kappa = sample(g, [](double) { return 1.0; });
    KineticHamiltonian hk{kappa};
    CostModel cost = LocalAnalyticCost{{
        sample(g, [](double x) { return std::cos(2.0 * M_PI * x); }),
        sample(g, [](double x) { return std::cos(M_PI * x); }),
    }};
    VariationSpec spec{VariationChannel::m0_variation,
                      {sample(g, [](double) { return 1.0; }), sample(g, [](double) { return 0.0; })}};
    VariationResult d1 = solve_linearized_first(spec, hk, cost, g);
    VariationResult d2 = solve_linearized_second(spec, hk, cost, {d1}, g);
    std::vector<MeasurementVariation> bundles{{1, measure(d1.u_var)}, {2, measure(d2.u_var)}};

    FCoeffRecovery r = recover_F_coeffs(g, bundles, kappa, 2);
    REQUIRE(r.coeffs.size() == 2);
    CHECK(rel_l2_error(r.coeffs[0], std::get<LocalAnalyticCost>(cost).coeffs[0]) < 2e-3);
    CHECK(rel_l2_error(r.coeffs[1], std::get<LocalAnalyticCost>(cost).coeffs[1]) < 1e-2);
}

TEST_CASE("kernel recovery from noise-free second variations") {
    Grid g = make_grid(201, 200, 1.0, 1.0);
    std::vector<double> raw(static_cast<std::size_t>(g.n_x) * g.n_x);
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_x; ++j)
            raw[static_cast<std::size_t>(i) * g.n_x + j] =
                std::cos(M_PI * g.x(i)) * std::cos(M_PI * g.x(j)) +
                0.5 * std::cos(2.0 * M_PI * g.x(i)) * std::cos(2.0 * M_PI * g.x(j));
    NonlocalKernelCost truth = NonlocalKernelCost::from_samples(g, raw);
    CostModel cost = truth;
    KineticHamiltonian hk{sample(g, [](double) { return 1.0; })};

    std::vector<std::pair<int, MeasurementRecord>> bundles;
    for (int k = 0; k <= 3; ++k) {
        VariationSpec spec{VariationChannel::m0_variation,
                          {sample(g, [](double) { return 1.0; }),
                           sample(g, [&](double x) { return std::cos(k * M_PI * x); })}};
        VariationResult d1 = solve_linearized_first(spec, hk, cost, g);
        VariationResult d2 = solve_linearized_second(spec, hk, cost, {d1}, g);
        bundles.push_back({k, measure(d2.u_var)});
    }

    KernelRecovery r = recover_kernel(g, bundles, 3);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r.kernel.size(); ++i) {
        const double d = r.kernel[i] - truth.values()[i];
        num += d * d;
        den += truth.values()[i] * truth.values()[i];
    }
    CHECK(std::sqrt(num / den) < 5e-3);
    CHECK(r.mode0_diagnostic < 1e-6);

    CHECK_THROWS_AS(recover_kernel(g, bundles, g.n_x / 4 + 1), std::invalid_argument);
}

TEST_CASE("recovery is deterministic") {
    Grid g = make_grid(101, 100, 1.0, 1.0);
    SpatialField S = sample(g, [](double x) { return std::cos(M_PI * x) + 0.1 * std::cos(5.0 * M_PI * x); });
    MeasurementRecord var = measure(manufactured_variation(g, S, 1.0));
    SourceRecovery a = recover_source(var, 0.0);
    SourceRecovery b = recover_source(var, 0.0);
    for (int i = 0; i < g.n_x; ++i) CHECK(a.recovered[i] == b.recovered[i]);
}
