#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfg1d/linearization.hpp"

#include <cmath>

using namespace mfg1d;

namespace {

double rec_distance(const MeasurementRecord& a, const MeasurementRecord& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.trace_left.size(); ++j) {
        d = std::max(d, std::abs(a.trace_left[j] - b.trace_left[j]));
        d = std::max(d, std::abs(a.trace_right[j] - b.trace_right[j]));
    }
    for (std::size_t i = 0; i < a.initial_snapshot.size(); ++i)
        d = std::max(d, std::abs(a.initial_snapshot[i] - b.initial_snapshot[i]));
    return d;
}

struct Setup {
    Grid g;
    KineticHamiltonian hk;
    CostModel cost;
};

Setup make_setup() {
    Grid g = make_grid(101, 100, 1.0, 1.0);
    KineticHamiltonian hk{sample(g, [](double x) { return 2.0 + std::cos(2.0 * M_PI * x); })};
    CostModel cost = LocalAnalyticCost{{
        sample(g, [](double x) { return std::cos(2.0 * M_PI * x); }),
        sample(g, [](double x) { return 1.0 + 0.5 * std::cos(M_PI * x); }),
        sample(g, [](double) { return 2.0; }),
    }};
    return {g, hk, cost};
}

MeasurementRecord nonlinear_psi_sample(const Setup& s, const VariationSpec& spec, double e1,
                                       double e2) {
    SpatialField psi = e1 * spec.directions[0];
    if (spec.directions.size() > 1) psi = psi + e2 * spec.directions[1];
    MfgProblem p{s.hk, s.cost, SpatialField(s.g), psi, s.g, true};
    return measure(solve_mfg(p).u);
}

MeasurementRecord nonlinear_m0_sample(const Setup& s, const VariationSpec& spec, double eps) {
    SpatialField m0 = eps * spec.directions[0] + (eps * eps) * spec.directions[1];
    MfgProblem p{s.hk, s.cost, m0, SpatialField(s.g), s.g};
    return measure(solve_mfg(p).u);
}

} // namespace

TEST_CASE("psi-channel first order is the backward heat flow of the direction") {
    Setup s = make_setup();
    const int k = 2;
    VariationSpec spec{VariationChannel::psi_linearization,
                      {sample(s.g, [&](double x) { return std::cos(k * M_PI * x); })}};
    VariationResult v = solve_linearized_first(spec, s.hk, s.cost, s.g);
    CHECK(v.order == "1");
    CHECK(max_abs(v.m_var) == 0.0);

    const double z = s.g.beta * s.g.discrete_eigenvalue(k) * s.g.dt();
    const double rho = (1.0 - 0.5 * z) / (1.0 + 0.5 * z);
    for (int j = s.g.n_t; j >= 0; j -= 7) {
        const double factor = std::pow(rho, s.g.n_t - j);
        for (int i = 0; i < s.g.n_x; i += 11)
            CHECK(v.u_var.at(j, i) ==
                  doctest::Approx(factor * std::cos(k * M_PI * s.g.x(i))).epsilon(1e-11));
    }
}

TEST_CASE("m0-channel first order: heat flow of g1 plus the coupled value response") {
    Setup s = make_setup();
    VariationSpec spec{VariationChannel::m0_variation,
                      {sample(s.g, [](double) { return 1.0; }),
                       sample(s.g, [](double x) { return std::cos(2.0 * M_PI * x); })}};
    VariationResult v = solve_linearized_first(spec, s.hk, s.cost, s.g);

    SpaceTimeField m_ref = solve_forward(spec.directions[0], nullptr, SpaceTimeField(s.g), s.g);
    CHECK(max_abs(v.m_var - m_ref) < 1e-13);
    CHECK(backward_residual(v.u_var, cost_derivative_apply(s.cost, v.m_var)) < 1e-12);
    CHECK(max_abs(v.u_var) > 1e-3);
}

TEST_CASE("g1 must be nonnegative in the m0 channel") {
    Setup s = make_setup();
    VariationSpec spec{VariationChannel::m0_variation,
                      {sample(s.g, [](double x) { return std::cos(2.0 * M_PI * x); }),
                       sample(s.g, [](double) { return 0.0; })}};
    CHECK_THROWS_AS(solve_linearized_first(spec, s.hk, s.cost, s.g), AdmissibilityError);
}

TEST_CASE("psi-channel divided differences converge to the direct solutions") {
    Setup s = make_setup();
    VariationSpec spec{VariationChannel::psi_linearization,
                      {sample(s.g, [](double x) { return std::cos(M_PI * x); }),
                       sample(s.g, [](double x) { return std::cos(2.0 * M_PI * x); })}};

    VariationResult d1 = solve_linearized_first(spec, s.hk, s.cost, s.g, 0);
    VariationResult d2 = solve_linearized_first(spec, s.hk, s.cost, s.g, 1);
    VariationResult cross = solve_linearized_second(spec, s.hk, s.cost, {d1, d2}, s.g);
    CHECK(cross.order == "2");
    CHECK(max_abs(cross.m_var) == 0.0);

    auto first_err = [&](double e) {
        std::vector<SampledRecord> recs{{e, 0.0, nonlinear_psi_sample(s, spec, e, 0.0)},
                                        {-e, 0.0, nonlinear_psi_sample(s, spec, -e, 0.0)}};
        MeasurementVariation v = extract_variation(recs, spec, 1);
        CHECK(v.rec.metadata.at("variation_order") == "1");
        return rec_distance(v.rec, measure(d1.u_var));
    };
    auto cross_err = [&](double e) {
        std::vector<SampledRecord> recs;
        for (double s1 : {e, -e})
            for (double s2 : {e, -e})
                recs.push_back({s1, s2, nonlinear_psi_sample(s, spec, s1, s2)});
        MeasurementVariation v = extract_variation(recs, spec, 2);
        return rec_distance(v.rec, measure(cross.u_var));
    };

    const double f1 = first_err(2e-2), f2 = first_err(1e-2);
    CHECK(f1 < 1e-3);
    CHECK(f1 / f2 > 3.0); // second-order stencil
    const double c1 = cross_err(4e-2), c2 = cross_err(2e-2);
    CHECK(c1 < 2e-2);
    CHECK(c1 / c2 > 3.0);
}

TEST_CASE("m0-channel fits converge to the direct solutions") {
    Setup s = make_setup();
    VariationSpec spec{VariationChannel::m0_variation,
                      {sample(s.g, [](double) { return 1.0; }),
                       sample(s.g, [](double x) { return std::cos(2.0 * M_PI * x); })}};
    VariationResult d1 = solve_linearized_first(spec, s.hk, s.cost, s.g);
    VariationResult d2 = solve_linearized_second(spec, s.hk, s.cost, {d1}, s.g);

    auto fit_err = [&](double e, int order, const VariationResult& direct) {
        std::vector<SampledRecord> recs;
        for (double f : {1.0, 0.5, 0.25})
            recs.push_back({e * f, 0.0, nonlinear_m0_sample(s, spec, e * f)});
        MeasurementVariation v = extract_variation(recs, spec, order);
        return rec_distance(v.rec, measure(direct.u_var));
    };

    const double a1 = fit_err(4e-2, 1, d1), a2 = fit_err(2e-2, 1, d1);
    CHECK(a1 < 1e-3);
    CHECK(a1 / a2 > 3.0); // quadratic fit leaves an O(eps^2) bias at first order
    const double b1 = fit_err(4e-2, 2, d2), b2 = fit_err(2e-2, 2, d2);
    CHECK(b1 < 5e-2);
    CHECK(b1 / b2 > 1.6); // and an O(eps) bias at second order
}

TEST_CASE("third-order variation against a cubic divided difference") {
    Setup s = make_setup();
    VariationSpec spec{VariationChannel::m0_variation,
                      {sample(s.g, [](double) { return 1.0; }),
                       sample(s.g, [](double) { return 0.0; })}};
    VariationResult d1 = solve_linearized_first(spec, s.hk, s.cost, s.g);
    VariationResult d2 = solve_linearized_second(spec, s.hk, s.cost, {d1}, s.g);
    VariationResult d3 = solve_linearized_third(spec, s.hk, s.cost, d1, d2, s.g);
    CHECK(d3.order == "3");

    auto cubic_err = [&](double e) {
        std::vector<SampledRecord> recs;
        for (double f : {1.0, 0.75, 0.5, 0.25})
            recs.push_back({e * f, 0.0, nonlinear_m0_sample(s, spec, e * f)});
        MeasurementVariation v = extract_variation(recs, spec, 3);
        return rec_distance(v.rec, measure(d3.u_var));
    };
    const double e1 = cubic_err(8e-2), e2 = cubic_err(4e-2);
    CHECK(e1 < 0.5);
    CHECK(e1 / e2 > 1.6);
}

TEST_CASE("extraction is exact on synthetic polynomial records") {
    Grid g = make_grid(21, 10, 1.0, 1.0);
    MeasurementRecord v1 = measure(sample_xt(g, [](double x, double t) { return x + t; }));
    MeasurementRecord v2 = measure(sample_xt(g, [](double x, double t) { return x * x - t; }));

    SUBCASE("psi channel") {
        VariationSpec spec{VariationChannel::psi_linearization,
                          {sample(g, [](double) { return 1.0; }),
                           sample(g, [](double) { return 1.0; })}};
        auto value = [&](double e1, double e2) {
            MeasurementRecord r = record_add(record_scale(e1, v1), v2, e1 * e2);
            return SampledRecord{e1, e2, r};
        };
        std::vector<SampledRecord> recs{value(1e-2, 0.0), value(-1e-2, 0.0)};
        MeasurementVariation first = extract_variation(recs, spec, 1);
        CHECK(rec_distance(first.rec, v1) < 1e-12);

        std::vector<SampledRecord> cross{value(1e-2, 1e-2), value(1e-2, -1e-2),
                                         value(-1e-2, 1e-2), value(-1e-2, -1e-2)};
        MeasurementVariation second = extract_variation(cross, spec, 2);
        CHECK(rec_distance(second.rec, v2) < 1e-10);
    }

    SUBCASE("m0 channel") {
        VariationSpec spec{VariationChannel::m0_variation,
                          {sample(g, [](double) { return 1.0; }),
                           sample(g, [](double) { return 0.0; })}};
        auto value = [&](double e) {
            MeasurementRecord r = record_add(record_scale(e, v1), v2, 0.5 * e * e);
            return SampledRecord{e, 0.0, r};
        };
        std::vector<SampledRecord> recs{value(4e-2), value(2e-2), value(1e-2)};
        MeasurementVariation first = extract_variation(recs, spec, 1);
        CHECK(rec_distance(first.rec, v1) < 1e-10);
        MeasurementVariation second = extract_variation(recs, spec, 2);
        CHECK(rec_distance(second.rec, v2) < 1e-8);
    }
}

TEST_CASE("extraction input validation") {
    Grid g = make_grid(21, 10, 1.0, 1.0);
    MeasurementRecord base = measure(sample_xt(g, [](double x, double t) { return x * t; }));
    VariationSpec psi{VariationChannel::psi_linearization,
                     {sample(g, [](double) { return 1.0; }), sample(g, [](double) { return 1.0; })}};
    VariationSpec m0{VariationChannel::m0_variation,
                    {sample(g, [](double) { return 1.0; }), sample(g, [](double) { return 0.0; })}};

    std::vector<SampledRecord> half{{1e-2, 0.0, base}};
    CHECK_THROWS_AS(extract_variation(half, psi, 1), std::invalid_argument);

    std::vector<SampledRecord> negative{{1e-2, 0.0, base}, {-1e-2, 0.0, base}, {2e-2, 0.0, base}};
    CHECK_THROWS_AS(extract_variation(negative, m0, 1), AdmissibilityError);

    std::vector<SampledRecord> clustered{
        {1e-2, 0.0, base}, {1e-2 * (1.0 + 1e-13), 0.0, base}, {1e-2 * (1.0 + 2e-13), 0.0, base}};
    CHECK_THROWS_AS(extract_variation(clustered, m0, 2), DegenerateProbeError);
}
