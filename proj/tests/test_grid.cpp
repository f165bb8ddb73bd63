#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfg1d/grid.hpp"

#include <cmath>

using namespace mfg1d;

TEST_CASE("make_grid arithmetic and validation") {
    Grid g = make_grid(101, 200, 1.0, 1.0);
    CHECK(g.h() == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(g.dt() == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(g.h() * (g.n_x - 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.dt() * g.n_t == doctest::Approx(g.T).epsilon(1e-14));

    Grid tiny = make_grid(3, 1, 2.0, 0.5);
    CHECK(tiny.h() == doctest::Approx(0.5));
    CHECK(tiny.dt() == doctest::Approx(2.0));

    CHECK_THROWS_AS(make_grid(2, 1, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(11, 0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(11, 10, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(11, 10, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("integrate_space against closed forms") {
    Grid g = make_grid(201, 10, 1.0, 1.0);
    CHECK(integrate_space(sample(g, [](double) { return 1.0; })) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(integrate_space(sample(g, [](double x) { return std::cos(M_PI * x); })) ==
          doctest::Approx(0.0).epsilon(1e-12));
    // int_0^1 x^2 dx = 1/3; composite trapezoid error is h^2/12 * int f'' = h^2/6
    const double h = g.h();
    CHECK(integrate_space(sample(g, [](double x) { return x * x; })) ==
          doctest::Approx(1.0 / 3.0 + h * h / 6.0).epsilon(1e-12));
}

TEST_CASE("neumann eigenpairs") {
    Grid g = make_grid(101, 10, 1.0, 1.0);
    auto [mu0, g0] = neumann_eigenpair(g, 0);
    CHECK(mu0 == 0.0);
    for (int i = 0; i < g.n_x; ++i) CHECK(g0[i] == 1.0);

    auto [mu1, g1] = neumann_eigenpair(g, 1);
    CHECK(mu1 == doctest::Approx(M_PI * M_PI).epsilon(1e-14));
    CHECK(g1[0] == doctest::Approx(1.0));
    CHECK(g1[g.n_x - 1] == doctest::Approx(-1.0));

    auto [mu2, g2] = neumann_eigenpair(g, 2);
    CHECK(mu2 == doctest::Approx(4.0 * M_PI * M_PI).epsilon(1e-14));
    CHECK(g2[50] == doctest::Approx(-1.0)); // x = 0.5
}

TEST_CASE("discrete eigenvalue converges to the continuum one") {
    Grid coarse = make_grid(51, 10, 1.0, 1.0);
    Grid fine = make_grid(401, 10, 1.0, 1.0);
    const double mu = M_PI * M_PI;
    const double err_c = std::abs(coarse.discrete_eigenvalue(1) - mu);
    const double err_f = std::abs(fine.discrete_eigenvalue(1) - mu);
    CHECK(err_f < err_c / 30.0); // O(h^2): refinement factor 8 -> 64x
    CHECK(coarse.discrete_eigenvalue(0) == 0.0);
}

TEST_CASE("cosine transform round trip on band-limited fields") {
    Grid g = make_grid(201, 10, 1.0, 1.0);
    SpatialField f = cosine_synthesis(g, {{0, 2.0}, {2, 0.5}, {7, -0.25}});
    CHECK(cosine_coeff(f, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cosine_coeff(f, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cosine_coeff(f, 7) == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(cosine_coeff(f, 5) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(cosine_synthesis(g, {{1, 1.0}, {1, 2.0}}), std::invalid_argument);
}

TEST_CASE("field arithmetic and norms") {
    Grid g = make_grid(11, 4, 1.0, 1.0);
    SpatialField a = sample(g, [](double x) { return x; });
    SpatialField b = sample(g, [](double x) { return 1.0 - x; });
    SpatialField s = a + b;
    for (int i = 0; i < g.n_x; ++i) CHECK(s[i] == doctest::Approx(1.0));
    CHECK(max_abs(2.0 * a - a - a) == 0.0);
    CHECK(rel_l2_error(a, a) == 0.0);
    CHECK(all_finite(a));
}

TEST_CASE("CSV round trip is bit exact") {
    Grid g = make_grid(7, 3, 1.0, 0.7);
    SpaceTimeField f = sample_xt(g, [](double x, double t) {
        return std::sin(12.3 * x + 4.56 * t) / 3.0 + 1e-17 * x;
    });
    SpaceTimeField back = space_time_from_csv(g, to_csv(f));
    for (std::size_t i = 0; i < f.v.size(); ++i) CHECK(back.v[i] == f.v[i]);

    SpatialField sf = sample(g, [](double x) { return std::exp(x) / 7.0; });
    SpatialField sback = spatial_from_csv(g, to_csv(sf));
    for (int i = 0; i < g.n_x; ++i) CHECK(sback[i] == sf[i]);
}
