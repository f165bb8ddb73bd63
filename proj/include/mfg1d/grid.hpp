#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mfg1d {

/// Uniform space-time discretization of [0,1] x [0,T] with a
/// Neumann-compatible node layout: nodes x_i = i*h include both endpoints,
/// time levels t_j = j*dt include 0 and T.
struct Grid {
    int n_x = 0;       // node count in space, >= 3
    int n_t = 0;       // step count in time, >= 1
    double T = 0.0;    // horizon, > 0
    double beta = 0.0; // diffusion coefficient, > 0 for the solvers

    double h() const { return 1.0 / (n_x - 1); }
    double dt() const { return T / n_t; }
    double x(int i) const { return i * h(); }
    double t(int j) const { return j * dt(); }

    /// Trapezoid weight of node i (h/2 at the endpoints, h inside).
    double quad_weight(int i) const {
        const double hh = h();
        return (i == 0 || i == n_x - 1) ? 0.5 * hh : hh;
    }

    /// Eigenvalue of the discrete three-point Neumann Laplacian for the
    /// eigenvector cos(k*pi*x_i): (4/h^2) sin^2(k*pi*h/2). Tends to (k*pi)^2
    /// as h -> 0 and is the exact decay rate of mode k in the solvers.
    double discrete_eigenvalue(int k) const {
        const double s = std::sin(0.5 * k * M_PI * h());
        return 4.0 * s * s / (h() * h());
    }

    bool operator==(const Grid&) const = default;
};

/// Validates and builds a grid. Throws std::invalid_argument on
/// n_x < 3, n_t < 1, T <= 0 or beta <= 0.
Grid make_grid(int n_x, int n_t, double T, double beta);

/// Real-valued function samples on the spatial nodes.
struct SpatialField {
    Grid grid;
    std::vector<double> v; // length n_x

    SpatialField() = default;
    explicit SpatialField(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<std::size_t>(g.n_x), fill) {}

    double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
    int size() const { return grid.n_x; }
};

/// Real-valued samples on the full space-time grid, time level major:
/// at(j, i) is the value at (x_i, t_j), j = 0..n_t, i = 0..n_x-1.
struct SpaceTimeField {
    Grid grid;
    std::vector<double> v; // (n_t + 1) * n_x

    SpaceTimeField() = default;
    explicit SpaceTimeField(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<std::size_t>(g.n_t + 1) * g.n_x, fill) {}

    double& at(int j, int i) { return v[static_cast<std::size_t>(j) * grid.n_x + i]; }
    double at(int j, int i) const { return v[static_cast<std::size_t>(j) * grid.n_x + i]; }

    /// Copy of time level j as a SpatialField.
    SpatialField level(int j) const;
    void set_level(int j, const SpatialField& f);
};

/// Samples a callable f(x) on the grid nodes.
template <typename F>
SpatialField sample(const Grid& g, F&& f) {
    SpatialField out(g);
    for (int i = 0; i < g.n_x; ++i) out[i] = f(g.x(i));
    return out;
}

/// Samples a callable f(x, t) on the full grid.
template <typename F>
SpaceTimeField sample_xt(const Grid& g, F&& f) {
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) out.at(j, i) = f(g.x(i), g.t(j));
    return out;
}

/// Trapezoid-rule approximation of the integral of f over [0,1].
double integrate_space(const SpatialField& f);

/// Returns true if every entry is finite.
bool all_finite(const SpatialField& f);
bool all_finite(const SpaceTimeField& f);

double max_abs(const SpatialField& f);
double max_abs(const SpaceTimeField& f);

/// Relative L2 error ||a - b||_2 / ||b||_2 under trapezoid weights
/// (absolute L2 norm of a - b when b is zero).
double rel_l2_error(const SpatialField& a, const SpatialField& b);

/// Neumann Laplacian eigenpair on (0,1): mu = (k*pi)^2 and
/// g(x) = cos(k*pi*x) sampled on the grid.
std::pair<double, SpatialField> neumann_eigenpair(const Grid& g, int k);

/// <f, cos(k*pi*x)> by the trapezoid rule.
double cosine_coeff(const SpatialField& f, int k);

/// Builds sum_k c_k cos(k*pi*x) / ||cos(k*pi*x)||^2 from (mode, coefficient)
/// pairs, the left inverse of cosine_coeff on band-limited fields.
/// Throws std::invalid_argument on duplicate mode indices.
SpatialField cosine_synthesis(const Grid& g, const std::vector<std::pair<int, double>>& coeffs);

// Field arithmetic (value semantics, shapes must agree).
SpatialField operator+(SpatialField a, const SpatialField& b);
SpatialField operator-(SpatialField a, const SpatialField& b);
SpatialField operator*(double c, SpatialField a);
SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator*(double c, SpaceTimeField a);

/// CSV serialization: header row of x coordinates, one row per time level.
/// A SpatialField is written as a single data row.
std::string to_csv(const SpaceTimeField& f);
std::string to_csv(const SpatialField& f);
SpaceTimeField space_time_from_csv(const Grid& g, const std::string& csv);
SpatialField spatial_from_csv(const Grid& g, const std::string& csv);

} // namespace mfg1d
