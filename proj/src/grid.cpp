#include "mfg1d/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mfg1d {

Grid make_grid(int n_x, int n_t, double T, double beta) {
    if (n_x < 3) throw std::invalid_argument("make_grid: n_x must be >= 3");
    if (n_t < 1) throw std::invalid_argument("make_grid: n_t must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("make_grid: T must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("make_grid: beta must be > 0");
    return Grid{n_x, n_t, T, beta};
}

SpatialField SpaceTimeField::level(int j) const {
    SpatialField out(grid);
    for (int i = 0; i < grid.n_x; ++i) out[i] = at(j, i);
    return out;
}

void SpaceTimeField::set_level(int j, const SpatialField& f) {
    for (int i = 0; i < grid.n_x; ++i) at(j, i) = f[i];
}

double integrate_space(const SpatialField& f) {
    double s = 0.0;
    for (int i = 0; i < f.grid.n_x; ++i) s += f.grid.quad_weight(i) * f[i];
    return s;
}

bool all_finite(const SpatialField& f) {
    return std::all_of(f.v.begin(), f.v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const SpaceTimeField& f) {
    return std::all_of(f.v.begin(), f.v.end(), [](double x) { return std::isfinite(x); });
}

double max_abs(const SpatialField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

double max_abs(const SpaceTimeField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

double rel_l2_error(const SpatialField& a, const SpatialField& b) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < a.grid.n_x; ++i) {
        const double w = a.grid.quad_weight(i);
        const double d = a[i] - b[i];
        num += w * d * d;
        den += w * b[i] * b[i];
    }
    num = std::sqrt(num);
    den = std::sqrt(den);
    return den > 0.0 ? num / den : num;
}

std::pair<double, SpatialField> neumann_eigenpair(const Grid& g, int k) {
    if (k < 0) throw std::invalid_argument("neumann_eigenpair: mode index must be >= 0");
    const double mu = (k * M_PI) * (k * M_PI);
    SpatialField gf = sample(g, [k](double x) { return std::cos(k * M_PI * x); });
    return {mu, std::move(gf)};
}

double cosine_coeff(const SpatialField& f, int k) {
    if (k < 0) throw std::invalid_argument("cosine_coeff: mode index must be >= 0");
    double s = 0.0;
    for (int i = 0; i < f.grid.n_x; ++i)
        s += f.grid.quad_weight(i) * f[i] * std::cos(k * M_PI * f.grid.x(i));
    return s;
}

SpatialField cosine_synthesis(const Grid& g, const std::vector<std::pair<int, double>>& coeffs) {
    std::set<int> seen;
    for (const auto& [k, c] : coeffs) {
        if (k < 0) throw std::invalid_argument("cosine_synthesis: mode index must be >= 0");
        if (!seen.insert(k).second)
            throw std::invalid_argument("cosine_synthesis: duplicate mode index " + std::to_string(k));
    }
    SpatialField out(g);
    for (const auto& [k, c] : coeffs) {
        const double norm_sq = (k == 0) ? 1.0 : 0.5;
        for (int i = 0; i < g.n_x; ++i) out[i] += c / norm_sq * std::cos(k * M_PI * g.x(i));
    }
    return out;
}

SpatialField operator+(SpatialField a, const SpatialField& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
    return a;
}
SpatialField operator-(SpatialField a, const SpatialField& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
    return a;
}
SpatialField operator*(double c, SpatialField a) {
    for (double& x : a.v) x *= c;
    return a;
}
SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
    return a;
}
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
    return a;
}
SpaceTimeField operator*(double c, SpaceTimeField a) {
    for (double& x : a.v) x *= c;
    return a;
}

namespace {

void append_double(std::string& out, double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, res.ptr);
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> out;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        double val = 0.0;
        auto res = std::from_chars(p, end, val);
        if (res.ec != std::errc{}) throw std::invalid_argument("CSV parse error: " + line);
        out.push_back(val);
        p = res.ptr;
        if (p < end && *p == ',') ++p;
    }
    return out;
}

} // namespace

std::string to_csv(const SpaceTimeField& f) {
    std::string out;
    for (int i = 0; i < f.grid.n_x; ++i) {
        if (i) out += ',';
        append_double(out, f.grid.x(i));
    }
    out += '\n';
    for (int j = 0; j <= f.grid.n_t; ++j) {
        for (int i = 0; i < f.grid.n_x; ++i) {
            if (i) out += ',';
            append_double(out, f.at(j, i));
        }
        out += '\n';
    }
    return out;
}

std::string to_csv(const SpatialField& f) {
    std::string out;
    for (int i = 0; i < f.grid.n_x; ++i) {
        if (i) out += ',';
        append_double(out, f.grid.x(i));
    }
    out += '\n';
    for (int i = 0; i < f.grid.n_x; ++i) {
        if (i) out += ',';
        append_double(out, f[i]);
    }
    out += '\n';
    return out;
}

SpaceTimeField space_time_from_csv(const Grid& g, const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("CSV: missing header row");
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j) {
        if (!std::getline(is, line)) throw std::invalid_argument("CSV: missing time level row");
        auto row = parse_row(line);
        if (static_cast<int>(row.size()) != g.n_x)
            throw std::invalid_argument("CSV: row length does not match grid");
        for (int i = 0; i < g.n_x; ++i) out.at(j, i) = row[static_cast<std::size_t>(i)];
    }
    return out;
}

SpatialField spatial_from_csv(const Grid& g, const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("CSV: missing header row");
    if (!std::getline(is, line)) throw std::invalid_argument("CSV: missing data row");
    auto row = parse_row(line);
    if (static_cast<int>(row.size()) != g.n_x)
        throw std::invalid_argument("CSV: row length does not match grid");
    SpatialField out(g);
    for (int i = 0; i < g.n_x; ++i) out[i] = row[static_cast<std::size_t>(i)];
    return out;
}

} // namespace mfg1d
