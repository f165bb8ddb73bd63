#include "mfg1d/linearization.hpp"

#include "mfg1d/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mfg1d {

namespace {

const SpatialField* local_coeff(const CostModel& cost, int k) {
    const auto* local = std::get_if<LocalAnalyticCost>(&cost);
    if (!local || local->k_max() < k) return nullptr;
    return &local->coeffs[static_cast<std::size_t>(k - 1)];
}

/// out += c * kappa * (du1 . du2), pointwise on the grid.
void add_kinetic_cross(SpaceTimeField& out, double c, const SpatialField& kappa,
                       const SpaceTimeField& u1, const SpaceTimeField& u2) {
    const Grid& g = out.grid;
    SpaceTimeField d1 = gradient_xt(u1);
    SpaceTimeField d2 = gradient_xt(u2);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i)
            out.at(j, i) += c * kappa[i] * d1.at(j, i) * d2.at(j, i);
}

/// out += c * coeff * prod(factors), pointwise.
void add_local_product(SpaceTimeField& out, double c, const SpatialField& coeff,
                       const std::vector<const SpaceTimeField*>& factors) {
    const Grid& g = out.grid;
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) {
            double p = c * coeff[i];
            for (const SpaceTimeField* f : factors) p *= f->at(j, i);
            out.at(j, i) += p;
        }
}

HalfNodeFlux flux_add(HalfNodeFlux a, const HalfNodeFlux& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
    return a;
}

void check_spec(const VariationSpec& spec) {
    if (spec.channel == VariationChannel::m0_variation) {
        if (spec.directions.size() != 2)
            throw std::invalid_argument("m0 variation requires directions {g_1, g_2}");
        for (double x : spec.directions[0].v)
            if (x < 0.0)
                throw AdmissibilityError("m0 variation: g_1 must be nonnegative nodewise");
    } else if (spec.directions.empty()) {
        throw std::invalid_argument("psi linearization requires at least one direction");
    }
}

} // namespace

VariationResult solve_linearized_first(const VariationSpec& spec, const KineticHamiltonian& hk,
                                       const CostModel& cost, const Grid& grid, int dir_index,
                                       const SolverOptions& opts) {
    (void)hk;
    check_spec(spec);
    VariationResult out;
    out.order = "1";
    const SpaceTimeField zero(grid);
    if (spec.channel == VariationChannel::psi_linearization) {
        if (dir_index < 0 || dir_index >= static_cast<int>(spec.directions.size()))
            throw std::invalid_argument("solve_linearized_first: direction index out of range");
        out.m_var = SpaceTimeField(grid);
        out.u_var = solve_backward(spec.directions[static_cast<std::size_t>(dir_index)], zero,
                                   grid, opts);
    } else {
        out.m_var = solve_forward(spec.directions[0], nullptr, zero, grid, opts);
        out.u_var = solve_backward(SpatialField(grid), cost_derivative_apply(cost, out.m_var),
                                   grid, opts);
    }
    return out;
}

VariationResult solve_linearized_second(const VariationSpec& spec, const KineticHamiltonian& hk,
                                        const CostModel& cost,
                                        const std::vector<VariationResult>& first_order,
                                        const Grid& grid, const SolverOptions& opts) {
    check_spec(spec);
    const bool psi = spec.channel == VariationChannel::psi_linearization;
    if (first_order.size() != (psi ? 2u : 1u))
        throw std::invalid_argument("solve_linearized_second: wrong number of first-order inputs");
    const VariationResult& v1 = first_order[0];
    const VariationResult& v2 = psi ? first_order[1] : first_order[0];
    const SpaceTimeField zero(grid);

    VariationResult out;
    out.order = "2";

    // Forward part: initial data 2 g_2 (zero in the psi channel) and the
    // conservative cross-drift source.
    SpatialField initial = psi ? SpatialField(grid) : 2.0 * spec.directions[1];
    HalfNodeFlux flux = flux_add(drift_flux(1.0, v1.m_var, hk.kappa, v2.u_var),
                                 drift_flux(1.0, v2.m_var, hk.kappa, v1.u_var));
    out.m_var = solve_forward(initial, nullptr, zero, grid, opts, &flux);

    // Backward part.
    SpaceTimeField source = cost_derivative_apply(cost, out.m_var);
    if (const SpatialField* f2 = local_coeff(cost, 2))
        add_local_product(source, 1.0, *f2, {&v1.m_var, &v2.m_var});
    add_kinetic_cross(source, -1.0, hk.kappa, v1.u_var, v2.u_var);
    out.u_var = solve_backward(SpatialField(grid), source, grid, opts);
    return out;
}

VariationResult solve_linearized_third(const VariationSpec& spec, const KineticHamiltonian& hk,
                                       const CostModel& cost, const VariationResult& first,
                                       const VariationResult& second, const Grid& grid,
                                       const SolverOptions& opts) {
    check_spec(spec);
    if (spec.channel != VariationChannel::m0_variation || max_abs(spec.directions[1]) != 0.0)
        throw std::invalid_argument(
            "solve_linearized_third: only the m0 channel with g_2 = 0 is supported");
    const SpaceTimeField zero(grid);

    VariationResult out;
    out.order = "3";

    HalfNodeFlux flux = flux_add(drift_flux(3.0, first.m_var, hk.kappa, second.u_var),
                                 drift_flux(3.0, second.m_var, hk.kappa, first.u_var));
    out.m_var = solve_forward(SpatialField(grid), nullptr, zero, grid, opts, &flux);

    SpaceTimeField source = cost_derivative_apply(cost, out.m_var);
    if (const SpatialField* f2 = local_coeff(cost, 2))
        add_local_product(source, 3.0, *f2, {&first.m_var, &second.m_var});
    if (const SpatialField* f3 = local_coeff(cost, 3))
        add_local_product(source, 1.0, *f3, {&first.m_var, &first.m_var, &first.m_var});
    add_kinetic_cross(source, -3.0, hk.kappa, first.u_var, second.u_var);
    out.u_var = solve_backward(SpatialField(grid), source, grid, opts);
    return out;
}

namespace {

bool eps_match(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

const MeasurementRecord* find_record(const std::vector<SampledRecord>& records, double e1,
                                     double e2) {
    for (const SampledRecord& r : records)
        if (eps_match(r.eps1, e1) && eps_match(r.eps2, e2)) return &r.rec;
    return nullptr;
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::abs(a[static_cast<std::size_t>(p) * n + q]);
        if (off < 1e-300) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * n + q];
                if (apq == 0.0) continue;
                const double app = a[static_cast<std::size_t>(p) * n + p];
                const double aqq = a[static_cast<std::size_t>(q) * n + q];
                const double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(phi), s = std::sin(phi);
                for (int r = 0; r < n; ++r) {
                    const double arp = a[static_cast<std::size_t>(r) * n + p];
                    const double arq = a[static_cast<std::size_t>(r) * n + q];
                    a[static_cast<std::size_t>(r) * n + p] = c * arp - s * arq;
                    a[static_cast<std::size_t>(r) * n + q] = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const double apr = a[static_cast<std::size_t>(p) * n + r];
                    const double aqr = a[static_cast<std::size_t>(q) * n + r];
                    a[static_cast<std::size_t>(p) * n + r] = c * apr - s * aqr;
                    a[static_cast<std::size_t>(q) * n + r] = s * apr + c * aqr;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i) * n + i];
    return ev;
}

/// Solves the symmetric positive definite system A x = b by Cholesky.
std::vector<double> spd_solve(const std::vector<double>& a_in, std::vector<double> b, int n) {
    std::vector<double> L(a_in);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < j; ++k)
            L[static_cast<std::size_t>(j) * n + j] -=
                L[static_cast<std::size_t>(j) * n + k] * L[static_cast<std::size_t>(j) * n + k];
        L[static_cast<std::size_t>(j) * n + j] = std::sqrt(L[static_cast<std::size_t>(j) * n + j]);
        for (int i = j + 1; i < n; ++i) {
            for (int k = 0; k < j; ++k)
                L[static_cast<std::size_t>(i) * n + j] -=
                    L[static_cast<std::size_t>(i) * n + k] * L[static_cast<std::size_t>(j) * n + k];
            L[static_cast<std::size_t>(i) * n + j] /= L[static_cast<std::size_t>(j) * n + j];
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k)
            b[static_cast<std::size_t>(i)] -=
                L[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] /= L[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k)
            b[static_cast<std::size_t>(i)] -=
                L[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] /= L[static_cast<std::size_t>(i) * n + i];
    }
    return b;
}

} // namespace

MeasurementVariation extract_variation(const std::vector<SampledRecord>& records,
                                       const VariationSpec& spec, int order) {
    check_spec(spec);
    if (records.empty()) throw std::invalid_argument("extract_variation: no records");
    const Grid g = records.front().rec.grid;
    MeasurementVariation out;
    out.order = order;

    if (spec.channel == VariationChannel::psi_linearization) {
        if (order == 1) {
            for (const SampledRecord& r : records) {
                if (r.eps2 != 0.0 || r.eps1 <= 0.0) continue;
                const MeasurementRecord* neg = find_record(records, -r.eps1, 0.0);
                if (!neg) continue;
                out.rec = record_scale(1.0 / (2.0 * r.eps1), record_add(r.rec, *neg, -1.0));
                out.rec.metadata["variation_order"] = "1";
                return out;
            }
            throw std::invalid_argument("extract_variation: psi stencil incomplete (need +-eps)");
        }
        if (order == 2) {
            for (const SampledRecord& r : records) {
                const double e1 = r.eps1, e2 = r.eps2;
                if (e1 <= 0.0 || e2 <= 0.0) continue;
                const MeasurementRecord* pm = find_record(records, e1, -e2);
                const MeasurementRecord* mp = find_record(records, -e1, e2);
                const MeasurementRecord* mm = find_record(records, -e1, -e2);
                if (!pm || !mp || !mm) continue;
                MeasurementRecord acc = record_add(r.rec, *pm, -1.0);
                acc = record_add(std::move(acc), *mp, -1.0);
                acc = record_add(std::move(acc), *mm, 1.0);
                out.rec = record_scale(1.0 / (4.0 * e1 * e2), std::move(acc));
                out.rec.metadata["variation_order"] = "2";
                return out;
            }
            throw std::invalid_argument("extract_variation: psi cross stencil incomplete");
        }
        throw std::invalid_argument("extract_variation: psi channel supports orders 1 and 2");
    }

    // m0 channel: fit R(eps) = eps V1 + eps^2 V2/2 (+ eps^3 V3/6) over
    // one-sided samples.
    if (order < 1 || order > 3)
        throw std::invalid_argument("extract_variation: m0 channel supports orders 1..3");
    std::vector<double> eps;
    std::vector<const MeasurementRecord*> recs;
    for (const SampledRecord& r : records) {
        if (r.eps2 != 0.0)
            throw std::invalid_argument("extract_variation: m0 channel records must have eps2 = 0");
        if (r.eps1 < 0.0)
            throw AdmissibilityError("extract_variation: negative eps in the m0 channel");
        if (r.eps1 == 0.0) continue;
        eps.push_back(r.eps1);
        recs.push_back(&r.rec);
    }
    const int degree = order <= 2 ? 2 : 3;
    const int n_samples = static_cast<int>(eps.size());
    if (n_samples < degree)
        throw std::invalid_argument("extract_variation: not enough m0-channel samples for the fit");

    const double scale = *std::max_element(eps.begin(), eps.end());
    // Basis t^j, t = eps/scale, j = 1..degree.
    std::vector<double> design(static_cast<std::size_t>(n_samples) * degree);
    for (int i = 0; i < n_samples; ++i) {
        double t = eps[static_cast<std::size_t>(i)] / scale;
        double p = 1.0;
        for (int j = 0; j < degree; ++j) {
            p *= t;
            design[static_cast<std::size_t>(i) * degree + j] = p;
        }
    }
    std::vector<double> normal(static_cast<std::size_t>(degree) * degree, 0.0);
    for (int j = 0; j < degree; ++j)
        for (int k = 0; k < degree; ++k)
            for (int i = 0; i < n_samples; ++i)
                normal[static_cast<std::size_t>(j) * degree + k] +=
                    design[static_cast<std::size_t>(i) * degree + j] *
                    design[static_cast<std::size_t>(i) * degree + k];
    std::vector<double> ev = symmetric_eigenvalues(normal, degree);
    const double ev_max = *std::max_element(ev.begin(), ev.end());
    const double ev_min = *std::min_element(ev.begin(), ev.end());
    if (!(ev_min > 0.0) || ev_max / ev_min > 1e8)
        throw DegenerateProbeError("extract_variation: fit condition number above 1e8");

    // The fit is linear, so run it per ordinate of the measurement record.
    out.rec = record_like(g);
    auto fit_ordinate = [&](auto getter) {
        std::vector<double> rhs(static_cast<std::size_t>(degree), 0.0);
        for (int i = 0; i < n_samples; ++i) {
            const double val = getter(*recs[static_cast<std::size_t>(i)]);
            for (int j = 0; j < degree; ++j)
                rhs[static_cast<std::size_t>(j)] += design[static_cast<std::size_t>(i) * degree + j] * val;
        }
        std::vector<double> coef = spd_solve(normal, std::move(rhs), degree);
        // coef[j-1] = c_j scale^j with R = sum c_j eps^j; V_k = k! c_k.
        double fact = 1.0;
        for (int j = 1; j < order; ++j) fact *= j + 1;
        return fact * coef[static_cast<std::size_t>(order - 1)] / std::pow(scale, order);
    };
    for (int j = 0; j <= g.n_t; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j);
        out.rec.trace_left[idx] =
            fit_ordinate([&](const MeasurementRecord& r) { return r.trace_left[idx]; });
        out.rec.trace_right[idx] =
            fit_ordinate([&](const MeasurementRecord& r) { return r.trace_right[idx]; });
    }
    for (int i = 0; i < g.n_x; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        out.rec.initial_snapshot[idx] =
            fit_ordinate([&](const MeasurementRecord& r) { return r.initial_snapshot[idx]; });
    }
    out.rec.metadata["variation_order"] = std::to_string(order);
    return out;
}

} // namespace mfg1d
