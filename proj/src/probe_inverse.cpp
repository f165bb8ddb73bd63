#include "mfg1d/probe_inverse.hpp"

#include "mfg1d/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg1d {

double time_factor(double lambda_src, double mu, double beta, double T) {
    const double d = lambda_src - beta * mu;
    if (std::abs(d) < 1e-12) return T;
    return (std::exp(d * T) - 1.0) / d;
}

double step_decay(const Grid& g, int k, TimeScheme scheme) {
    const double z = g.beta * g.discrete_eigenvalue(k) * g.dt();
    if (scheme == TimeScheme::crank_nicolson) return (1.0 - 0.5 * z) / (1.0 + 0.5 * z);
    return 1.0 / (1.0 + z);
}

double discrete_time_factor(const Grid& g, double gamma, double mu, TimeScheme scheme) {
    const double dt = g.dt();
    const double z = g.beta * mu * dt;
    double a = 0.0;
    for (int j = g.n_t - 1; j >= 0; --j) {
        const double s = std::pow(gamma, j);
        const double s_next = std::pow(gamma, j + 1);
        if (scheme == TimeScheme::crank_nicolson)
            a = ((1.0 - 0.5 * z) * a + 0.5 * dt * (s + s_next)) / (1.0 + 0.5 * z);
        else
            a = (a + dt * s) / (1.0 + z);
    }
    return a;
}

double data_functional(const MeasurementRecord& var, int k) {
    const Grid& g = var.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_x; ++i)
        acc += g.quad_weight(i) * var.initial_snapshot[static_cast<std::size_t>(i)] *
               std::cos(k * M_PI * g.x(i));
    return acc;
}

std::complex<double> data_functional_exponential(const MeasurementRecord& var, double xi) {
    const Grid& g = var.grid;
    const std::complex<double> I(0.0, 1.0);
    std::complex<double> acc = 0.0;
    for (int i = 0; i < g.n_x; ++i)
        acc += g.quad_weight(i) * var.initial_snapshot[static_cast<std::size_t>(i)] *
               std::exp(-I * xi * g.x(i));
    // Lateral term beta * int_0^T [v omega_x]_{x=0}^{x=1} dt with
    // omega_x = -i xi e^{-beta xi^2 t} e^{-i xi x}.
    const double dt = g.dt();
    std::complex<double> lateral = 0.0;
    for (int j = 0; j <= g.n_t; ++j) {
        const double w = (j == 0 || j == g.n_t) ? 0.5 * dt : dt;
        const double decay = std::exp(-g.beta * xi * xi * g.t(j));
        const std::complex<double> wx1 = -I * xi * decay * std::exp(-I * xi);
        const std::complex<double> wx0 = -I * xi * decay;
        lateral += w * (var.trace_right[static_cast<std::size_t>(j)] * wx1 -
                        var.trace_left[static_cast<std::size_t>(j)] * wx0);
    }
    return acc + g.beta * lateral;
}

SourceRecovery recover_source(const MeasurementRecord& var, double lambda_src,
                              const RecoverOptions& opts) {
    const Grid& g = var.grid;
    const int M = opts.max_mode < 0 ? g.n_x / 4 : opts.max_mode;
    SourceRecovery out;
    std::vector<std::pair<int, double>> coeffs;
    for (int k = 0; k <= M; ++k) {
        double tf;
        double functional;
        if (opts.probe == ProbeKind::complex_exponential) {
            const double xi = k * M_PI;
            tf = time_factor(lambda_src, xi * xi, g.beta, g.T);
            functional = data_functional_exponential(var, xi).real();
        } else if (opts.discrete_calibration) {
            const double gamma =
                opts.gamma_override != 0.0 ? opts.gamma_override : std::exp(lambda_src * g.dt());
            tf = discrete_time_factor(g, gamma, g.discrete_eigenvalue(k), opts.scheme);
            functional = data_functional(var, k);
        } else {
            tf = time_factor(lambda_src, k * M_PI * k * M_PI, g.beta, g.T);
            functional = data_functional(var, k);
        }
        if (std::abs(tf) < 1e-6 * g.T) {
            out.modes_skipped.push_back(k);
            continue;
        }
        coeffs.emplace_back(k, -functional / tf);
        out.modes_used.push_back(k);
        out.time_factors.push_back(tf);
    }
    out.recovered = cosine_synthesis(g, coeffs);
    return out;
}

KappaRecovery recover_kappa(const Grid& g, const std::vector<KappaProbeData>& probes,
                            const RecoverOptions& opts) {
    if (probes.empty()) throw std::invalid_argument("recover_kappa: no probes supplied");
    KappaRecovery out;
    std::vector<double> num(static_cast<std::size_t>(g.n_x), 0.0);
    std::vector<double> den(static_cast<std::size_t>(g.n_x), 0.0);
    for (const KappaProbeData& p : probes) {
        RecoverOptions ro = opts;
        ro.gamma_override = p.gamma != 0.0
                                ? p.gamma
                                : 1.0 / (step_decay(g, p.mode, opts.scheme) *
                                         step_decay(g, p.mode, opts.scheme));
        const double lambda = 2.0 * g.beta * g.discrete_eigenvalue(p.mode);
        SourceRecovery rec = recover_source(p.second_variation, lambda, ro);

        // S_k = kappa |grad g_k|^2 with the same discrete gradient the
        // Hamiltonian uses, so the quotient cancels its truncation error.
        SpatialField dg = gradient(sample(g, [&](double x) { return std::cos(p.mode * M_PI * x); }));
        SpatialField w(g);
        double w_max = 0.0;
        for (int i = 0; i < g.n_x; ++i) {
            w[i] = dg[i] * dg[i];
            w_max = std::max(w_max, w[i]);
        }
        const double thr = 1e-3 * w_max;
        for (int i = 0; i < g.n_x; ++i) {
            if (w[i] < thr) continue;
            num[static_cast<std::size_t>(i)] += rec.recovered[i];
            den[static_cast<std::size_t>(i)] += w[i];
        }
        out.per_mode.push_back(std::move(rec));
    }
    out.kappa = SpatialField(g);
    std::vector<int> uncovered;
    for (int i = 0; i < g.n_x; ++i) {
        if (den[static_cast<std::size_t>(i)] > 0.0)
            out.kappa[i] = num[static_cast<std::size_t>(i)] / den[static_cast<std::size_t>(i)];
        else
            uncovered.push_back(i);
    }
    for (int i : uncovered) {
        int best = -1;
        for (int d = 1; d < g.n_x; ++d) {
            if (i - d >= 0 && den[static_cast<std::size_t>(i - d)] > 0.0) { best = i - d; break; }
            if (i + d < g.n_x && den[static_cast<std::size_t>(i + d)] > 0.0) { best = i + d; break; }
        }
        if (best < 0) throw DegenerateProbeError("recover_kappa: no node has usable probe weight");
        out.kappa[i] = out.kappa[best];
        out.extrapolated_nodes.push_back(i);
    }
    return out;
}

FCoeffRecovery recover_F_coeffs(const Grid& g, const std::vector<MeasurementVariation>& bundles,
                                const SpatialField& kappa, int K_max, const RecoverOptions& opts,
                                const SolverOptions& solver) {
    if (K_max < 1 || K_max > 3)
        throw std::invalid_argument("recover_F_coeffs: K_max must be in 1..3");
    std::vector<const MeasurementRecord*> by_order(static_cast<std::size_t>(K_max), nullptr);
    for (const MeasurementVariation& b : bundles)
        if (b.order >= 1 && b.order <= K_max)
            by_order[static_cast<std::size_t>(b.order - 1)] = &b.rec;
    for (int k = 1; k <= K_max; ++k)
        if (!by_order[static_cast<std::size_t>(k - 1)])
            throw std::invalid_argument("recover_F_coeffs: missing bundle for order " +
                                        std::to_string(k));

    RecoverOptions ro = opts;
    ro.gamma_override = 1.0; // every source in this pipeline is constant in time
    const KineticHamiltonian hk{kappa};
    VariationSpec spec;
    spec.channel = VariationChannel::m0_variation;
    spec.directions = {sample(g, [](double) { return 1.0; }), SpatialField(g)};

    FCoeffRecovery out;

    // Order 1: m^(1) = 1, so the measured variation solves the backward
    // equation with pure source F^(1).
    SourceRecovery s1 = recover_source(*by_order[0], 0.0, ro);
    out.coeffs.push_back(-1.0 * s1.recovered);
    out.per_order.push_back(std::move(s1));
    if (K_max == 1) return out;

    // Order 2: simulate the known part with F^(2) = 0 and recover F^(2)
    // from the residual.
    CostModel cost1 = LocalAnalyticCost{{out.coeffs[0]}};
    VariationResult v1 = solve_linearized_first(spec, hk, cost1, g, 0, solver);
    VariationResult known2 = solve_linearized_second(spec, hk, cost1, {v1}, g, solver);
    MeasurementRecord resid2 = record_add(*by_order[1], measure(known2.u_var), -1.0);
    SourceRecovery s2 = recover_source(resid2, 0.0, ro);
    out.coeffs.push_back(-1.0 * s2.recovered);
    out.per_order.push_back(std::move(s2));
    if (K_max == 2) return out;

    // Order 3: the known part now needs the true second-order pair, so
    // recompute it with F^(2) included.
    CostModel cost2 = LocalAnalyticCost{{out.coeffs[0], out.coeffs[1]}};
    VariationResult v2 = solve_linearized_second(spec, hk, cost2, {v1}, g, solver);
    VariationResult known3 = solve_linearized_third(spec, hk, cost2, v1, v2, g, solver);
    MeasurementRecord resid3 = record_add(*by_order[2], measure(known3.u_var), -1.0);
    SourceRecovery s3 = recover_source(resid3, 0.0, ro);
    out.coeffs.push_back(-1.0 * s3.recovered);
    out.per_order.push_back(std::move(s3));
    return out;
}

KernelRecovery recover_kernel(const Grid& g,
                              const std::vector<std::pair<int, MeasurementRecord>>& bundles,
                              int M, const RecoverOptions& opts) {
    if (M > g.n_x / 4)
        throw std::invalid_argument("recover_kernel: M exceeds the n_x/4 aliasing guard");
    // Deterministic regardless of supply order.
    std::vector<const MeasurementRecord*> by_mode(static_cast<std::size_t>(M) + 1, nullptr);
    for (const auto& [k, rec] : bundles)
        if (k >= 0 && k <= M) by_mode[static_cast<std::size_t>(k)] = &rec;
    for (int k = 1; k <= M; ++k)
        if (!by_mode[static_cast<std::size_t>(k)])
            throw std::invalid_argument("recover_kernel: missing bundle for mode " +
                                        std::to_string(k));

    KernelRecovery out;
    out.kernel.assign(static_cast<std::size_t>(g.n_x) * g.n_x, 0.0);
    for (int k = 0; k <= M; ++k) {
        const MeasurementRecord* rec = by_mode[static_cast<std::size_t>(k)];
        if (!rec) continue;
        RecoverOptions ro = opts;
        ro.gamma_override = step_decay(g, k, opts.scheme);
        const double lambda = -g.beta * g.discrete_eigenvalue(k);
        SourceRecovery s = recover_source(*rec, lambda, ro);
        SpatialField psi_k = -0.5 * s.recovered;
        if (k == 0) {
            out.mode0_diagnostic = max_abs(psi_k);
        } else {
            for (int i = 0; i < g.n_x; ++i)
                for (int j = 0; j < g.n_x; ++j)
                    out.kernel[static_cast<std::size_t>(i) * g.n_x + j] +=
                        2.0 * psi_k[i] * std::cos(k * M_PI * g.x(j));
        }
        out.per_mode.push_back(std::move(s));
    }
    return out;
}

} // namespace mfg1d
