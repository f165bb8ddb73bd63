#include "mfg1d/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <functional>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace mfg1d {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void expect_keys(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

std::vector<std::pair<int, double>> parse_modes(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array of [k, a] pairs");
    std::vector<std::pair<int, double>> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2)
            throw ConfigError(path + ": each entry must be a [k, a] pair");
        const int k = e[0].get<int>();
        if (k < 0) throw ConfigError(path + ": negative mode index");
        out.emplace_back(k, e[1].get<double>());
    }
    return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

void run_tasks(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const int workers = std::min(threads, n);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
                next.store(n);
            }
        });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    expect_keys(j, {"grid", "model", "variation", "inverse", "output"}, "config");
    ExperimentConfig cfg;

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        expect_keys(g, {"n_x", "n_t", "T", "beta"}, "grid");
        cfg.grid.n_x = get_or(g, "n_x", cfg.grid.n_x, "grid");
        cfg.grid.n_t = get_or(g, "n_t", cfg.grid.n_t, "grid");
        cfg.grid.T = get_or(g, "T", cfg.grid.T, "grid");
        cfg.grid.beta = get_or(g, "beta", cfg.grid.beta, "grid");
        try {
            cfg.grid = make_grid(cfg.grid.n_x, cfg.grid.n_t, cfg.grid.T, cfg.grid.beta);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        expect_keys(m, {"kappa", "cost"}, "model");
        if (m.contains("kappa")) cfg.kappa_modes = parse_modes(m.at("kappa"), "model.kappa");
        if (m.contains("cost")) {
            const json& c = m.at("cost");
            expect_keys(c, {"family", "coefficients", "kernel"}, "model.cost");
            const std::string family = get_or<std::string>(c, "family", "local", "model.cost");
            if (family == "local")
                cfg.local_cost = true;
            else if (family == "nonlocal")
                cfg.local_cost = false;
            else
                throw ConfigError("model.cost.family: must be 'local' or 'nonlocal'");
            if (c.contains("coefficients")) {
                if (!cfg.local_cost)
                    throw ConfigError("model.cost.coefficients: only valid for the local family");
                for (std::size_t i = 0; i < c.at("coefficients").size(); ++i)
                    cfg.f_coeff_modes.push_back(
                        parse_modes(c.at("coefficients")[i],
                                    "model.cost.coefficients[" + std::to_string(i) + "]"));
            }
            if (c.contains("kernel")) {
                if (cfg.local_cost)
                    throw ConfigError("model.cost.kernel: only valid for the nonlocal family");
                const json& kj = c.at("kernel");
                if (!kj.is_array())
                    throw ConfigError("model.cost.kernel: expected an array of [kx, ky, a]");
                for (const auto& e : kj) {
                    if (!e.is_array() || e.size() != 3)
                        throw ConfigError("model.cost.kernel: each entry must be [kx, ky, a]");
                    const int kx = e[0].get<int>(), ky = e[1].get<int>();
                    if (kx < 0 || ky < 1)
                        throw ConfigError(
                            "model.cost.kernel: need kx >= 0 and ky >= 1 (zero row means)");
                    cfg.kernel_modes.emplace_back(kx, ky, e[2].get<double>());
                }
            }
        }
    }

    if (j.contains("variation")) {
        const json& v = j.at("variation");
        expect_keys(v,
                    {"epsilon", "epsilon_order3", "probe_amplitude", "picard",
                     "force_negative_g1"},
                    "variation");
        cfg.epsilon = get_or(v, "epsilon", cfg.epsilon, "variation");
        cfg.epsilon_order3 = get_or(v, "epsilon_order3", cfg.epsilon_order3, "variation");
        cfg.probe_amplitude = get_or(v, "probe_amplitude", cfg.probe_amplitude, "variation");
        cfg.force_negative_g1 = get_or(v, "force_negative_g1", false, "variation");
        if (!(cfg.epsilon > 0.0) || cfg.epsilon > 0.5)
            throw ConfigError("variation.epsilon: must lie in (0, 0.5]");
        if (!(cfg.epsilon_order3 > 0.0) || cfg.epsilon_order3 > 0.5)
            throw ConfigError("variation.epsilon_order3: must lie in (0, 0.5]");
        if (v.contains("picard")) {
            const json& p = v.at("picard");
            expect_keys(p, {"max_iter", "tol", "damping"}, "variation.picard");
            cfg.picard.max_iter = get_or(p, "max_iter", cfg.picard.max_iter, "variation.picard");
            cfg.picard.tol = get_or(p, "tol", cfg.picard.tol, "variation.picard");
            cfg.picard.damping = get_or(p, "damping", cfg.picard.damping, "variation.picard");
            if (cfg.picard.max_iter < 1 || !(cfg.picard.tol > 0.0) ||
                !(cfg.picard.damping > 0.0) || cfg.picard.damping > 1.0)
                throw ConfigError("variation.picard: invalid iteration parameters");
        }
    }

    if (j.contains("inverse")) {
        const json& inv = j.at("inverse");
        expect_keys(inv,
                    {"unknowns", "kappa_probe_modes", "max_mode", "K_max", "kernel_modes",
                     "richardson"},
                    "inverse");
        if (inv.contains("unknowns")) {
            for (const auto& u : inv.at("unknowns")) {
                const std::string name = u.get<std::string>();
                if (name == "kappa")
                    cfg.want_kappa = true;
                else if (name == "f_coeffs")
                    cfg.want_f_coeffs = true;
                else if (name == "kernel")
                    cfg.want_kernel = true;
                else
                    throw ConfigError("inverse.unknowns: unknown entry '" + name + "'");
            }
        }
        if (inv.contains("kappa_probe_modes")) {
            cfg.kappa_probe_modes.clear();
            for (const auto& k : inv.at("kappa_probe_modes")) {
                const int mode = k.get<int>();
                if (mode < 1) throw ConfigError("inverse.kappa_probe_modes: modes must be >= 1");
                cfg.kappa_probe_modes.push_back(mode);
            }
            if (cfg.kappa_probe_modes.empty())
                throw ConfigError("inverse.kappa_probe_modes: must not be empty");
        }
        cfg.max_mode = get_or(inv, "max_mode", cfg.max_mode, "inverse");
        cfg.K_max = get_or(inv, "K_max", cfg.K_max, "inverse");
        cfg.kernel_M = get_or(inv, "kernel_modes", cfg.kernel_M, "inverse");
        cfg.richardson = get_or(inv, "richardson", cfg.richardson, "inverse");
        if (cfg.K_max < 1 || cfg.K_max > 3) throw ConfigError("inverse.K_max: must be in 1..3");
        if (cfg.kernel_M < 1 || cfg.kernel_M > cfg.grid.n_x / 4)
            throw ConfigError("inverse.kernel_modes: must be in 1..n_x/4");
        if (cfg.max_mode < 0 || cfg.max_mode > cfg.grid.n_x / 2)
            throw ConfigError("inverse.max_mode: must be in 0..n_x/2");
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        expect_keys(o, {"directory", "formats"}, "output");
        cfg.out_dir = get_or<std::string>(o, "directory", cfg.out_dir, "output");
        if (o.contains("formats")) {
            cfg.formats.clear();
            for (const auto& f : o.at("formats")) {
                const std::string name = f.get<std::string>();
                if (name != "json" && name != "csv")
                    throw ConfigError("output.formats: unknown format '" + name + "'");
                cfg.formats.push_back(name);
            }
        }
    }

    if (cfg.want_kernel && cfg.local_cost)
        throw ConfigError("inverse.unknowns: 'kernel' requires model.cost.family = 'nonlocal'");
    if (cfg.want_f_coeffs && !cfg.local_cost)
        throw ConfigError("inverse.unknowns: 'f_coeffs' requires model.cost.family = 'local'");
    return cfg;
}

SpatialField synthesize_modes(const Grid& g, const std::vector<std::pair<int, double>>& modes) {
    SpatialField out(g);
    for (const auto& [k, a] : modes)
        for (int i = 0; i < g.n_x; ++i) out[i] += a * std::cos(k * M_PI * g.x(i));
    return out;
}

GroundTruth build_ground_truth(const ExperimentConfig& cfg) {
    const Grid& g = cfg.grid;
    GroundTruth t;
    t.kappa = synthesize_modes(g, cfg.kappa_modes);
    t.hamiltonian = KineticHamiltonian{t.kappa};
    if (cfg.local_cost) {
        for (const auto& modes : cfg.f_coeff_modes) t.f_coeffs.push_back(synthesize_modes(g, modes));
        t.cost = LocalAnalyticCost{t.f_coeffs};
    } else {
        t.kernel.assign(static_cast<std::size_t>(g.n_x) * g.n_x, 0.0);
        for (const auto& [kx, ky, a] : cfg.kernel_modes)
            for (int i = 0; i < g.n_x; ++i)
                for (int jj = 0; jj < g.n_x; ++jj)
                    t.kernel[static_cast<std::size_t>(i) * g.n_x + jj] +=
                        a * std::cos(kx * M_PI * g.x(i)) * std::cos(ky * M_PI * g.x(jj));
        t.cost = NonlocalKernelCost::from_samples(g, t.kernel);
    }
    return t;
}

std::string measurement_set_to_json(const MeasurementSet& set) {
    json j;
    j["records"] = json::object();
    for (const auto& [key, rec] : set) j["records"][key] = json::parse(record_to_json(rec));
    return j.dump(2);
}

MeasurementSet measurement_set_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    MeasurementSet out;
    for (const auto& [key, rec] : j.at("records").items())
        out[key] = record_from_json(rec.dump());
    return out;
}

namespace {

struct SimTask {
    std::string key;
    SpatialField m0;
    SpatialField psi;
    bool unchecked = false;
};

SpatialField ones_field(const Grid& g) {
    return sample(g, [](double) { return 1.0; });
}

SpatialField eigenfunction(const Grid& g, int k) {
    return sample(g, [k](double x) { return std::cos(k * M_PI * x); });
}

/// Terminal amplitude normalizing the first psi-channel variation to
/// step_decay^{-j} cos(k pi x) at time level j.
double kappa_probe_amplitude(const Grid& g, int k) {
    return std::pow(1.0 / step_decay(g, k, TimeScheme::crank_nicolson), g.n_t);
}

std::vector<double> kappa_scales(const ExperimentConfig& cfg, int mode) {
    const double A = kappa_probe_amplitude(cfg.grid, mode);
    const double eps = cfg.probe_amplitude / (2.0 * A);
    std::vector<double> s{eps};
    if (cfg.richardson) s.push_back(0.5 * eps);
    return s;
}

std::vector<double> m0_samples(const ExperimentConfig& cfg) {
    std::vector<double> s{cfg.epsilon, 0.5 * cfg.epsilon, 0.25 * cfg.epsilon};
    if (cfg.richardson) s.push_back(0.125 * cfg.epsilon);
    return s;
}

std::vector<double> order3_samples(const ExperimentConfig& cfg) {
    const double e = cfg.epsilon_order3;
    return {e, 0.75 * e, 0.5 * e, 0.25 * e};
}

std::vector<SimTask> build_tasks(const ExperimentConfig& cfg) {
    const Grid& g = cfg.grid;
    std::vector<SimTask> tasks;
    const SpatialField zero(g);
    const SpatialField ones = ones_field(g);

    if (cfg.want_kappa) {
        for (int mode : cfg.kappa_probe_modes) {
            const double A = kappa_probe_amplitude(g, mode);
            const SpatialField f = eigenfunction(g, mode);
            const std::vector<double> scales = kappa_scales(cfg, mode);
            for (std::size_t si = 0; si < scales.size(); ++si) {
                const double s = scales[si];
                const std::array<std::pair<double, double>, 4> corners{
                    {{s, s}, {s, -s}, {-s, s}, {-s, -s}}};
                const char* names[4] = {"pp", "pm", "mp", "mm"};
                for (int c = 0; c < 4; ++c) {
                    SimTask t;
                    t.key = "kappa.k" + std::to_string(mode) + ".s" + std::to_string(si) + "." +
                            names[c];
                    t.m0 = zero;
                    t.psi = (corners[static_cast<std::size_t>(c)].first +
                             corners[static_cast<std::size_t>(c)].second) *
                            A * f;
                    t.psi.grid = g;
                    t.unchecked = true; // zero-mass m0 is outside O by design here
                    tasks.push_back(std::move(t));
                }
            }
        }
    }

    if (cfg.want_f_coeffs) {
        const std::vector<double> s12 = m0_samples(cfg);
        for (std::size_t i = 0; i < s12.size(); ++i) {
            SimTask t;
            t.key = "f.s12." + std::to_string(i);
            t.m0 = s12[i] * ones;
            t.psi = zero;
            tasks.push_back(std::move(t));
        }
        if (cfg.K_max >= 3) {
            const std::vector<double> s3 = order3_samples(cfg);
            for (std::size_t i = 0; i < s3.size(); ++i) {
                SimTask t;
                t.key = "f.s3." + std::to_string(i);
                t.m0 = s3[i] * ones;
                t.psi = zero;
                tasks.push_back(std::move(t));
            }
        }
    }

    if (cfg.want_kernel) {
        const std::vector<double> samples = m0_samples(cfg);
        for (int k = 0; k <= cfg.kernel_M; ++k) {
            const SpatialField gk = eigenfunction(g, k);
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const double e = samples[i];
                SimTask t;
                t.key = "kernel.k" + std::to_string(k) + "." + std::to_string(i);
                t.m0 = e * ones + (e * e) * gk;
                t.psi = zero;
                tasks.push_back(std::move(t));
            }
        }
    }
    return tasks;
}

} // namespace

MeasurementSet simulate_measurements(const ExperimentConfig& cfg, AuditLog* audit) {
    const GroundTruth truth = build_ground_truth(cfg);
    const std::vector<SimTask> tasks = build_tasks(cfg);
    std::vector<MeasurementRecord> results(tasks.size());
    std::vector<AuditLog> logs(tasks.size());
    run_tasks(static_cast<int>(tasks.size()), cfg.threads, [&](int i) {
        const SimTask& t = tasks[static_cast<std::size_t>(i)];
        MfgProblem p{truth.hamiltonian, truth.cost, t.m0, t.psi, cfg.grid, t.unchecked};
        MfgSolution sol =
            solve_mfg(p, cfg.picard, &logs[static_cast<std::size_t>(i)], t.key);
        results[static_cast<std::size_t>(i)] = measure(sol.u, {{"task", t.key}});
    });
    MeasurementSet out;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        out[tasks[i].key] = std::move(results[i]);
        if (audit) audit->insert(audit->end(), logs[i].begin(), logs[i].end());
    }
    return out;
}

namespace {

const MeasurementRecord& fetch(const MeasurementSet& set, const std::string& key) {
    auto it = set.find(key);
    if (it == set.end())
        throw ConfigError("measurement set: missing record '" + key + "'");
    return it->second;
}

MeasurementRecord richardson_combine(int truncation_order, const MeasurementRecord& fine,
                                     const MeasurementRecord& coarse) {
    // fine is the estimate at eps/2: error c (eps/2)^p vs c eps^p at eps.
    const double w = std::pow(2.0, truncation_order);
    return record_scale(1.0 / (w - 1.0), record_add(record_scale(w, fine), coarse, -1.0));
}

/// Quadratic/cubic fit extraction over an m0-channel sample family.
MeasurementRecord extract_m0_order(const MeasurementSet& set, const std::string& key_prefix,
                                   const std::vector<double>& samples,
                                   const VariationSpec& spec, int order, bool richardson) {
    auto fit = [&](std::size_t first, std::size_t count) {
        std::vector<SampledRecord> recs;
        for (std::size_t i = first; i < first + count; ++i)
            recs.push_back({samples[i], 0.0, fetch(set, key_prefix + std::to_string(i))});
        return extract_variation(recs, spec, order).rec;
    };
    if (order == 3) return fit(0, samples.size());
    if (!richardson) return fit(0, 3);
    // Samples are geometric: {eps, eps/2, eps/4, eps/8}; the shifted window
    // is the same fit at half the base step. One-sided quadratic fits carry
    // O(eps^2) error at order 1 and O(eps) at order 2.
    MeasurementRecord coarse = fit(0, 3);
    MeasurementRecord fine = fit(1, 3);
    return richardson_combine(order == 1 ? 2 : 1, fine, coarse);
}

double frobenius_rel_error(const Grid& g, const std::vector<double>& a,
                           const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_x; ++j) {
            const double w = g.quad_weight(i) * g.quad_weight(j);
            const double d = a[static_cast<std::size_t>(i) * g.n_x + j] -
                             b[static_cast<std::size_t>(i) * g.n_x + j];
            num += w * d * d;
            den += w * b[static_cast<std::size_t>(i) * g.n_x + j] *
                   b[static_cast<std::size_t>(i) * g.n_x + j];
        }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double max_err(const SpatialField& a, const SpatialField& b) { return max_abs(a - b); }

} // namespace

ReconstructionReport reconstruct(const ExperimentConfig& cfg, const MeasurementSet& set) {
    const Grid& g = cfg.grid;
    const GroundTruth truth = build_ground_truth(cfg);
    ReconstructionReport rep;
    rep.grid = g;
    {
        std::vector<std::string> names;
        if (cfg.want_kappa) names.push_back("kappa");
        if (cfg.want_f_coeffs) names.push_back("f_coeffs");
        if (cfg.want_kernel) names.push_back("kernel");
        for (std::size_t i = 0; i < names.size(); ++i)
            rep.experiment += (i ? "+" : "") + names[i];
    }

    RecoverOptions ro;
    ro.max_mode = cfg.max_mode;

    SpatialField kappa_in_use = truth.kappa;
    if (cfg.want_kappa) {
        std::vector<KappaProbeData> probes;
        for (int mode : cfg.kappa_probe_modes) {
            const double A = kappa_probe_amplitude(g, mode);
            const SpatialField f = A * eigenfunction(g, mode);
            VariationSpec spec;
            spec.channel = VariationChannel::psi_linearization;
            spec.directions = {f, f};
            const std::vector<double> scales = kappa_scales(cfg, mode);
            auto extract_at = [&](std::size_t si) {
                const double s = scales[si];
                const std::string prefix =
                    "kappa.k" + std::to_string(mode) + ".s" + std::to_string(si) + ".";
                std::vector<SampledRecord> recs{{s, s, fetch(set, prefix + "pp")},
                                                {s, -s, fetch(set, prefix + "pm")},
                                                {-s, s, fetch(set, prefix + "mp")},
                                                {-s, -s, fetch(set, prefix + "mm")}};
                return extract_variation(recs, spec, 2).rec;
            };
            MeasurementRecord var = extract_at(0);
            // Central stencils carry even-power error; eliminate eps^2.
            if (cfg.richardson) var = richardson_combine(2, extract_at(1), var);
            probes.push_back({mode, std::move(var), 0.0});
        }
        KappaRecovery kr = recover_kappa(g, probes, ro);
        rep.has_kappa = true;
        rep.kappa_recovered = kr.kappa;
        rep.kappa_truth = truth.kappa;
        rep.kappa_rel_l2 = rel_l2_error(kr.kappa, truth.kappa);
        rep.kappa_max_err = max_err(kr.kappa, truth.kappa);
        for (int i : kr.extrapolated_nodes)
            rep.diagnostics.push_back("kappa: node " + std::to_string(i) +
                                      " filled from nearest covered node");
        kappa_in_use = kr.kappa;
    }

    if (cfg.want_f_coeffs) {
        VariationSpec spec;
        spec.channel = VariationChannel::m0_variation;
        spec.directions = {ones_field(g), SpatialField(g)};
        std::vector<MeasurementVariation> bundles;
        const std::vector<double> s12 = m0_samples(cfg);
        for (int order = 1; order <= std::min(cfg.K_max, 2); ++order)
            bundles.push_back(
                {order, extract_m0_order(set, "f.s12.", s12, spec, order, cfg.richardson)});
        if (cfg.K_max >= 3)
            bundles.push_back(
                {3, extract_m0_order(set, "f.s3.", order3_samples(cfg), spec, 3, false)});
        FCoeffRecovery fr =
            recover_F_coeffs(g, bundles, kappa_in_use, cfg.K_max, ro, cfg.picard.solver);
        rep.f_recovered = fr.coeffs;
        for (int k = 0; k < cfg.K_max; ++k) {
            SpatialField t = k < static_cast<int>(truth.f_coeffs.size())
                                 ? truth.f_coeffs[static_cast<std::size_t>(k)]
                                 : SpatialField(g);
            rep.f_rel_l2.push_back(rel_l2_error(fr.coeffs[static_cast<std::size_t>(k)], t));
            rep.f_max_err.push_back(max_err(fr.coeffs[static_cast<std::size_t>(k)], t));
            rep.f_truth.push_back(std::move(t));
        }
    }

    if (cfg.want_kernel) {
        const std::vector<double> samples = m0_samples(cfg);
        std::vector<std::pair<int, MeasurementRecord>> bundles;
        for (int k = 0; k <= cfg.kernel_M; ++k) {
            VariationSpec spec;
            spec.channel = VariationChannel::m0_variation;
            spec.directions = {ones_field(g), eigenfunction(g, k)};
            const std::string prefix = "kernel.k" + std::to_string(k) + ".";
            bundles.emplace_back(
                k, extract_m0_order(set, prefix, samples, spec, 2, cfg.richardson));
        }
        KernelRecovery kr = recover_kernel(g, bundles, cfg.kernel_M, ro);
        rep.has_kernel = true;
        rep.kernel_recovered = kr.kernel;
        // Compare against the row-mean-projected kernel actually simulated.
        rep.kernel_truth = std::get<NonlocalKernelCost>(truth.cost).values();
        rep.kernel_rel_frobenius = frobenius_rel_error(g, kr.kernel, rep.kernel_truth);
        rep.kernel_mode0_diagnostic = kr.mode0_diagnostic;
    }
    return rep;
}

ReconstructionReport run_experiment(const ExperimentConfig& cfg, AuditLog* audit) {
    const auto start = std::chrono::steady_clock::now();
    MeasurementSet set = simulate_measurements(cfg, audit);
    ReconstructionReport rep = reconstruct(cfg, set);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

PositivityDemo run_positivity_demo(const ExperimentConfig& cfg) {
    if (cfg.local_cost)
        throw ConfigError("demo-positivity: requires model.cost.family = 'nonlocal'");
    ExperimentConfig demo_cfg = cfg;
    demo_cfg.want_kappa = false;
    demo_cfg.want_f_coeffs = false;
    demo_cfg.want_kernel = true;

    PositivityDemo out;
    MeasurementSet set = simulate_measurements(demo_cfg, &out.audit);
    ReconstructionReport rep = reconstruct(demo_cfg, set);
    out.kernel_rel_frobenius = rep.kernel_rel_frobenius;
    for (const AuditEntry& e : out.audit)
        if (e.min_m0 < 0.0) ++out.violations;

    const Grid& g = cfg.grid;
    for (int k = 1; k <= cfg.kernel_M; ++k) {
        const SpatialField gk = eigenfunction(g, k);
        bool negative = false;
        for (int i = 0; i < g.n_x; ++i)
            if (gk[i] < 0.0) negative = true;
        if (negative) out.sign_constrained_modes.push_back(k);
    }

    // The sign-changing direction through the first-order slot: inadmissible.
    const GroundTruth truth = build_ground_truth(demo_cfg);
    MfgProblem bad{truth.hamiltonian, truth.cost, cfg.epsilon * eigenfunction(g, 1),
                   SpatialField(g), g, false};
    if (cfg.force_negative_g1) {
        solve_mfg(bad, cfg.picard); // throws AdmissibilityError
    } else {
        try {
            solve_mfg(bad, cfg.picard);
        } catch (const AdmissibilityError&) {
            out.negative_g1_rejected = true;
        }
    }

    // The same direction through the second-order slot stays nonnegative.
    SpatialField second_slot =
        cfg.epsilon * ones_field(g) + (cfg.epsilon * cfg.epsilon) * eigenfunction(g, 1);
    out.min_m0_second_slot = second_slot[0];
    for (double v : second_slot.v) out.min_m0_second_slot = std::min(out.min_m0_second_slot, v);
    return out;
}

namespace {

json field_to_json(const SpatialField& f) {
    json arr = json::array();
    for (double v : f.v) arr.push_back(v);
    return arr;
}

} // namespace

std::string report_to_json(const ReconstructionReport& rep) {
    json j;
    j["grid"] = {{"n_x", rep.grid.n_x}, {"n_t", rep.grid.n_t}, {"T", rep.grid.T},
                 {"beta", rep.grid.beta}};
    j["experiment"] = rep.experiment;
    if (rep.has_kappa) {
        j["kappa"] = {{"recovered", field_to_json(rep.kappa_recovered)},
                      {"truth", field_to_json(rep.kappa_truth)},
                      {"rel_l2_error", rep.kappa_rel_l2},
                      {"max_error", rep.kappa_max_err}};
    }
    if (!rep.f_recovered.empty()) {
        json orders = json::array();
        for (std::size_t k = 0; k < rep.f_recovered.size(); ++k)
            orders.push_back({{"order", k + 1},
                              {"recovered", field_to_json(rep.f_recovered[k])},
                              {"truth", field_to_json(rep.f_truth[k])},
                              {"rel_l2_error", rep.f_rel_l2[k]},
                              {"max_error", rep.f_max_err[k]}});
        j["f_coeffs"] = orders;
    }
    if (rep.has_kernel) {
        j["kernel"] = {{"recovered", rep.kernel_recovered},
                       {"truth", rep.kernel_truth},
                       {"rel_frobenius_error", rep.kernel_rel_frobenius},
                       {"mode0_diagnostic", rep.kernel_mode0_diagnostic}};
    }
    j["diagnostics"] = rep.diagnostics;
    j["wall_seconds_excluded_from_hash"] = rep.wall_seconds;
    return j.dump(2);
}

std::string positivity_demo_to_json(const PositivityDemo& demo) {
    json j;
    json audit = json::array();
    for (const AuditEntry& e : demo.audit)
        audit.push_back({{"label", e.label},
                         {"min_m0", e.min_m0},
                         {"mass", e.mass},
                         {"unchecked", e.unchecked}});
    j["audit"] = audit;
    j["violations"] = demo.violations;
    j["kernel_rel_frobenius_error"] = demo.kernel_rel_frobenius;
    j["sign_constrained_modes"] = demo.sign_constrained_modes;
    j["negative_g1_rejected"] = demo.negative_g1_rejected;
    j["min_m0_second_slot"] = demo.min_m0_second_slot;
    return j.dump(2);
}

void emit_plot_data(const ReconstructionReport& rep, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Grid& g = rep.grid;
    auto write_field = [&](const std::string& name, const SpatialField& truth,
                           const SpatialField& recovered) {
        std::ofstream out(fs::path(dir) / (name + ".csv"));
        out << "x,truth,recovered,abs_error\n";
        for (int i = 0; i < g.n_x; ++i)
            out << fmt(g.x(i)) << ',' << fmt(truth[i]) << ',' << fmt(recovered[i]) << ','
                << fmt(std::abs(truth[i] - recovered[i])) << '\n';
    };
    if (rep.has_kappa) write_field("kappa", rep.kappa_truth, rep.kappa_recovered);
    for (std::size_t k = 0; k < rep.f_recovered.size(); ++k)
        write_field("f" + std::to_string(k + 1), rep.f_truth[k], rep.f_recovered[k]);
    if (rep.has_kernel) {
        std::ofstream out(fs::path(dir) / "kernel.csv");
        out << "x,y,truth,recovered\n";
        for (int i = 0; i < g.n_x; ++i)
            for (int j = 0; j < g.n_x; ++j)
                out << fmt(g.x(i)) << ',' << fmt(g.x(j)) << ','
                    << fmt(rep.kernel_truth[static_cast<std::size_t>(i) * g.n_x + j]) << ','
                    << fmt(rep.kernel_recovered[static_cast<std::size_t>(i) * g.n_x + j]) << '\n';
    }
}

} // namespace mfg1d
