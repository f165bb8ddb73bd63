#include "mfg1d/mfg_forward.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mfg1d {

namespace {

DriftField make_drift(const KineticHamiltonian& hk, const SpaceTimeField& u) {
    DriftField d{gradient_xt(u)};
    const Grid& g = u.grid;
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) d.a.at(j, i) *= hk.kappa[i];
    return d;
}

double min_value(const SpaceTimeField& f) {
    double m = f.v.empty() ? 0.0 : f.v[0];
    for (double x : f.v) m = std::min(m, x);
    return m;
}

} // namespace

MfgSolution solve_mfg(const MfgProblem& p, const PicardOptions& opts, AuditLog* audit,
                      const std::string& audit_label) {
    const Grid& g = p.grid;
    if (!(opts.tol > 0.0) || !(opts.damping > 0.0) || opts.damping > 1.0)
        throw std::invalid_argument("solve_mfg: invalid Picard options");

    double min_m0 = p.m0[0];
    for (double x : p.m0.v) min_m0 = std::min(min_m0, x);
    const double mass = integrate_space(p.m0);
    if (audit) audit->push_back({audit_label, min_m0, mass, p.unchecked});
    if (!p.unchecked) {
        if (min_m0 < -1e-12)
            throw AdmissibilityError("solve_mfg: m0 takes negative values (min = " +
                                     std::to_string(min_m0) + ")");
        if (!(mass > 0.0) || mass > 1.0 + 1e-12)
            throw AdmissibilityError("solve_mfg: total mass of m0 must lie in (0, 1], got " +
                                     std::to_string(mass));
    }

    const double theta = opts.damping;
    const SpaceTimeField zero_source(g);

    // Initial iterate: u at the mean terminal cost, m the driftless heat
    // evolution of m0. Exact for trivial data.
    SpaceTimeField u(g, integrate_space(p.psi));
    SpaceTimeField m = solve_forward(p.m0, nullptr, zero_source, g, opts.solver);

    MfgSolution out;
    double change = 0.0;
    int it = 0;
    for (it = 1; it <= opts.max_iter; ++it) {
        DriftField drift = make_drift(p.hamiltonian, u);
        SpaceTimeField m_new = solve_forward(p.m0, &drift, zero_source, g, opts.solver);
        SpaceTimeField hjb_source = eval_cost(p.cost, m_new) - eval_hamiltonian(p.hamiltonian, u);
        SpaceTimeField u_new = solve_backward(p.psi, hjb_source, g, opts.solver);

        change = std::max(max_abs(u_new - u), max_abs(m_new - m));
        u = theta * std::move(u_new) + (1.0 - theta) * std::move(u);
        m = theta * std::move(m_new) + (1.0 - theta) * std::move(m);
        if (change < opts.tol) break;
    }
    if (change >= opts.tol)
        throw NonConvergenceError("solve_mfg: Picard iteration did not converge (residual " +
                                      std::to_string(change) + ")",
                                  change, opts.max_iter);

    out.iterations = std::min(it, opts.max_iter);
    out.residual = change;
    if (min_value(m) < -10.0 * opts.tol &&
        opts.solver.drift_discretization == DriftDiscretization::centered_flux)
        out.negative_density = true;

    // Substitution certificate against the discrete schemes.
    DriftField drift = make_drift(p.hamiltonian, u);
    SpaceTimeField hjb_source = eval_cost(p.cost, m) - eval_hamiltonian(p.hamiltonian, u);
    out.pde_residual_u = backward_residual(u, hjb_source, opts.solver);
    out.pde_residual_m = forward_residual(m, &drift, zero_source, opts.solver);
    out.u = std::move(u);
    out.m = std::move(m);
    return out;
}

MeasurementRecord measure(const SpaceTimeField& u, std::map<std::string, std::string> metadata) {
    const Grid& g = u.grid;
    MeasurementRecord r;
    r.grid = g;
    r.trace_left.resize(static_cast<std::size_t>(g.n_t) + 1);
    r.trace_right.resize(static_cast<std::size_t>(g.n_t) + 1);
    r.initial_snapshot.resize(static_cast<std::size_t>(g.n_x));
    for (int j = 0; j <= g.n_t; ++j) {
        r.trace_left[static_cast<std::size_t>(j)] = u.at(j, 0);
        r.trace_right[static_cast<std::size_t>(j)] = u.at(j, g.n_x - 1);
    }
    for (int i = 0; i < g.n_x; ++i) r.initial_snapshot[static_cast<std::size_t>(i)] = u.at(0, i);
    r.metadata = std::move(metadata);
    return r;
}

MeasurementRecord record_like(const Grid& g) {
    MeasurementRecord r;
    r.grid = g;
    r.trace_left.assign(static_cast<std::size_t>(g.n_t) + 1, 0.0);
    r.trace_right.assign(static_cast<std::size_t>(g.n_t) + 1, 0.0);
    r.initial_snapshot.assign(static_cast<std::size_t>(g.n_x), 0.0);
    return r;
}

MeasurementRecord record_add(MeasurementRecord a, const MeasurementRecord& b, double scale) {
    for (std::size_t i = 0; i < a.trace_left.size(); ++i) {
        a.trace_left[i] += scale * b.trace_left[i];
        a.trace_right[i] += scale * b.trace_right[i];
    }
    for (std::size_t i = 0; i < a.initial_snapshot.size(); ++i)
        a.initial_snapshot[i] += scale * b.initial_snapshot[i];
    return a;
}

MeasurementRecord record_scale(double c, MeasurementRecord a) {
    for (double& x : a.trace_left) x *= c;
    for (double& x : a.trace_right) x *= c;
    for (double& x : a.initial_snapshot) x *= c;
    return a;
}

namespace {

std::string encode_csv(const std::vector<double>& v) {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
        out.append(buf, res.ptr);
    }
    return out;
}

std::vector<double> decode_csv(const std::string& s) {
    std::vector<double> out;
    const char* p = s.data();
    const char* end = p + s.size();
    while (p < end) {
        double val = 0.0;
        auto res = std::from_chars(p, end, val);
        if (res.ec != std::errc{}) throw std::invalid_argument("bad CSV array: " + s);
        out.push_back(val);
        p = res.ptr;
        if (p < end && *p == ',') ++p;
    }
    return out;
}

} // namespace

std::string record_to_json(const MeasurementRecord& r) {
    nlohmann::json j;
    j["grid"] = {{"n_x", r.grid.n_x}, {"n_t", r.grid.n_t}, {"T", r.grid.T}, {"beta", r.grid.beta}};
    j["trace_left"] = encode_csv(r.trace_left);
    j["trace_right"] = encode_csv(r.trace_right);
    j["initial_snapshot"] = encode_csv(r.initial_snapshot);
    j["metadata"] = r.metadata;
    return j.dump(2);
}

MeasurementRecord record_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    MeasurementRecord r;
    r.grid = Grid{j.at("grid").at("n_x").get<int>(), j.at("grid").at("n_t").get<int>(),
                  j.at("grid").at("T").get<double>(), j.at("grid").at("beta").get<double>()};
    r.trace_left = decode_csv(j.at("trace_left").get<std::string>());
    r.trace_right = decode_csv(j.at("trace_right").get<std::string>());
    r.initial_snapshot = decode_csv(j.at("initial_snapshot").get<std::string>());
    if (j.contains("metadata"))
        r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    if (r.trace_left.size() != static_cast<std::size_t>(r.grid.n_t) + 1 ||
        r.trace_right.size() != static_cast<std::size_t>(r.grid.n_t) + 1 ||
        r.initial_snapshot.size() != static_cast<std::size_t>(r.grid.n_x))
        throw std::invalid_argument("MeasurementRecord: array lengths do not match grid");
    return r;
}

} // namespace mfg1d
