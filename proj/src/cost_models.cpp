#include "mfg1d/cost_models.hpp"

#include "mfg1d/parabolic.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg1d {

NonlocalKernelCost NonlocalKernelCost::from_samples(const Grid& g, std::vector<double> kernel) {
    if (kernel.size() != static_cast<std::size_t>(g.n_x) * g.n_x)
        throw std::invalid_argument("NonlocalKernelCost: kernel must be n_x x n_x");
    // Project each row onto zero trapezoid mean; an analytically zero-mean
    // kernel sampled on the grid carries an O(h^2) residue that would leak
    // into the u^(I) = 0 identity otherwise.
    for (int i = 0; i < g.n_x; ++i) {
        double mean = 0.0;
        for (int j = 0; j < g.n_x; ++j)
            mean += g.quad_weight(j) * kernel[static_cast<std::size_t>(i) * g.n_x + j];
        for (int j = 0; j < g.n_x; ++j)
            kernel[static_cast<std::size_t>(i) * g.n_x + j] -= mean;
    }
    NonlocalKernelCost out;
    out.grid_ = g;
    out.kernel_ = std::move(kernel);
    return out;
}

std::optional<KernelViolation> validate_kernel(const Grid& g, const std::vector<double>& kernel,
                                               double tol) {
    if (kernel.size() != static_cast<std::size_t>(g.n_x) * g.n_x)
        throw std::invalid_argument("validate_kernel: kernel must be n_x x n_x");
    KernelViolation worst{-1, 0.0};
    for (int i = 0; i < g.n_x; ++i) {
        double mean = 0.0;
        for (int j = 0; j < g.n_x; ++j)
            mean += g.quad_weight(j) * kernel[static_cast<std::size_t>(i) * g.n_x + j];
        if (std::abs(mean) > std::abs(worst.mean)) worst = {i, mean};
    }
    if (std::abs(worst.mean) > tol) return worst;
    return std::nullopt;
}

bool is_local(const CostModel& c) { return std::holds_alternative<LocalAnalyticCost>(c); }

SpaceTimeField eval_local_cost(const LocalAnalyticCost& c, const SpaceTimeField& m) {
    const Grid& g = m.grid;
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) {
            const double z = m.at(j, i);
            double term = 1.0; // z^k / k!, built incrementally
            double acc = 0.0;
            for (int k = 1; k <= c.k_max(); ++k) {
                term *= z / k;
                acc += c.coeffs[static_cast<std::size_t>(k - 1)][i] * term;
            }
            out.at(j, i) = acc;
        }
    return out;
}

SpaceTimeField eval_nonlocal_cost(const NonlocalKernelCost& c, const SpaceTimeField& m) {
    const Grid& g = m.grid;
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i) {
            double acc = 0.0;
            for (int y = 0; y < g.n_x; ++y) acc += g.quad_weight(y) * c.at(i, y) * m.at(j, y);
            out.at(j, i) = acc;
        }
    return out;
}

SpaceTimeField eval_cost(const CostModel& c, const SpaceTimeField& m) {
    if (const auto* local = std::get_if<LocalAnalyticCost>(&c)) return eval_local_cost(*local, m);
    return eval_nonlocal_cost(std::get<NonlocalKernelCost>(c), m);
}

SpaceTimeField eval_hamiltonian(const KineticHamiltonian& hk, const SpaceTimeField& u) {
    const Grid& g = u.grid;
    SpaceTimeField du = gradient_xt(u);
    SpaceTimeField out(g);
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i < g.n_x; ++i)
            out.at(j, i) = 0.5 * hk.kappa[i] * du.at(j, i) * du.at(j, i);
    return out;
}

SpaceTimeField cost_derivative_apply(const CostModel& c, const SpaceTimeField& rho) {
    if (const auto* local = std::get_if<LocalAnalyticCost>(&c)) {
        const Grid& g = rho.grid;
        SpaceTimeField out(g);
        if (local->k_max() >= 1)
            for (int j = 0; j <= g.n_t; ++j)
                for (int i = 0; i < g.n_x; ++i)
                    out.at(j, i) = local->coeffs[0][i] * rho.at(j, i);
        return out;
    }
    return eval_nonlocal_cost(std::get<NonlocalKernelCost>(c), rho);
}

} // namespace mfg1d
