#pragma once

#include "mfg1d/grid.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mfg1d {

/// Running cost F(x, m) = sum_{k>=1} F_k(x) m^k / k!. The zeroth
/// coefficient is structurally absent: F(x, 0) = 0.
struct LocalAnalyticCost {
    std::vector<SpatialField> coeffs; // F^(1), F^(2), ..., F^(Kmax)

    int k_max() const { return static_cast<int>(coeffs.size()); }
};

struct KernelViolation {
    int row;
    double mean;
};

/// Nonlocal running cost F(x, m) = int K(x, y) m(y, t) dy with every row of
/// K integrating to zero over y.
class NonlocalKernelCost {
public:
    /// Takes the raw kernel samples (row-major n_x * n_x, K[i*n_x+j] =
    /// K(x_i, y_j)) and subtracts each row's trapezoid mean so the zero
    /// row-mean constraint holds exactly on the grid.
    static NonlocalKernelCost from_samples(const Grid& g, std::vector<double> kernel);

    const Grid& grid() const { return grid_; }
    double at(int i, int j) const { return kernel_[static_cast<std::size_t>(i) * grid_.n_x + j]; }
    const std::vector<double>& values() const { return kernel_; }

private:
    Grid grid_;
    std::vector<double> kernel_;
};

/// Checks the zero row-mean constraint on raw kernel samples; returns the
/// worst offending row when any trapezoid row mean exceeds 1e-10 in
/// magnitude.
std::optional<KernelViolation> validate_kernel(const Grid& g, const std::vector<double>& kernel,
                                               double tol = 1e-10);

/// Kinetic Hamiltonian H(x, p) = kappa(x) p^2 / 2.
struct KineticHamiltonian {
    SpatialField kappa;
};

using CostModel = std::variant<LocalAnalyticCost, NonlocalKernelCost>;

bool is_local(const CostModel& c);

/// F(x, m(x,t)) evaluated pointwise on the grid.
SpaceTimeField eval_local_cost(const LocalAnalyticCost& c, const SpaceTimeField& m);

/// For each time level, the quadrature of int K(x, .) m(., t) dy.
SpaceTimeField eval_nonlocal_cost(const NonlocalKernelCost& c, const SpaceTimeField& m);

SpaceTimeField eval_cost(const CostModel& c, const SpaceTimeField& m);

/// kappa(x) * (du/dx)^2 / 2 with the nodal gradient of parabolic.hpp.
SpaceTimeField eval_hamiltonian(const KineticHamiltonian& hk, const SpaceTimeField& u);

/// Derivative of the cost in the density direction rho at m = 0:
/// F^(1)(x) rho(x,t) in the local case, int K(x,y) rho(y,t) dy in the
/// nonlocal case. This is the coupling source of every first-order
/// linearized system.
SpaceTimeField cost_derivative_apply(const CostModel& c, const SpaceTimeField& rho);

} // namespace mfg1d
