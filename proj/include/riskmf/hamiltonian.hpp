/**
 * @file hamiltonian.hpp
 * @brief Risk-neutral and augmented Hamiltonians and their minimizers
 *
 * The augmented Hamiltonian is
 *   H~(x, stat, q, rho) = inf_v { rho f(x, stat, v) + q g(x, stat, v) },
 * and for rho > 0 it reduces to rho H(x, stat, q / rho).
 */

#pragma once

#include "riskmf/model.hpp"

#include <functional>

namespace riskmf {

struct HamiltonianResult {
    double value = 0.0;   ///< the infimum
    double v_star = 0.0;  ///< the minimizer
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Closed form for the scalar LQ model with rho standing for D_z u:
///   v* = -(b/r) q / rho,   value = rho q_state x^2 / 2 + a x q - (b^2/r) q^2 / (2 rho).
[[nodiscard]] HamiltonianResult lq_hamiltonian(const LQScalarModel& model, double x, double q, double rho);

/// Minimizes v -> rho f + q g over a box. A 16-point scan picks the best
/// bracket (ties toward smaller |v|) and golden-section refines it to tol.
[[nodiscard]] HamiltonianResult numeric_hamiltonian(const GenericModel& model, double x, double stat, double q,
                                                    double rho, Interval v_bounds, double tol);

using ReducedHamiltonian = std::function<double(double x, double stat, double q)>;

/// rho * H(x, stat, q / rho)
[[nodiscard]] double tilde_reduce(const ReducedHamiltonian& H, double x, double stat, double q, double rho);

} // namespace riskmf
