/**
 * @file riccati.hpp
 * @brief Backward Riccati solves, omega and the mean ODE
 *
 * Risk-sensitive Riccati equation (half-cost convention):
 *   dPi/dt = -Pi A - A'Pi + Pi (B R^-1 B' - alpha a) Pi - Q,   Pi(T) = Q_T,
 *   rho(t) = 1/2 int_t^T tr(a Pi(s)) ds.
 * When B R^-1 B' - alpha a is indefinite the solution can escape in finite
 * time; the escape is reported in the result rather than thrown.
 */

#pragma once

#include "riskmf/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace riskmf {

inline constexpr double kBlowUpThreshold = 1e8;

struct BlowUp {
    std::size_t node = 0;          ///< first offending node
    double t_node = 0.0;           ///< its time
    double t_extrapolated = 0.0;   ///< zero of the linear extrapolation of 1/|Pi|
};

struct RiccatiSolution {
    TimeGrid grid{1.0, 2};
    /// Pi at every node; entries before a blow-up are NaN-filled.
    std::vector<Eigen::MatrixXd> Pi;
    std::vector<double> rho;
    std::vector<double> omega;  ///< empty unless solve_omega was attached
    std::optional<BlowUp> blow_up;

    [[nodiscard]] bool usable() const noexcept { return !blow_up.has_value(); }
    /// Scalar pi at node k.
    [[nodiscard]] double pi(std::size_t k) const { return Pi[k](0, 0); }
    [[nodiscard]] std::vector<double> pi_path() const;
    /// Throws BlowUpInput when the solution is unusable.
    void require_usable() const;
};

/// Classical RK4 backward from Pi(T) = Q_T with symmetrization each step.
[[nodiscard]] RiccatiSolution solve_matrix_riccati(const LQMatrixModel& model, const RiskParams& risk,
                                                   const TimeGrid& grid);

/// Scalar version:
///   dpi/dt = -2a pi + (b^2/r - alpha sigma^2) pi^2 - q - alpha beta sigma^2 gamma,   pi(T) = qT.
/// gamma is an experimental coefficient and defaults to zero.
[[nodiscard]] RiccatiSolution solve_scalar_riccati(const LQScalarModel& model, const RiskParams& risk,
                                                   const TimeGrid& grid, double gamma = 0.0);

/// omega(t_k) = exp(int_{t_k}^T (a - (b^2/r) pi)), trapezoidal.
[[nodiscard]] std::vector<double> solve_omega(std::span<const double> pi, const LQScalarModel& model,
                                              const TimeGrid& grid);

/// Solves omega and stores it on the solution.
void attach_omega(RiccatiSolution& solution, const LQScalarModel& model);

struct MeanOdeCorrection {
    double beta = 0.0;
    std::vector<double> omega;
    std::vector<double> chi_ratio;  ///< chi(0) E[chi^-1(t)] per node
};

/// Forward RK4 for dy/dt = (a - (b^2/r) pi) y [- beta (b^2/r) omega c(t)],  y(0) = x0_mean.
[[nodiscard]] std::vector<double> solve_mean_ode(std::span<const double> pi, const LQScalarModel& model,
                                                 const TimeGrid& grid, double x0_mean,
                                                 const std::optional<MeanOdeCorrection>& correction = std::nullopt);

} // namespace riskmf
