/**
 * @file lq_value.hpp
 * @brief Mean-field LQ risk-sensitive value: feedback, lambda(T), small-beta approximation
 *
 * Problem: dx = (ax + bv) dt + sigma dw, cost exp(alpha [int (qx^2 + rv^2)/2 dt
 * + qT x(T)^2/2 + beta E x(T)]). For small beta the value is approximated by
 *   E phi_T ~ e^{alpha beta y(T)} lambda(T),
 *   lambda(T) = int e^{alpha (pi(0) x^2/2 + rho(0))} m0(dx),
 *   dy/dt = (a - (b^2/r) pi) y,  y(0) = mean of m0,
 * with the neglected terms of order beta^2, measured by (b^2/2r) alpha beta^2 / omega(0)^2.
 */

#pragma once

#include "riskmf/model.hpp"
#include "riskmf/particles.hpp"
#include "riskmf/riccati.hpp"

#include <optional>
#include <string>
#include <vector>

namespace riskmf {

enum class ValueRoute { ClosedFormApprox, MonteCarlo, Pde };

enum class ChiCorrection { None, Approx };

struct MFLQSolution {
    RiccatiSolution riccati;          ///< with omega attached
    std::vector<double> y;            ///< mean path
    std::vector<double> feedback_gain;
    double chi0 = 0.0;
    double lambda_T = 0.0;
    double value = 0.0;               ///< E phi_T = chi0 / alpha
    double residual_beta2 = 0.0;
    ValueRoute provenance = ValueRoute::ClosedFormApprox;
};

/// None: v = -(b/r) pi(t) x. Approx: v = -(b/r)(pi x + beta lambda(T) omega(t) / u0(x, z, t))
/// with u0 = exp(alpha (z + pi x^2/2 + rho)); needs lambda_T.
[[nodiscard]] Policy optimal_feedback(const RiccatiSolution& riccati, const LQScalarModel& model,
                                      const RiskParams& risk, ChiCorrection correction,
                                      std::optional<double> lambda_T = std::nullopt);

/// Gaussian laws need alpha pi(0) s0^2 < 1; samples are averaged max-shifted.
[[nodiscard]] double lambda_T_quadrature(const RiccatiSolution& riccati, const InitialLaw& init,
                                         const RiskParams& risk);

[[nodiscard]] MFLQSolution approx_value_small_beta(const LQScalarModel& model, const RiskParams& risk,
                                                   const InitialLaw& init, const TimeGrid& grid);

/// E[C] of the risk-neutral optimum: pi0(0) E[x0^2]/2 + rho0(0) from the alpha = 0 Riccati.
[[nodiscard]] double risk_neutral_cost(const LQScalarModel& model, const InitialLaw& init, const TimeGrid& grid);

struct SMPDiagnostics {
    std::vector<std::size_t> nodes;          ///< snapshot nodes of p_path
    std::vector<std::vector<double>> p_path; ///< [snapshot][particle]
    std::vector<double> terminal_residual;
    double max_abs_residual = 0.0;
};

/// Checks p(T) = qT x(T) + beta chi(0)/chi(T) against the explicit solution
/// p = pi x + beta omega chi(0)/chi with chi(T) = alpha phi_T. Intermediate
/// nodes use chi(0)/chi(t) ~ 1.
[[nodiscard]] SMPDiagnostics smp_terminal_residual(const Trajectory& traj, const RiccatiSolution& riccati,
                                                   const LQScalarModel& model, const RiskParams& risk, double chi0);

struct ValueReport {
    std::string scenario_id;
    double alpha = 0.0;
    double beta = 0.0;
    std::optional<double> value_closed_form;
    std::optional<double> value_mc;
    std::optional<double> mc_std_error;
    std::optional<double> value_pde;
    std::optional<double> certainty_equivalent;
    std::optional<double> residual_beta2;
    bool blow_up = false;
};

} // namespace riskmf
