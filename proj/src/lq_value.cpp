#include "riskmf/lq_value.hpp"

#include "riskmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace riskmf {

Policy optimal_feedback(const RiccatiSolution& riccati, const LQScalarModel& model, const RiskParams& risk,
                        ChiCorrection correction, std::optional<double> lambda_T) {
    riccati.require_usable();
    const double ratio = model.b / model.r;
    const auto pi = riccati.pi_path();
    if (correction == ChiCorrection::None || risk.beta == 0.0) {
        std::vector<double> gain(pi.size());
        std::transform(pi.begin(), pi.end(), gain.begin(), [ratio](double p) { return ratio * p; });
        return Policy{LinearGain{std::move(gain)}};
    }
    if (!lambda_T) throw Error(ErrorCode::InvalidInput, "the corrected feedback needs lambda(T)");

    struct Shared {
        TimeGrid grid;
        std::vector<double> pi, rho, omega;
    };
    auto shared = std::make_shared<Shared>(Shared{riccati.grid, pi, riccati.rho,
                                                  riccati.omega.empty() ? solve_omega(pi, model, riccati.grid)
                                                                        : riccati.omega});
    const double alpha = risk.alpha;
    const double scale = risk.beta * *lambda_T;
    return Policy{CallbackPolicy{[shared, ratio, alpha, scale](double t, double x, double z, double) {
        const auto& s = *shared;
        const double p = s.grid.interpolate(s.pi, t);
        const double log_u0 = alpha * (z + 0.5 * p * x * x + s.grid.interpolate(s.rho, t));
        return -ratio * (p * x + scale * s.grid.interpolate(s.omega, t) * std::exp(-log_u0));
    }}};
}

double lambda_T_quadrature(const RiccatiSolution& riccati, const InitialLaw& init, const RiskParams& risk) {
    riccati.require_usable();
    const double p0 = riccati.pi(0);
    const double rho0 = riccati.rho[0];
    const double alpha = risk.alpha;
    return std::visit(
        [&](const auto& law) -> double {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, SampleLaw>) {
                std::vector<double> c(law.samples.size());
                std::transform(law.samples.begin(), law.samples.end(), c.begin(),
                               [p0](double x) { return 0.5 * p0 * x * x; });
                return std::exp(alpha * rho0 + exponential_moment(c, alpha).log_j_alpha);
            } else {
                const double mean = init.mean();
                const double var = init.variance();
                const double margin = 1.0 - alpha * p0 * var;
                if (!(margin > 0.0)) {
                    throw Error(ErrorCode::IntegrabilityViolation,
                                "alpha * pi(0) * s0^2 >= 1: the exponential moment of m0 is infinite");
                }
                return std::exp(alpha * rho0 + alpha * p0 * mean * mean / (2.0 * margin)) / std::sqrt(margin);
            }
        },
        init.kind);
}

MFLQSolution approx_value_small_beta(const LQScalarModel& model, const RiskParams& risk, const InitialLaw& init,
                                     const TimeGrid& grid) {
    MFLQSolution sol;
    sol.riccati = solve_scalar_riccati(model, risk, grid);
    attach_omega(sol.riccati, model);
    const auto pi = sol.riccati.pi_path();
    sol.y = solve_mean_ode(pi, model, grid, init.mean());
    sol.lambda_T = lambda_T_quadrature(sol.riccati, init, risk);
    sol.value = std::exp(risk.alpha * risk.beta * sol.y.back()) * sol.lambda_T;
    sol.chi0 = risk.alpha * sol.value;
    sol.feedback_gain.resize(pi.size());
    std::transform(pi.begin(), pi.end(), sol.feedback_gain.begin(),
                   [ratio = model.b / model.r](double p) { return ratio * p; });
    const double w0 = sol.riccati.omega.front();
    sol.residual_beta2 = (model.b * model.b / (2.0 * model.r)) * risk.alpha * risk.beta * risk.beta / (w0 * w0);
    sol.provenance = ValueRoute::ClosedFormApprox;
    return sol;
}

double risk_neutral_cost(const LQScalarModel& model, const InitialLaw& init, const TimeGrid& grid) {
    const auto sol = solve_scalar_riccati(model, RiskParams{0.0, 0.0}, grid);
    sol.require_usable();
    const double m = init.mean();
    return 0.5 * sol.pi(0) * (m * m + init.variance()) + sol.rho[0];
}

SMPDiagnostics smp_terminal_residual(const Trajectory& traj, const RiccatiSolution& riccati,
                                     const LQScalarModel& model, const RiskParams& risk, double chi0) {
    riccati.require_usable();
    if (!(riccati.grid == traj.grid)) throw Error(ErrorCode::InvalidInput, "Riccati and trajectory grids differ");
    const auto pi = riccati.pi_path();
    const auto omega = riccati.omega.empty() ? solve_omega(pi, model, riccati.grid) : riccati.omega;
    const auto& fin = traj.terminal();
    const auto costs = terminal_costs(traj, model, risk.beta);
    const double log_chi0_over_alpha = std::log(chi0 / risk.alpha);
    const auto n = traj.grid.n_steps();

    SMPDiagnostics out;
    for (const auto& snap : traj.snapshots) {
        out.nodes.push_back(snap.node);
        std::vector<double> p(snap.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            // chi(0)/chi(T) = (chi0/alpha) / phi_T; zeroth order elsewhere.
            const double chi_ratio = snap.node == n ? std::exp(log_chi0_over_alpha - risk.alpha * costs[i]) : 1.0;
            p[i] = pi[snap.node] * snap.x[i] + risk.beta * omega[snap.node] * chi_ratio;
        }
        out.p_path.push_back(std::move(p));
    }

    out.terminal_residual.resize(fin.size());
    for (std::size_t i = 0; i < fin.size(); ++i) {
        const double chi_ratio = std::exp(log_chi0_over_alpha - risk.alpha * costs[i]);
        const double target = model.qT * fin.x[i] + risk.beta * chi_ratio;
        out.terminal_residual[i] = out.p_path.back()[i] - target;
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(out.terminal_residual[i]));
    }
    return out;
}

} // namespace riskmf
