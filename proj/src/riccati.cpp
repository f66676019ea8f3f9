#include "riskmf/riccati.hpp"

#include "riskmf/error.hpp"

#include <cmath>
#include <limits>

namespace riskmf {

std::vector<double> RiccatiSolution::pi_path() const {
    std::vector<double> out(Pi.size());
    for (std::size_t k = 0; k < Pi.size(); ++k) out[k] = Pi[k](0, 0);
    return out;
}

void RiccatiSolution::require_usable() const {
    if (blow_up) {
        throw Error(ErrorCode::BlowUpInput,
                    "Riccati solution blew up at t = " + std::to_string(blow_up->t_node));
    }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Backward RK4 driver shared by the scalar and matrix solves.
template <typename Rhs>
RiccatiSolution integrate_backward(const Eigen::MatrixXd& terminal, const Eigen::MatrixXd& diffusion,
                                   const TimeGrid& grid, Rhs rhs) {
    const auto n = grid.n_steps();
    const double h = grid.dt();
    const auto dim = terminal.rows();

    RiccatiSolution sol;
    sol.grid = grid;
    sol.Pi.assign(grid.n_nodes(), Eigen::MatrixXd::Constant(dim, dim, kNaN));
    sol.rho.assign(grid.n_nodes(), kNaN);

    Eigen::MatrixXd P = terminal;
    sol.Pi[n] = P;
    sol.rho[n] = 0.0;
    double trace_next = 0.5 * (diffusion * P).trace();

    for (std::size_t step = n; step-- > 0;) {
        const Eigen::MatrixXd k1 = rhs(P);
        const Eigen::MatrixXd k2 = rhs(P - 0.5 * h * k1);
        const Eigen::MatrixXd k3 = rhs(P - 0.5 * h * k2);
        const Eigen::MatrixXd k4 = rhs(P - h * k3);
        Eigen::MatrixXd next = P - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        next = 0.5 * (next + next.transpose()).eval();

        const double size = next.cwiseAbs().maxCoeff();
        if (!next.allFinite() || !(size <= kBlowUpThreshold)) {
            BlowUp bu;
            bu.node = step;
            bu.t_node = grid.t(step);
            // Zero of the line through 1/|Pi| at the last two accepted nodes.
            const double inv0 = 1.0 / P.cwiseAbs().maxCoeff();
            const double inv1 = 1.0 / sol.Pi[std::min(step + 2, n)].cwiseAbs().maxCoeff();
            const double slope = (inv1 - inv0) / h;
            bu.t_extrapolated = slope > 0.0 ? grid.t(step + 1) - inv0 / slope : bu.t_node;
            sol.blow_up = bu;
            return sol;
        }
        P = std::move(next);
        sol.Pi[step] = P;
        const double trace_here = 0.5 * (diffusion * P).trace();
        sol.rho[step] = sol.rho[step + 1] + 0.5 * h * (trace_here + trace_next);
        trace_next = trace_here;
    }
    return sol;
}

} // namespace

RiccatiSolution solve_matrix_riccati(const LQMatrixModel& model, const RiskParams& risk, const TimeGrid& grid) {
    for (const auto* mat : {&model.A, &model.B, &model.Q, &model.R, &model.QT, &model.Sigma}) {
        if (!mat->allFinite()) throw Error(ErrorCode::NonFiniteInput, "model contains non-finite entries");
    }
    if (!std::isfinite(risk.alpha) || risk.alpha < 0.0) {
        throw Error(ErrorCode::InvalidInput, "alpha must be finite and >= 0");
    }
    const Eigen::MatrixXd a = model.diffusion_matrix();
    const Eigen::MatrixXd quad = model.B * model.R.llt().solve(model.B.transpose()) - risk.alpha * a;
    const Eigen::MatrixXd& A = model.A;
    const Eigen::MatrixXd& Q = model.Q;
    return integrate_backward(model.QT, a, grid, [&](const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
        return -P * A - A.transpose() * P + P * quad * P - Q;
    });
}

RiccatiSolution solve_scalar_riccati(const LQScalarModel& model, const RiskParams& risk, const TimeGrid& grid,
                                     double gamma) {
    for (double v : {model.a, model.b, model.sigma, model.r, model.q, model.qT, gamma}) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "model contains non-finite entries");
    }
    if (!std::isfinite(risk.alpha) || risk.alpha < 0.0) {
        throw Error(ErrorCode::InvalidInput, "alpha must be finite and >= 0");
    }
    const double s2 = model.sigma * model.sigma;
    const double quad = model.b * model.b / model.r - risk.alpha * s2;
    const double constant = -model.q - risk.alpha * risk.beta * s2 * gamma;
    const double a = model.a;
    return integrate_backward(Eigen::MatrixXd::Constant(1, 1, model.qT), Eigen::MatrixXd::Constant(1, 1, s2), grid,
                              [=](const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
                                  const double p = P(0, 0);
                                  return Eigen::MatrixXd::Constant(1, 1, -2.0 * a * p + quad * p * p + constant);
                              });
}

namespace {

void require_finite_path(std::span<const double> pi, const TimeGrid& grid) {
    if (pi.size() != grid.n_nodes()) {
        throw Error(ErrorCode::InvalidInput, "pi samples do not match the time grid");
    }
    for (double v : pi) {
        if (!std::isfinite(v)) throw Error(ErrorCode::BlowUpInput, "pi path contains a blow-up");
    }
}

} // namespace

std::vector<double> solve_omega(std::span<const double> pi, const LQScalarModel& model, const TimeGrid& grid) {
    require_finite_path(pi, grid);
    const double gain = model.b * model.b / model.r;
    const double h = grid.dt();
    std::vector<double> omega(grid.n_nodes());
    double integral = 0.0;
    omega.back() = 1.0;
    for (std::size_t k = grid.n_steps(); k-- > 0;) {
        integral += 0.5 * h * ((model.a - gain * pi[k]) + (model.a - gain * pi[k + 1]));
        omega[k] = std::exp(integral);
    }
    return omega;
}

void attach_omega(RiccatiSolution& solution, const LQScalarModel& model) {
    solution.require_usable();
    solution.omega = solve_omega(solution.pi_path(), model, solution.grid);
}

std::vector<double> solve_mean_ode(std::span<const double> pi, const LQScalarModel& model, const TimeGrid& grid,
                                   double x0_mean, const std::optional<MeanOdeCorrection>& correction) {
    require_finite_path(pi, grid);
    if (correction && (correction->omega.size() != grid.n_nodes() || correction->chi_ratio.size() != grid.n_nodes())) {
        throw Error(ErrorCode::InvalidInput, "mean ODE correction samples do not match the time grid");
    }
    const double gain = model.b * model.b / model.r;
    const double h = grid.dt();

    // Forcing term -beta (b^2/r) omega(t) c(t) sampled at nodes.
    std::vector<double> forcing(grid.n_nodes(), 0.0);
    if (correction) {
        for (std::size_t k = 0; k < forcing.size(); ++k) {
            forcing[k] = -correction->beta * gain * correction->omega[k] * correction->chi_ratio[k];
        }
    }

    std::vector<double> y(grid.n_nodes());
    y[0] = x0_mean;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        const double c0 = model.a - gain * pi[k];
        const double cm = model.a - gain * grid.midpoint(pi, k);
        const double c1 = model.a - gain * pi[k + 1];
        const double f0 = forcing[k];
        const double fm = correction ? grid.midpoint(forcing, k) : 0.0;
        const double f1 = forcing[k + 1];
        const double k1 = c0 * y[k] + f0;
        const double k2 = cm * (y[k] + 0.5 * h * k1) + fm;
        const double k3 = cm * (y[k] + 0.5 * h * k2) + fm;
        const double k4 = c1 * (y[k] + h * k3) + f1;
        y[k + 1] = y[k] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

} // namespace riskmf
