#include "riskmf/validation.hpp"

#include "riskmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace riskmf {

CheckReport CheckReport::make(std::string name, double statistic, double threshold, std::string detail) {
    CheckReport r;
    r.name = std::move(name);
    r.statistic = statistic;
    r.threshold = threshold;
    r.passed = statistic <= threshold;
    r.detail = std::move(detail);
    return r;
}

CheckReport CheckReport::not_applicable(std::string name, std::string detail) {
    CheckReport r = make(std::move(name), 0.0, 0.0, std::move(detail));
    r.applicable = false;
    return r;
}

CheckReport martingale_check(const Trajectory& traj, const RiccatiSolution& riccati, const RiskParams& risk) {
    riccati.require_usable();
    if (risk.beta != 0.0) throw Error(ErrorCode::InvalidInput, "martingale check needs beta = 0");
    if (!(riccati.grid == traj.grid)) throw Error(ErrorCode::InvalidInput, "Riccati and trajectory grids differ");
    if (traj.snapshots.size() < 2) throw Error(ErrorCode::EmptyTrajectory, "need at least two snapshots");

    std::vector<double> exponents;
    const auto mean_u0 = [&](const ParticleEnsemble& snap) {
        const double p = riccati.pi(snap.node);
        const double rho = riccati.rho[snap.node];
        exponents.resize(snap.size());
        // exponential_moment multiplies by alpha, so pass the bracket itself.
        for (std::size_t i = 0; i < snap.size(); ++i) exponents[i] = snap.z[i] + 0.5 * p * snap.x[i] * snap.x[i] + rho;
        return exponential_moment(exponents, risk.alpha);
    };

    const auto base = mean_u0(traj.snapshots.front());
    double worst = 0.0;
    std::size_t worst_node = 0;
    for (std::size_t s = 1; s < traj.snapshots.size(); ++s) {
        const auto est = mean_u0(traj.snapshots[s]);
        const double gap = std::abs(est.j_alpha - base.j_alpha);
        double score = 0.0;
        if (gap > 0.0) {
            score = est.std_error > 0.0 ? gap / (3.0 * est.std_error) : std::numeric_limits<double>::infinity();
        }
        if (score > worst) {
            worst = score;
            worst_node = traj.snapshots[s].node;
        }
    }
    std::ostringstream detail;
    detail << "E u0(t=0) = " << base.j_alpha << ", worst node " << worst_node << " of " << traj.grid.n_steps();
    return CheckReport::make("martingale", worst, 1.0, detail.str());
}

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

std::size_t chi_field_violations(const GridDensity2D& density, const LQScalarModel& model, const RiskParams& risk,
                                 bool max_shift) {
    const double mean = density.mean_x();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < density.x.n; ++i) {
        const double xi = density.x.center(i);
        for (std::size_t j = 0; j < density.z.n; ++j) {
            const double exponent = risk.alpha * (density.z.node(j) + 0.5 * model.qT * xi * xi + risk.beta * mean);
            if (max_shift) {
                // log chi = log alpha + exponent
                if (!std::isfinite(std::log(risk.alpha) + exponent)) ++bad;
            } else if (!positive_finite(risk.alpha * std::exp(exponent))) {
                ++bad;
            }
        }
    }
    return bad;
}

} // namespace

CheckReport chi_positivity_check(std::span<const Scenario> scenarios, const ChiPositivityOptions& options) {
    std::size_t violations = 0;
    std::size_t evaluated = 0;
    std::ostringstream detail;
    for (const auto& sc : scenarios) {
        const std::size_t steps = std::min(sc.grid.n_steps(), options.max_steps);
        const TimeGrid grid(sc.grid.horizon(), std::max<std::size_t>(steps, 2));
        const auto riccati = solve_scalar_riccati(sc.model, sc.risk, grid);
        const Policy policy =
            riccati.usable() ? optimal_feedback(riccati, sc.model, sc.risk, ChiCorrection::None) : Policy::zero(grid);
        const auto traj = simulate_particles(sc.model, policy, sc.init, grid, options.n_particles, sc.seed,
                                             SimulationOptions{grid.n_steps(), true});
        const auto costs = terminal_costs(traj, sc.model, sc.risk.beta);
        const auto est = exponential_moment(costs, sc.risk.alpha, options.max_shift);
        ++evaluated;
        // With the shift, chi(0) may exceed the double range while log chi(0) stays finite.
        const bool ok = options.max_shift ? std::isfinite(std::log(sc.risk.alpha) + est.log_j_alpha) && est.j_alpha > 0.0
                                          : positive_finite(sc.risk.alpha * est.j_alpha);
        if (!ok) {
            ++violations;
            detail << sc.id << ": log chi0 = " << std::log(sc.risk.alpha) + est.log_j_alpha << "; ";
        }
        if (options.include_fpk && riccati.usable()) {
            const auto fpk_steps = fpk_stable_steps(sc.model, riccati, sc.n_x, sc.n_z, sc.x_bounds, sc.fpk);
            const auto density = solve_fpk_xz(sc.model, riccati, sc.init, TimeGrid(grid.horizon(), fpk_steps),
                                              sc.n_x, sc.n_z, sc.x_bounds, sc.fpk);
            const auto bad = chi_field_violations(density, sc.model, sc.risk, options.max_shift);
            if (bad > 0) {
                violations += bad;
                detail << sc.id << ": " << bad << " chi field cells; ";
            }
        }
    }
    detail << evaluated << " scenarios evaluated";
    return CheckReport::make("chi_positivity", static_cast<double>(violations), 0.0, detail.str());
}

CheckReport alpha_limit_check(std::span<const double> costs, std::span<const double> alphas) {
    if (alphas.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least two alphas");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw Error(ErrorCode::InvalidInput, "alphas must be positive");
        if (i > 0 && !(alphas[i] < alphas[i - 1])) throw Error(ErrorCode::InvalidInput, "alphas must be decreasing");
    }
    const double j0 = pairwise_sum(costs) / static_cast<double>(costs.size());
    const double zero_tol = 1e-12 * (1.0 + std::abs(j0));

    std::vector<double> errors;
    for (double a : alphas) errors.push_back(std::abs(exponential_moment(costs, a).certainty_equivalent - j0));

    std::ostringstream detail;
    detail << "J0 = " << j0 << "; e(alpha) =";
    for (double e : errors) detail << ' ' << e;
    if (std::all_of(errors.begin(), errors.end(), [zero_tol](double e) { return e <= zero_tol; })) {
        detail << " (deterministic costs)";
        return CheckReport::make("alpha_limit", 0.0, 0.5, detail.str());
    }
    double worst = 0.0;
    detail << "; ratios =";
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double ratio = errors[i] > 0.0 ? errors[i - 1] / errors[i] : std::numeric_limits<double>::infinity();
        detail << ' ' << ratio;
        worst = std::max(worst, std::abs(ratio - 2.0));
    }
    return CheckReport::make("alpha_limit", worst, 0.5, detail.str());
}

CheckReport alpha_limit_check(const GenericModel& model, const Policy& policy, const InitialLaw& init,
                              const TimeGrid& grid, std::span<const double> alphas, std::size_t n_particles,
                              std::uint64_t seed) {
    const auto traj =
        simulate_particles(model, policy, init, grid, n_particles, seed, SimulationOptions{grid.n_steps(), true});
    return alpha_limit_check(terminal_costs(traj, model), alphas);
}

ValueReport value_report(const Scenario& sc, RouteSelection routes) {
    ValueReport rep;
    rep.scenario_id = sc.id;
    rep.alpha = sc.risk.alpha;
    rep.beta = sc.risk.beta;

    const auto riccati = solve_scalar_riccati(sc.model, sc.risk, sc.grid);
    if (!riccati.usable()) {
        rep.blow_up = true;
        return rep;
    }

    if (routes.closed_form) {
        const auto approx = approx_value_small_beta(sc.model, sc.risk, sc.init, sc.grid);
        rep.value_closed_form = approx.value;
        rep.residual_beta2 = approx.residual_beta2;
    }
    std::optional<CostEstimate> mc;
    if (routes.mc) {
        const auto policy = sc.optimal_policy ? optimal_feedback(riccati, sc.model, sc.risk, ChiCorrection::None)
                                              : Policy::zero(sc.grid);
        const auto traj = simulate_particles(sc.model, policy, sc.init, sc.grid, sc.n_particles, sc.seed,
                                             SimulationOptions{sc.grid.n_steps(), true});
        mc = estimate_risk_sensitive_cost(traj, sc.model, sc.risk);
        rep.value_mc = mc->j_alpha;
        rep.mc_std_error = mc->std_error;
    }
    if (routes.pde) {
        const auto steps = fpk_stable_steps(sc.model, riccati, sc.n_x, sc.n_z, sc.x_bounds, sc.fpk);
        const auto density = solve_fpk_xz(sc.model, riccati, sc.init, TimeGrid(sc.grid.horizon(), steps), sc.n_x,
                                          sc.n_z, sc.x_bounds, sc.fpk);
        rep.value_pde = terminal_exponential_moment(density, sc.model, sc.risk).value;
    }
    if (rep.value_closed_form) {
        rep.certainty_equivalent = std::log(*rep.value_closed_form) / sc.risk.alpha;
    } else if (mc) {
        rep.certainty_equivalent = mc->certainty_equivalent;
    } else if (rep.value_pde) {
        rep.certainty_equivalent = std::log(*rep.value_pde) / sc.risk.alpha;
    }
    return rep;
}

ThreeWayResult three_way_value_check(const Scenario& sc) {
    ThreeWayResult out;
    Scenario optimal = sc;
    optimal.optimal_policy = true;  // the closed form is the value of the optimal feedback
    out.report = value_report(optimal);
    const auto& rep = out.report;
    if (rep.blow_up) {
        out.check = CheckReport::not_applicable("three_way_value", "Riccati blow-up: value is infinite");
        return out;
    }
    const double values[3] = {*rep.value_closed_form, *rep.value_mc, *rep.value_pde};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            worst = std::max(worst, std::abs(values[i] - values[j]) / std::min(values[i], values[j]));
        }
    }
    const double threshold = std::max(0.05, 3.0 * *rep.mc_std_error / *rep.value_mc);
    std::ostringstream detail;
    detail.precision(10);
    detail << "closed form " << values[0] << ", mc " << values[1] << " +- " << *rep.mc_std_error << ", pde "
           << values[2];
    out.check = CheckReport::make("three_way_value", worst, threshold, detail.str());
    return out;
}

} // namespace riskmf
