#include "riskmf/particles.hpp"

#include "riskmf/error.hpp"
#include "riskmf/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace riskmf {

const ParticleEnsemble& Trajectory::terminal() const {
    if (snapshots.empty() || snapshots.back().node != grid.n_steps()) {
        throw Error(ErrorCode::EmptyTrajectory, "trajectory does not reach the horizon");
    }
    return snapshots.back();
}

namespace {

std::vector<double> initial_positions(const InitialLaw& init, std::vector<ParticleStream>& streams) {
    const auto n = streams.size();
    std::vector<double> x(n);
    std::visit(
        [&](const auto& law) {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, GaussianLaw>) {
                const double sd = std::sqrt(law.variance);
                for (std::size_t i = 0; i < n; ++i) x[i] = law.mean + sd * streams[i].normal();
            } else if constexpr (std::is_same_v<L, DiracLaw>) {
                std::fill(x.begin(), x.end(), law.x0);
            } else {
                for (std::size_t i = 0; i < n; ++i) x[i] = law.samples[i % law.samples.size()];
            }
        },
        init.kind);
    return x;
}

NodeSummary summarize(double t, std::span<const double> x, std::span<const double> z) {
    const double n = static_cast<double>(x.size());
    NodeSummary s;
    s.t = t;
    s.mean_x = pairwise_sum(x) / n;
    s.mean_z = pairwise_sum(z) / n;
    std::vector<double> dev(x.size());
    std::transform(x.begin(), x.end(), dev.begin(), [m = s.mean_x](double v) { return (v - m) * (v - m); });
    s.var_x = pairwise_sum(dev) / n;
    return s;
}

/// Euler-Maruyama on x, left-endpoint rule on z, explicit law coupling.
template <typename Step, typename Stat>
Trajectory simulate_core(const Policy& policy, const InitialLaw& init, const TimeGrid& grid,
                         std::size_t n_particles, std::uint64_t seed, const SimulationOptions& options, Stat stat_of,
                         Step step) {
    if (n_particles < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 particles");
    if (options.snapshot_stride == 0) throw Error(ErrorCode::InvalidInput, "snapshot stride must be >= 1");
    policy.check_against(grid);

    std::vector<ParticleStream> streams(n_particles);
    for (std::size_t i = 0; i < n_particles; ++i) streams[i] = ParticleStream(seed, i);

    ParticleEnsemble ens;
    ens.lineage = {seed, 0};
    ens.x = initial_positions(init, streams);
    ens.z.assign(n_particles, 0.0);

    Trajectory traj;
    traj.grid = grid;
    traj.summary.reserve(grid.n_nodes());
    traj.summary.push_back(summarize(0.0, ens.x, ens.z));
    traj.snapshots.push_back(ens);

    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        const double t = grid.t(k);
        const double stat = options.couple_law ? stat_of(std::span<const double>(ens.x)) : 0.0;
        for (std::size_t i = 0; i < n_particles; ++i) {
            const double v = policy.control(k, t, ens.x[i], ens.z[i], stat);
            step(ens.x[i], ens.z[i], stat, v, dt, sqrt_dt * streams[i].normal());
            if (!std::isfinite(ens.x[i]) || !std::isfinite(ens.z[i])) {
                throw Error(ErrorCode::NonFiniteState, "particle " + std::to_string(i) +
                                                           " became non-finite at step " + std::to_string(k + 1));
            }
        }
        ens.node = k + 1;
        ens.t = grid.t(k + 1);
        traj.summary.push_back(summarize(ens.t, ens.x, ens.z));
        if ((k + 1) % options.snapshot_stride == 0 || k + 1 == grid.n_steps()) traj.snapshots.push_back(ens);
    }
    return traj;
}

double empirical_mean(std::span<const double> x) { return pairwise_sum(x) / static_cast<double>(x.size()); }

} // namespace

Trajectory simulate_particles(const GenericModel& model, const Policy& policy, const InitialLaw& init,
                              const TimeGrid& grid, std::size_t n_particles, std::uint64_t seed,
                              const SimulationOptions& options) {
    const auto stat_of = [&model](std::span<const double> x) { return model.law_stat ? model.law_stat(x) : 0.0; };
    return simulate_core(policy, init, grid, n_particles, seed, options, stat_of,
                         [&model](double& x, double& z, double stat, double v, double dt, double dw) {
                             const double drift = model.g(x, stat, v);
                             const double diffusion = model.sigma(x);
                             z += model.f(x, stat, v) * dt;
                             x += drift * dt + diffusion * dw;
                         });
}

Trajectory simulate_particles(const LQScalarModel& m, const Policy& policy, const InitialLaw& init,
                              const TimeGrid& grid, std::size_t n_particles, std::uint64_t seed,
                              const SimulationOptions& options) {
    return simulate_core(policy, init, grid, n_particles, seed, options, empirical_mean,
                         [&m](double& x, double& z, double, double v, double dt, double dw) {
                             z += 0.5 * (m.q * x * x + m.r * v * v) * dt;
                             x += (m.a * x + m.b * v) * dt + m.sigma * dw;
                         });
}

std::vector<double> terminal_costs(const Trajectory& traj, const GenericModel& model) {
    const auto& fin = traj.terminal();
    const double stat = model.law_stat ? model.law_stat(fin.x) : 0.0;
    std::vector<double> out(fin.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fin.z[i] + model.h(fin.x[i], stat);
    return out;
}

std::vector<double> terminal_costs(const Trajectory& traj, const LQScalarModel& model, double beta) {
    const auto& fin = traj.terminal();
    const double stat = empirical_mean(fin.x);
    std::vector<double> out(fin.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = fin.z[i] + 0.5 * model.qT * fin.x[i] * fin.x[i] + beta * stat;
    }
    return out;
}

CostEstimate exponential_moment(std::span<const double> costs, double alpha, bool max_shift) {
    if (costs.empty()) throw Error(ErrorCode::EmptyTrajectory, "no samples to average");
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "alpha must be > 0");
    const auto n = costs.size();
    const double dn = static_cast<double>(n);

    double shift = 0.0;
    if (max_shift) {
        shift = alpha * costs[0];
        for (double c : costs) shift = std::max(shift, alpha * c);
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(alpha * costs[i] - shift);
    const double mean_w = pairwise_sum(w) / dn;
    for (auto& wi : w) wi = (wi - mean_w) * (wi - mean_w);
    const double var_w = pairwise_sum(w) / (dn - 1.0 > 0.0 ? dn - 1.0 : 1.0);

    CostEstimate out;
    out.n = n;
    out.log_j_alpha = shift + std::log(mean_w);
    out.j_alpha = std::exp(out.log_j_alpha);
    out.certainty_equivalent = out.log_j_alpha / alpha;
    out.std_error = std::exp(shift) * std::sqrt(var_w / dn);
    return out;
}

CostEstimate estimate_risk_sensitive_cost(const Trajectory& traj, const GenericModel& model, const RiskParams& risk) {
    return exponential_moment(terminal_costs(traj, model), risk.alpha);
}

CostEstimate estimate_risk_sensitive_cost(const Trajectory& traj, const LQScalarModel& model, const RiskParams& risk) {
    return exponential_moment(terminal_costs(traj, model, risk.beta), risk.alpha);
}

double estimate_chi0(const Trajectory& traj, const GenericModel& model, const RiskParams& risk) {
    return risk.alpha * estimate_risk_sensitive_cost(traj, model, risk).j_alpha;
}

double estimate_chi0(const Trajectory& traj, const LQScalarModel& model, const RiskParams& risk) {
    return risk.alpha * estimate_risk_sensitive_cost(traj, model, risk).j_alpha;
}

std::vector<double> estimate_chi_inverse_path(const Trajectory& traj) {
    return std::vector<double>(traj.grid.n_nodes(), 1.0);
}

} // namespace riskmf
