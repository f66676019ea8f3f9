/**
 * @file particles.hpp
 * @brief Interacting-particle simulation of the augmented (x, z) system
 *
 *   dx = g(x, m, v) dt + sigma(x) dw,    dz = f(x, m, v) dt,   z(0) = 0,
 *
 * where m enters through a scalar statistic of the empirical law recomputed
 * before every step. The risk-sensitive cost is E exp(alpha (z(T) + h(x(T), m(T)))).
 */

#pragma once

#include "riskmf/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace riskmf {

struct SeedLineage {
    std::uint64_t master_seed = 0;
    std::uint64_t first_stream = 0;  ///< particle i draws from stream first_stream + i
};

struct ParticleEnsemble {
    std::size_t node = 0;
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> z;
    SeedLineage lineage;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

struct NodeSummary {
    double t = 0.0;
    double mean_x = 0.0;
    double var_x = 0.0;
    double mean_z = 0.0;
};

struct Trajectory {
    TimeGrid grid{1.0, 2};
    std::vector<NodeSummary> summary;        ///< every node
    std::vector<ParticleEnsemble> snapshots;  ///< node 0, every stride-th node, and node n

    [[nodiscard]] const ParticleEnsemble& terminal() const;
    [[nodiscard]] std::size_t n_particles() const { return snapshots.empty() ? 0 : snapshots.front().size(); }
};

struct SimulationOptions {
    std::size_t snapshot_stride = 1;
    /// When false the law statistic is not computed and 0 is passed instead.
    bool couple_law = true;
};

[[nodiscard]] Trajectory simulate_particles(const GenericModel& model, const Policy& policy, const InitialLaw& init,
                                            const TimeGrid& grid, std::size_t n_particles, std::uint64_t seed,
                                            const SimulationOptions& options = {});

/// Same scheme specialised to g = ax + bv, f = (qx^2 + rv^2)/2, constant sigma;
/// the statistic handed to the policy is the empirical mean.
[[nodiscard]] Trajectory simulate_particles(const LQScalarModel& model, const Policy& policy, const InitialLaw& init,
                                            const TimeGrid& grid, std::size_t n_particles, std::uint64_t seed,
                                            const SimulationOptions& options = {});

struct CostEstimate {
    double j_alpha = 1.0;
    double log_j_alpha = 0.0;
    double certainty_equivalent = 0.0;
    double std_error = 0.0;  ///< of j_alpha
    std::size_t n = 0;
};

/// Per-particle terminal costs z_i(T) + h(x_i(T), stat(T)).
[[nodiscard]] std::vector<double> terminal_costs(const Trajectory& traj, const GenericModel& model);
[[nodiscard]] std::vector<double> terminal_costs(const Trajectory& traj, const LQScalarModel& model, double beta);

/// Estimates E exp(alpha C) from samples of C. With max_shift the exponentials
/// are evaluated relative to the largest exponent; disabling it exists only to
/// exercise overflow guards.
[[nodiscard]] CostEstimate exponential_moment(std::span<const double> costs, double alpha, bool max_shift = true);

[[nodiscard]] CostEstimate estimate_risk_sensitive_cost(const Trajectory& traj, const GenericModel& model,
                                                        const RiskParams& risk);
[[nodiscard]] CostEstimate estimate_risk_sensitive_cost(const Trajectory& traj, const LQScalarModel& model,
                                                        const RiskParams& risk);

/// chi(0) = alpha E[exp(alpha (z(T) + h))].
[[nodiscard]] double estimate_chi0(const Trajectory& traj, const GenericModel& model, const RiskParams& risk);
[[nodiscard]] double estimate_chi0(const Trajectory& traj, const LQScalarModel& model, const RiskParams& risk);

/// chi(0) E[chi^-1(t)] at every node under the zeroth-order rule E[chi^-1(t)] ~ 1/chi(0).
/// By Jensen the true value is >= 1, so this path is a lower bound.
[[nodiscard]] std::vector<double> estimate_chi_inverse_path(const Trajectory& traj);

} // namespace riskmf
