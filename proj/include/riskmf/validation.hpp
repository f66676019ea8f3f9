/**
 * @file validation.hpp
 * @brief Structural checks: martingale property, chi positivity, alpha -> 0, route agreement
 *
 * Every check returns a CheckReport with passed == (statistic <= threshold).
 */

#pragma once

#include "riskmf/fpk.hpp"
#include "riskmf/lq_value.hpp"
#include "riskmf/model.hpp"
#include "riskmf/particles.hpp"
#include "riskmf/riccati.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace riskmf {

struct CheckReport {
    std::string name;
    bool passed = true;
    double statistic = 0.0;
    double threshold = 0.0;
    std::string detail;
    bool applicable = true;

    static CheckReport make(std::string name, double statistic, double threshold, std::string detail);
    static CheckReport not_applicable(std::string name, std::string detail);
};

/// A scalar LQ scenario with everything needed by the three numerical routes.
struct Scenario {
    std::string id = "scenario";
    LQScalarModel model;
    RiskParams risk;
    InitialLaw init = InitialLaw::dirac(1.0);
    TimeGrid grid{1.0, 1000};
    std::size_t n_particles = 100000;
    std::uint64_t seed = 1;
    std::size_t snapshot_stride = 1;
    bool optimal_policy = true;  ///< particle route; false simulates v = 0
    std::size_t n_x = 400;
    std::size_t n_z = 200;
    Interval x_bounds{-6.0, 8.0};
    FpkOptions fpk;
};

/// Max over snapshot nodes k > 0 of |E u0_k - E u0_0| / (3 SE_k) with
/// u0 = exp(alpha (z + pi(t) x^2/2 + rho(t))). Needs beta = 0.
[[nodiscard]] CheckReport martingale_check(const Trajectory& traj, const RiccatiSolution& riccati,
                                           const RiskParams& risk);

struct ChiPositivityOptions {
    std::size_t n_particles = 2000;
    std::size_t max_steps = 200;      ///< scenario grids are coarsened to at most this many steps
    bool include_fpk = false;
    bool max_shift = true;            ///< false only to exercise the overflow guard
};

/// Counts scenarios whose chi(0) estimate, or any cell of the terminal chi
/// field alpha e^{alpha (z + h)}, is not a positive finite number.
[[nodiscard]] CheckReport chi_positivity_check(std::span<const Scenario> scenarios,
                                               const ChiPositivityOptions& options = {});

/// Same-path certainty equivalents for decreasing alphas; passes if
/// e(alpha)/e(alpha/2) stays in [1.5, 2.5] with e = |CE(alpha) - sample mean cost|.
[[nodiscard]] CheckReport alpha_limit_check(const GenericModel& model, const Policy& policy, const InitialLaw& init,
                                            const TimeGrid& grid, std::span<const double> alphas,
                                            std::size_t n_particles, std::uint64_t seed);

/// Ratio test on a fixed sample of costs (the core of alpha_limit_check).
[[nodiscard]] CheckReport alpha_limit_check(std::span<const double> costs, std::span<const double> alphas);

struct RouteSelection {
    bool closed_form = true;
    bool mc = true;
    bool pde = true;
};

/// Values of the scenario by the selected routes: small-beta closed form,
/// particles under the leading-order optimal feedback (or v = 0), and the (x, z) grid.
/// A Riccati blow-up yields a report with blow_up set and no values.
[[nodiscard]] ValueReport value_report(const Scenario& scenario, RouteSelection routes = {});

struct ThreeWayResult {
    CheckReport check;
    ValueReport report;
};

/// Closed-form (small beta), particle and grid values of the same scenario;
/// passes if pairwise relative gaps are within max(5%, 3 SE / value).
[[nodiscard]] ThreeWayResult three_way_value_check(const Scenario& scenario);

} // namespace riskmf
