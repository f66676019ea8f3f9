#include "riskmf/error.hpp"
#include "riskmf/io.hpp"
#include "riskmf/validation.hpp"

#include <doctest.h>

#include <cmath>

using namespace riskmf;

namespace {

const LQScalarModel kBenchmark{0, 0, 1, 1, 0, 1};
const LQScalarModel kHalfNoise{0, 1, 0.5, 1, 0, 1};

Trajectory optimal_paths(const LQScalarModel& m, const RiskParams& risk, const RiccatiSolution& ric, std::size_t n,
                         std::uint64_t seed, std::size_t stride) {
    const auto pol = optimal_feedback(ric, m, risk, ChiCorrection::None);
    return simulate_particles(m, pol, InitialLaw::dirac(1.0), ric.grid, n, seed, SimulationOptions{stride, true});
}

} // namespace

TEST_SUITE("validation") {

TEST_CASE("check reports") {
    const auto ok = CheckReport::make("x", 1.0, 1.0, "");
    CHECK(ok.passed);
    CHECK_FALSE(CheckReport::make("x", 1.0000001, 1.0, "").passed);
    CHECK_FALSE(CheckReport::make("x", std::nan(""), 1.0, "").passed);
    const auto na = CheckReport::not_applicable("x", "why");
    CHECK_FALSE(na.applicable);
    const auto j = to_json(ok);
    CHECK(j.at("name") == "x");
    CHECK(j.at("passed") == true);
}

TEST_CASE("martingale: noiseless constant path gives zero") {
    const LQScalarModel m{0, 0, 0, 1, 0, 1};
    const RiskParams risk{1.0, 0};
    const auto ric = solve_scalar_riccati(m, risk, TimeGrid(1.0, 100));
    const auto traj = optimal_paths(m, risk, ric, 50, 1, 10);
    const auto rep = martingale_check(traj, ric, risk);
    CHECK(rep.statistic == 0.0);
    CHECK(rep.passed);
}

TEST_CASE("martingale: controlled scenario passes and zeroed rho fails") {
    const RiskParams risk{0.5, 0};
    const auto ric = solve_scalar_riccati(kHalfNoise, risk, TimeGrid(1.0, 200));
    const auto traj = optimal_paths(kHalfNoise, risk, ric, 20000, 1, 20);
    const auto rep = martingale_check(traj, ric, risk);
    MESSAGE(rep.statistic << " " << rep.detail);
    CHECK(rep.passed);

    auto broken = ric;
    std::fill(broken.rho.begin(), broken.rho.end(), 0.0);
    const auto bad = martingale_check(traj, broken, risk);
    MESSAGE(bad.statistic);
    CHECK_FALSE(bad.passed);
}

TEST_CASE("martingale: preconditions") {
    const RiskParams risk{0.5, 0.1};
    const auto ric = solve_scalar_riccati(kHalfNoise, risk, TimeGrid(1.0, 20));
    const auto traj = optimal_paths(kHalfNoise, risk, ric, 10, 1, 1);
    CHECK_THROWS_AS((void)martingale_check(traj, ric, risk), Error);
    const auto blown = solve_scalar_riccati(kBenchmark, RiskParams{1.0, 0}, TimeGrid(2.0, 20));
    CHECK_THROWS_AS((void)martingale_check(traj, blown, RiskParams{1.0, 0}), Error);
}

TEST_CASE("chi positivity") {
    std::vector<Scenario> scenarios(3);
    scenarios[0].model = kBenchmark;
    scenarios[0].risk = {1.0, 0};
    scenarios[0].grid = TimeGrid(0.5, 100);
    scenarios[1].model = kHalfNoise;
    scenarios[1].risk = {1e-8, 0};
    scenarios[2].model = kHalfNoise;
    scenarios[2].risk = {0.5, 0.1};
    for (auto& s : scenarios) {
        s.n_x = 100;
        s.n_z = 40;
        s.x_bounds = {-6, 8};
    }
    const auto rep = chi_positivity_check(scenarios, ChiPositivityOptions{500, 100, true, true});
    CHECK(rep.passed);
    CHECK(rep.statistic == 0.0);

    // small alpha: chi(0) ~ alpha
    const auto ric = solve_scalar_riccati(kHalfNoise, RiskParams{1e-8, 0}, TimeGrid(1.0, 50));
    const auto traj = optimal_paths(kHalfNoise, RiskParams{1e-8, 0}, ric, 200, 1, 50);
    const double chi0 = estimate_chi0(traj, kHalfNoise, RiskParams{1e-8, 0});
    CHECK(chi0 > 0.0);
    CHECK(chi0 == doctest::Approx(1e-8).epsilon(1e-6));
}

TEST_CASE("chi positivity guard catches overflow without the max shift") {
    std::vector<Scenario> scenarios(1);
    scenarios[0].model = LQScalarModel{0, 1, 1, 1, 0, 1};
    scenarios[0].risk = {0.5, 0};
    scenarios[0].init = InitialLaw::dirac(60.0);  // alpha x^2 / 2 ~ 900 > log(DBL_MAX)
    scenarios[0].grid = TimeGrid(0.1, 20);
    scenarios[0].n_x = 100;
    scenarios[0].n_z = 20;
    scenarios[0].x_bounds = {40, 80};
    const auto guarded = chi_positivity_check(scenarios, ChiPositivityOptions{50, 20, false, true});
    CHECK(guarded.passed);
    const auto raw = chi_positivity_check(scenarios, ChiPositivityOptions{50, 20, false, false});
    CHECK_FALSE(raw.passed);
    CHECK(raw.statistic >= 1.0);
}

TEST_CASE("alpha limit: deterministic costs auto-pass") {
    const std::vector<double> costs(100, 0.7);
    const std::vector<double> alphas{0.2, 0.1, 0.05};
    const auto rep = alpha_limit_check(costs, alphas);
    CHECK(rep.passed);
    CHECK(rep.statistic == 0.0);

    const LQScalarModel m{0.3, 0, 0, 1, 0.5, 1};
    const TimeGrid grid(1.0, 50);
    const auto path_rep =
        alpha_limit_check(to_generic(m, 0.0), Policy::zero(grid), InitialLaw::dirac(1.0), grid, alphas, 100, 1);
    CHECK(path_rep.passed);
}

TEST_CASE("alpha limit: Gaussian benchmark under zero control") {
    const TimeGrid grid(0.5, 100);
    const std::vector<double> alphas{0.2, 0.1, 0.05};
    const auto rep = alpha_limit_check(to_generic(kBenchmark, 0.0), Policy::zero(grid), InitialLaw::dirac(1.0), grid,
                                       alphas, 20000, 1);
    MESSAGE(rep.detail);
    CHECK(rep.passed);
    // cumulant oracle on a fixed sample: e(alpha) ~ alpha Var/2
    const auto traj = simulate_particles(kBenchmark, Policy::zero(grid), InitialLaw::dirac(1.0), grid, 20000, 1,
                                         SimulationOptions{100, true});
    const auto costs = terminal_costs(traj, kBenchmark, 0.0);
    double mean = 0.0, sq = 0.0;
    for (const double c : costs) mean += c;
    mean /= static_cast<double>(costs.size());
    for (const double c : costs) sq += (c - mean) * (c - mean);
    const double var = sq / static_cast<double>(costs.size());
    const double e = exponential_moment(costs, 0.05).certainty_equivalent - mean;
    CHECK(e == doctest::Approx(0.025 * var).epsilon(0.15));
}

TEST_CASE("alpha limit: input errors") {
    const std::vector<double> costs{1.0, 2.0};
    CHECK_THROWS_AS((void)alpha_limit_check(costs, std::vector<double>{0.1, 0.2}), Error);
    CHECK_THROWS_AS((void)alpha_limit_check(costs, std::vector<double>{0.1, 0.1}), Error);
    CHECK_THROWS_AS((void)alpha_limit_check(costs, std::vector<double>{0.1, -0.05}), Error);
    CHECK_THROWS_AS((void)alpha_limit_check(costs, std::vector<double>{0.1}), Error);
}

TEST_CASE("three-way check: blow-up is not applicable") {
    Scenario sc;
    sc.model = kBenchmark;
    sc.risk = {1.0, 0};
    sc.grid = TimeGrid(2.0, 200);
    const auto res = three_way_value_check(sc);
    CHECK_FALSE(res.check.applicable);
    CHECK(res.report.blow_up);
    CHECK_FALSE(res.report.value_closed_form.has_value());
    const auto j = to_json(res.report);
    CHECK(j.at("blow_up") == true);
    CHECK(j.at("value_mc").is_null());
}

TEST_CASE("three-way check on a small controlled scenario") {
    Scenario sc;
    sc.id = "small";
    sc.model = kHalfNoise;
    sc.risk = {0.5, 0.1};
    sc.grid = TimeGrid(1.0, 200);
    sc.n_particles = 20000;
    sc.n_x = 200;
    sc.n_z = 100;
    sc.x_bounds = {-3, 4};
    const auto res = three_way_value_check(sc);
    MESSAGE(res.check.detail);
    CHECK(res.check.applicable);
    CHECK(res.check.passed);
    CHECK(res.report.certainty_equivalent.has_value());
    CHECK(*res.report.certainty_equivalent == doctest::Approx(std::log(*res.report.value_closed_form) / 0.5));
}

TEST_CASE("reports are deterministic") {
    Scenario sc;
    sc.model = kHalfNoise;
    sc.risk = {0.5, 0.0};
    sc.grid = TimeGrid(1.0, 50);
    sc.n_particles = 2000;
    sc.n_x = 80;
    sc.n_z = 30;
    sc.x_bounds = {-3, 4};
    CHECK(to_json(value_report(sc)).dump() == to_json(value_report(sc)).dump());
}

} // TEST_SUITE
