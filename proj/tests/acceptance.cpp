// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include "riskmf/hamiltonian.hpp"
#include "riskmf/lq_value.hpp"
#include "riskmf/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace riskmf;

namespace {

constexpr double kGaussianValue = 3.844231028159117;  // e * sqrt(2)
constexpr std::uint64_t kSeed = 1;

const LQScalarModel kBenchmark{0, 0, 1, 1, 0, 1};   // a = b = q = 0, sigma = 1, qT = 1
const LQScalarModel kControlled{0, 1, 0.5, 1, 0, 1}; // a = 0, b = 1, sigma = 0.5, q = 0, qT = 1

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    std::printf("[%s] criterion %2d  %-34s %s\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!passed) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Shared between criteria.
struct Shared {
    Trajectory benchmark_paths;      // criterion 1, N = 2e5, dt = 1e-3
    RiccatiSolution benchmark_riccati;
    Trajectory controlled_paths;     // criterion 4, N = 1e5, dt = 1e-3
    RiccatiSolution controlled_riccati;
    std::vector<Scenario> scenarios; // for the chi sweep
};

void criterion_1(Shared& s) {
    const RiskParams risk{1.0, 0.0};

    Stopwatch ric_clock;
    const auto approx = approx_value_small_beta(kBenchmark, risk, InitialLaw::dirac(1.0), TimeGrid(0.5, 5000));
    const double ric_err = std::abs(approx.value - kGaussianValue);
    const bool ric_ok = ric_err <= 1e-6;

    Stopwatch mc_clock;
    const TimeGrid grid(0.5, 500);
    s.benchmark_riccati = solve_scalar_riccati(kBenchmark, risk, grid);
    s.benchmark_paths = simulate_particles(kBenchmark, Policy::zero(grid), InitialLaw::dirac(1.0), grid, 200000, kSeed,
                                          SimulationOptions{10, true});
    const auto est = estimate_risk_sensitive_cost(s.benchmark_paths, kBenchmark, risk);
    const double mc_time = mc_clock.seconds();
    const double z = (est.j_alpha - kGaussianValue) / est.std_error;
    const bool mc_ok = std::abs(z) <= 3.0 && mc_time <= 30.0;

    Stopwatch pde_clock;
    const Interval bounds{-6, 8};
    const auto steps = fpk_stable_steps(kBenchmark, s.benchmark_riccati, 400, 200, bounds);
    const auto dens = solve_fpk_xz(kBenchmark, s.benchmark_riccati, InitialLaw::dirac(1.0), TimeGrid(0.5, steps), 400,
                                   200, bounds);
    const double pde = terminal_exponential_moment(dens, kBenchmark, risk).value;
    const double pde_time = pde_clock.seconds();
    const double pde_rel = std::abs(pde / kGaussianValue - 1.0);
    const bool pde_ok = pde_rel <= 0.01 && pde_time <= 60.0;

    report(1, "Gaussian closed-form value", ric_ok && mc_ok && pde_ok,
           fmt("riccati %.10f (err %.1e <= 1e-6); mc %.5f +- %.5f (z = %.2f, %.1f s <= 30 s); "
               "fpk %.5f (rel %.2e <= 1e-2, %.1f s <= 60 s)",
               approx.value, ric_err, est.j_alpha, est.std_error, z, mc_time, pde, pde_rel, pde_time));
}

void criterion_2() {
    Stopwatch clock;
    const auto sol = solve_scalar_riccati(kBenchmark, RiskParams{1.0, 0.0}, TimeGrid(2.0, 20000));
    const double elapsed = clock.seconds();
    const bool found = sol.blow_up.has_value();
    const double t_star = found ? sol.blow_up->t_node : std::nan("");
    report(2, "Riccati blow-up time", found && std::abs(t_star - 1.0) <= 0.01 && elapsed < 1.0,
           fmt("t* = %.6f (extrapolated %.6f), |t* - 1| <= 0.01, %.3f s < 1 s", t_star,
               found ? sol.blow_up->t_extrapolated : std::nan(""), elapsed));
}

void criterion_3() {
    Stopwatch clock;
    const TimeGrid grid(0.5, 500);
    const std::vector<double> alphas{0.2, 0.1, 0.05};
    const auto rep = alpha_limit_check(to_generic(kBenchmark, 0.0), Policy::zero(grid), InitialLaw::dirac(1.0), grid,
                                       alphas, 100000, kSeed);
    const double elapsed = clock.seconds();
    report(3, "risk-neutral limit (alpha -> 0)", rep.passed && elapsed < 60.0,
           fmt("%s; max |ratio - 2| = %.3f <= 0.5, %.1f s < 60 s", rep.detail.c_str(), rep.statistic, elapsed));
}

void criterion_4(Shared& s) {
    Stopwatch clock;
    const RiskParams risk{0.5, 0.0};
    const TimeGrid grid(1.0, 1000);
    s.controlled_riccati = solve_scalar_riccati(kControlled, risk, grid);
    const auto gain = std::get<LinearGain>(
        optimal_feedback(s.controlled_riccati, kControlled, risk, ChiCorrection::None).kind).gain;
    const auto run = [&](double c, std::size_t stride) {
        std::vector<double> k(gain);
        for (double& v : k) v *= c;
        return simulate_particles(kControlled, Policy{LinearGain{k}}, InitialLaw::dirac(1.0), grid, 100000, kSeed,
                                  SimulationOptions{stride, true});
    };
    s.controlled_paths = run(1.0, 10);
    const auto base = estimate_risk_sensitive_cost(s.controlled_paths, kControlled, risk);
    const auto up = estimate_risk_sensitive_cost(run(1.05, grid.n_steps()), kControlled, risk);
    const auto down = estimate_risk_sensitive_cost(run(0.95, grid.n_steps()), kControlled, risk);
    const double elapsed = clock.seconds();
    const bool ok = up.j_alpha >= base.j_alpha - base.std_error && down.j_alpha >= base.j_alpha - base.std_error &&
                    elapsed < 60.0;
    report(4, "optimal feedback local optimality", ok,
           fmt("J(k) = %.6f +- %.6f, J(1.05k) = %.6f, J(0.95k) = %.6f, %.1f s < 60 s", base.j_alpha, base.std_error,
               up.j_alpha, down.j_alpha, elapsed));
}

void criterion_5() {
    Stopwatch clock;
    const RiskParams risk{0.5, 0.1};
    const TimeGrid grid(1.0, 1000);
    const auto approx = approx_value_small_beta(kControlled, risk, InitialLaw::dirac(1.0), grid);
    const auto policy = optimal_feedback(approx.riccati, kControlled, risk, ChiCorrection::None);
    const auto traj = simulate_particles(kControlled, policy, InitialLaw::dirac(1.0), grid, 200000, kSeed,
                                         SimulationOptions{grid.n_steps(), true});
    const auto mc = estimate_risk_sensitive_cost(traj, kControlled, risk);
    const double rel = std::abs(approx.value - mc.j_alpha) / mc.j_alpha;
    const double elapsed = clock.seconds();
    report(5, "small-beta value approximation", rel <= 0.05 && elapsed < 60.0,
           fmt("approx %.6f, mc %.6f +- %.6f, rel gap %.2e <= 5e-2, beta^2 residual %.2e, %.1f s < 60 s",
               approx.value, mc.j_alpha, mc.std_error, rel, approx.residual_beta2, elapsed));
}

void criterion_6(const Shared& s) {
    const RiskParams bench_risk{1.0, 0.0};
    const RiskParams ctrl_risk{0.5, 0.0};
    const auto bench = martingale_check(s.benchmark_paths, s.benchmark_riccati, bench_risk);
    const auto ctrl = martingale_check(s.controlled_paths, s.controlled_riccati, ctrl_risk);
    auto zero_rho = [](RiccatiSolution r) {
        std::fill(r.rho.begin(), r.rho.end(), 0.0);
        return r;
    };
    const auto bench_fault = martingale_check(s.benchmark_paths, zero_rho(s.benchmark_riccati), bench_risk);
    const auto ctrl_fault = martingale_check(s.controlled_paths, zero_rho(s.controlled_riccati), ctrl_risk);
    const bool ok = bench.passed && ctrl.passed && !bench_fault.passed && !ctrl_fault.passed;
    report(6, "martingale property of u0", ok,
           fmt("criterion-1 scenario %.3f, criterion-4 scenario %.3f (both <= 1); rho = 0 faults %.2f, %.2f (must "
               "exceed 1)",
               bench.statistic, ctrl.statistic, bench_fault.statistic, ctrl_fault.statistic));
}

void criterion_7() {
    std::vector<Scenario> scenarios;
    const auto add = [&](std::string id, LQScalarModel m, RiskParams r, double T) {
        Scenario sc;
        sc.id = std::move(id);
        sc.model = m;
        sc.risk = r;
        sc.grid = TimeGrid(T, 1000);
        sc.seed = kSeed;
        scenarios.push_back(sc);
    };
    add("c1_gaussian", kBenchmark, {1.0, 0.0}, 0.5);
    add("c2_blow_up", kBenchmark, {1.0, 0.0}, 2.0);
    for (const double a : {0.2, 0.1, 0.05}) add("c3_alpha_" + std::to_string(a), kBenchmark, {a, 0.0}, 0.5);
    add("c4_controlled", kControlled, {0.5, 0.0}, 1.0);
    add("c5_small_beta", kControlled, {0.5, 0.1}, 1.0);

    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (scenarios.size() < 7 + 20) {
        LQScalarModel m{-1.0 + 2.0 * u(rng), 0.2 + 1.8 * u(rng), 0.2 + 0.8 * u(rng), 0.5 + 1.5 * u(rng), u(rng),
                        0.5 + u(rng)};
        const RiskParams r{0.1 + 0.9 * u(rng), 0.1 * u(rng)};
        if (m.b * m.b / m.r - r.alpha * m.sigma * m.sigma < 0.0) continue;  // admissible: no escape
        add("random_" + std::to_string(scenarios.size() - 7), m, r, 0.5 + 0.5 * u(rng));
    }
    Stopwatch clock;
    const auto rep = chi_positivity_check(scenarios, ChiPositivityOptions{2000, 200, false, true});
    report(7, "chi(0) positivity", rep.passed,
           fmt("%zu scenarios (7 named + 20 random), %.0f violations, %.1f s", scenarios.size(), rep.statistic,
               clock.seconds()));
}

double l1(std::span<const double> a, std::span<const double> b, double dx) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]) * dx;
    return s;
}

void criterion_8(const Shared& s) {
    const Interval bounds{-6, 8};
    const auto& ric = s.benchmark_riccati;
    const auto steps = fpk_stable_steps(kBenchmark, ric, 400, 200, bounds);
    const TimeGrid grid(0.5, steps);
    const auto dens = solve_fpk_xz(kBenchmark, ric, InitialLaw::dirac(1.0), grid, 400, 200, bounds);
    double worst_mass = 0.0;
    for (const double m : dens.mass) worst_mass = std::max(worst_mass, std::abs(m - 1.0));
    const auto path = solve_fpk_x(kBenchmark, std::vector<double>(grid.n_nodes(), 0.0), InitialLaw::dirac(1.0), grid,
                                  400, bounds);
    const double gap_bench = l1(dens.x_marginal(), path.m.back(), dens.x.width());

    // a controlled case where the x drift is active
    const Interval cb{-3, 4};
    const auto& cric = s.controlled_riccati;
    const auto csteps = fpk_stable_steps(kControlled, cric, 400, 200, cb);
    const TimeGrid cgrid(1.0, csteps);
    const auto cdens = solve_fpk_xz(kControlled, cric, InitialLaw::dirac(1.0), cgrid, 400, 200, cb);
    std::vector<double> gain(cgrid.n_nodes());
    for (std::size_t k = 0; k < gain.size(); ++k) gain[k] = cric.grid.interpolate(cric.pi_path(), cgrid.t(k));
    const auto cpath = solve_fpk_x(kControlled, gain, InitialLaw::dirac(1.0), cgrid, 400, cb);
    const double gap_ctrl = l1(cdens.x_marginal(), cpath.m.back(), cdens.x.width());
    double worst_cmass = 0.0;
    for (const double m : cdens.mass) worst_cmass = std::max(worst_cmass, std::abs(m - 1.0));

    const bool ok = worst_mass <= 1e-8 && worst_cmass <= 1e-8 && gap_bench <= 0.02 && gap_ctrl <= 0.02;
    report(8, "FPK conservation and marginal", ok,
           fmt("max |mass - 1| = %.1e / %.1e over %zu / %zu steps (<= 1e-8); L1 marginal gap %.1e / %.1e (<= 0.02)",
               worst_mass, worst_cmass, grid.n_steps(), cgrid.n_steps(), gap_bench, gap_ctrl));
}

void criterion_9() {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_lq = 0.0;
    for (int i = 0; i < 100; ++i) {
        const LQScalarModel m{2.0 * u(rng), 2.0 * u(rng), 1.0, 1.25 + 0.75 * u(rng), 0.0, 1.0};
        const double x = 10.0 * u(rng), q = 10.0 * u(rng);
        const auto closed = lq_hamiltonian(m, x, q, 1.0);
        const double bound = std::abs(closed.v_star) + 5.0;
        const auto num = numeric_hamiltonian(to_generic(m, 0.0), x, 0.0, q, 1.0, {-bound, bound}, 1e-10);
        worst_lq = std::max({worst_lq, std::abs(num.value - closed.value), std::abs(num.v_star - closed.v_star)});
    }

    const double tol = 1e-10;
    double worst_ratio = 0.0;  // |tilde - augmented| / (10 tol (1 + |value|))
    for (int i = 0; i < 100; ++i) {
        const double c1 = u(rng), c2 = u(rng), c3 = 1.2 + u(rng), c4 = u(rng);
        GenericModel g;
        g.f = [=](double x, double, double v) { return 0.5 * c3 * v * v + 0.1 * std::cosh(0.3 * v) + c4 * x * x; };
        g.g = [=](double x, double, double v) { return c1 * x + c2 * v + 0.1 * std::sin(v); };
        const ReducedHamiltonian H = [&g, tol](double x, double stat, double p) {
            return numeric_hamiltonian(g, x, stat, p, 1.0, {-20, 20}, tol).value;
        };
        const double x = u(rng), q = 3.0 * u(rng), rho = 1.5 + 1.4 * u(rng);
        const double augmented = numeric_hamiltonian(g, x, 0.0, q, rho, {-20, 20}, tol).value;
        const double tilde = tilde_reduce(H, x, 0.0, q, rho);
        worst_ratio = std::max(worst_ratio, std::abs(tilde - augmented) / (10.0 * tol * (1.0 + std::abs(augmented))));
    }
    report(9, "Hamiltonian consistency", worst_lq <= 1e-6 && worst_ratio <= 1.0,
           fmt("LQ closed vs numeric max gap %.1e <= 1e-6 (100 cases); homogeneity gap / 10 tol = %.2f <= 1 (100 "
               "cases)",
               worst_lq, worst_ratio));
}

void criterion_10() {
    // Riccati on the blow-up scenario, window t in [1.5, 2] before the escape; exact pi = 1/(t - 1).
    const auto error = [](std::size_t n) {
        const TimeGrid grid(2.0, n);
        const auto sol = solve_scalar_riccati(kBenchmark, RiskParams{1.0, 0.0}, grid);
        double e = 0.0;
        for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
            if (grid.t(k) < 1.5) continue;
            e = std::max(e, std::abs(sol.pi(k) - 1.0 / (grid.t(k) - 1.0)));
        }
        return e;
    };
    const double e1 = error(100), e2 = error(200), e3 = error(400);
    const double r1 = e1 / e2, r2 = e2 / e3;
    const bool ric_ok = r1 >= 12.0 && r1 <= 20.0 && r2 >= 12.0 && r2 <= 20.0;

    const RiskParams risk{1.0, 0.0};
    const auto ric = solve_scalar_riccati(kBenchmark, risk, TimeGrid(0.5, 1000));
    const Interval bounds{-6, 8};
    std::vector<double> errs;
    for (const std::size_t n_x : {100u, 200u, 400u}) {
        const auto steps = fpk_stable_steps(kBenchmark, ric, n_x, 200, bounds);
        const auto dens = solve_fpk_xz(kBenchmark, ric, InitialLaw::dirac(1.0), TimeGrid(0.5, steps), n_x, 200, bounds);
        errs.push_back(std::abs(terminal_exponential_moment(dens, kBenchmark, risk).value - kGaussianValue));
    }
    const bool fpk_ok = errs[1] < errs[0] && errs[2] < errs[1];
    report(10, "order of convergence", ric_ok && fpk_ok,
           fmt("Riccati error ratios %.2f, %.2f per dt halving (in [12, 20]); FPK errors %.2e > %.2e > %.2e for "
               "n_x = 100, 200, 400",
               r1, r2, errs[0], errs[1], errs[2]));
}

} // namespace

int main() {
    Stopwatch total;
    Shared shared;
    const auto guarded = [](int id, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, "(exception)", false, e.what());
        }
    };
    guarded(1, [&] { criterion_1(shared); });
    guarded(2, [&] { criterion_2(); });
    guarded(3, [&] { criterion_3(); });
    guarded(4, [&] { criterion_4(shared); });
    guarded(5, [&] { criterion_5(); });
    guarded(6, [&] { criterion_6(shared); });
    guarded(7, [&] { criterion_7(); });
    guarded(8, [&] { criterion_8(shared); });
    guarded(9, [&] { criterion_9(); });
    guarded(10, [&] { criterion_10(); });
    std::printf("%d of 10 criteria passed (%.1f s)\n", 10 - failures, total.seconds());
    return failures == 0 ? 0 : 1;
}
