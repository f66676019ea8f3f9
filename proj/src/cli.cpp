#include "riskmf/cli.hpp"

#include "riskmf/config.hpp"
#include "riskmf/error.hpp"
#include "riskmf/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace riskmf {

namespace {

namespace fs = std::filesystem;

struct Context {
    ConfigEntries entries;
    ScenarioConfig config;
    std::ostream& out;
};

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

bool wants(const ScenarioConfig& c, const char* format) { return c.formats.contains(format); }

Policy scenario_policy(const ScenarioConfig& c, const RiccatiSolution& riccati) {
    if (c.optimal_policy && riccati.usable()) {
        return optimal_feedback(riccati, c.scalar, c.risk, ChiCorrection::None);
    }
    return Policy::zero(c.grid);
}

int cmd_riccati(Context& ctx) {
    const auto& c = ctx.config;
    RiccatiSolution sol;
    std::vector<double> y;
    if (c.kind == ModelKind::LqMatrix) {
        sol = solve_matrix_riccati(*c.matrix, c.risk, c.grid);
    } else {
        sol = solve_scalar_riccati(c.scalar, c.risk, c.grid);
        if (sol.usable()) {
            attach_omega(sol, c.scalar);
            y = solve_mean_ode(sol.pi_path(), c.scalar, c.grid, c.init.mean());
        }
    }
    std::ostringstream csv;
    write_riccati_csv(csv, sol, y);
    write_text_file(c.output_dir / "riccati.csv", csv.str());

    nlohmann::json summary = {{"command", "riccati"}, {"blow_up", sol.blow_up.has_value()}};
    if (sol.blow_up) {
        summary["blow_up_t"] = sol.blow_up->t_node;
        summary["blow_up_t_extrapolated"] = sol.blow_up->t_extrapolated;
    } else {
        summary["pi0"] = sol.Pi.front()(0, 0);
        summary["rho0"] = sol.rho.front();
    }
    ctx.out << summary.dump() << '\n';
    return kExitOk;
}

int cmd_simulate(Context& ctx) {
    const auto& c = ctx.config;
    const auto riccati = solve_scalar_riccati(c.scalar, c.risk, c.grid);
    const auto policy = scenario_policy(c, riccati);
    const SimulationOptions options{c.snapshot_stride, true};

    Trajectory traj;
    CostEstimate cost;
    if (c.kind == ModelKind::Generic) {
        const auto model = c.generic_model();
        traj = simulate_particles(model, policy, c.init, c.grid, c.n_particles, c.seed, options);
        cost = estimate_risk_sensitive_cost(traj, model, c.risk);
    } else if (c.kind == ModelKind::LqScalar) {
        traj = simulate_particles(c.scalar, policy, c.init, c.grid, c.n_particles, c.seed, options);
        cost = estimate_risk_sensitive_cost(traj, c.scalar, c.risk);
    } else {
        throw Error(ErrorCode::InvalidInput, "simulate supports lq_scalar and generic models");
    }

    if (wants(c, "csv")) {
        std::ostringstream csv;
        write_trajectory_csv(csv, traj);
        write_text_file(c.output_dir / "trajectory.csv", csv.str());
    }
    auto j = to_json(cost);
    j["chi0"] = c.risk.alpha * cost.j_alpha;
    if (wants(c, "json")) write_json(c.output_dir / "cost.json", j);
    if (wants(c, "binary")) {
        std::ostringstream bin(std::ios::binary);
        write_ensemble_binary(bin, traj);
        write_text_file(c.output_dir / "ensemble.bin", bin.str());
    }
    j["command"] = "simulate";
    ctx.out << j.dump() << '\n';
    return kExitOk;
}

int cmd_fpk(Context& ctx) {
    const auto& c = ctx.config;
    if (c.kind != ModelKind::LqScalar) throw Error(ErrorCode::InvalidInput, "fpk supports lq_scalar models only");
    const auto riccati = solve_scalar_riccati(c.scalar, c.risk, c.grid);
    riccati.require_usable();
    const auto steps = fpk_stable_steps(c.scalar, riccati, c.n_x, c.n_z, c.x_bounds, c.fpk);
    const TimeGrid fpk_grid(c.grid.horizon(), steps);
    const auto density = solve_fpk_xz(c.scalar, riccati, c.init, fpk_grid, c.n_x, c.n_z, c.x_bounds, c.fpk);
    const auto moment = terminal_exponential_moment(density, c.scalar, c.risk);

    std::vector<double> gain(fpk_grid.n_nodes());
    const auto pi = riccati.pi_path();
    for (std::size_t k = 0; k < gain.size(); ++k) {
        gain[k] = c.scalar.b / c.scalar.r * riccati.grid.interpolate(pi, fpk_grid.t(k));
    }
    const auto path = solve_fpk_x(c.scalar, gain, c.init, fpk_grid, c.n_x, c.x_bounds);

    double mass_err = 0.0;
    for (double m : density.mass) mass_err = std::max(mass_err, std::abs(m - 1.0));
    const auto marginal = density.x_marginal();
    double l1 = 0.0;
    for (std::size_t i = 0; i < marginal.size(); ++i) l1 += std::abs(marginal[i] - path.m.back()[i]) * density.x.width();

    if (wants(c, "csv")) {
        std::ostringstream csv;
        write_density_csv(csv, density);
        write_text_file(c.output_dir / "fpk_density.csv", csv.str());
        std::ostringstream mcsv;
        mcsv << "x,m_xz_marginal,m_x\n";
        for (std::size_t i = 0; i < marginal.size(); ++i) {
            mcsv << format_double(density.x.center(i)) << ',' << format_double(marginal[i]) << ','
                 << format_double(path.m.back()[i]) << '\n';
        }
        write_text_file(c.output_dir / "fpk_marginal.csv", mcsv.str());
    }
    if (wants(c, "binary")) {
        std::ostringstream bin(std::ios::binary);
        write_density_binary(bin, density);
        write_text_file(c.output_dir / "density.bin", bin.str());
    }
    nlohmann::json j = {{"terminal_moment", to_json(moment)},
                        {"n_steps", steps},
                        {"max_mass_error", mass_err},
                        {"marginal_l1_gap", l1},
                        {"z_max", density.z.z_max}};
    if (wants(c, "json")) write_json(c.output_dir / "fpk.json", j);
    j["command"] = "fpk";
    ctx.out << j.dump() << '\n';
    return kExitOk;
}

RouteSelection routes_of(const ScenarioConfig& c) {
    return {c.routes.contains("closed_form"), c.routes.contains("mc"), c.routes.contains("pde")};
}

int cmd_value(Context& ctx) {
    const auto& c = ctx.config;
    if (c.kind != ModelKind::LqScalar) throw Error(ErrorCode::InvalidInput, "value supports lq_scalar models only");
    const auto report = value_report(c.scenario(), routes_of(c));
    const auto j = to_json(report);
    write_json(c.output_dir / "value_report.json", j);
    ctx.out << j.dump() << '\n';
    return report.blow_up ? kExitNumerical : kExitOk;
}

int cmd_validate(Context& ctx) {
    const auto& c = ctx.config;
    if (c.kind != ModelKind::LqScalar) throw Error(ErrorCode::InvalidInput, "validate supports lq_scalar models only");
    const auto sc = c.scenario();
    const auto riccati = solve_scalar_riccati(c.scalar, c.risk, c.grid);
    std::vector<CheckReport> reports;

    if (!riccati.usable()) {
        reports.push_back(CheckReport::not_applicable("martingale", "Riccati blow-up"));
    } else if (c.risk.beta != 0.0) {
        reports.push_back(CheckReport::not_applicable("martingale", "needs beta = 0"));
    } else {
        const auto traj = simulate_particles(c.scalar, optimal_feedback(riccati, c.scalar, c.risk, ChiCorrection::None),
                                             c.init, c.grid, c.n_particles, c.seed,
                                             SimulationOptions{c.snapshot_stride, true});
        reports.push_back(martingale_check(traj, riccati, c.risk));
    }

    ChiPositivityOptions chi;
    chi.n_particles = c.chi_particles;
    chi.include_fpk = c.routes.contains("pde");
    reports.push_back(chi_positivity_check(std::span<const Scenario>(&sc, 1), chi));

    reports.push_back(alpha_limit_check(to_generic(c.scalar, c.risk.beta), scenario_policy(c, riccati), c.init, c.grid,
                                        c.alphas, c.alpha_particles, c.seed));

    if (routes_of(c).closed_form && routes_of(c).mc && routes_of(c).pde) {
        reports.push_back(three_way_value_check(sc).check);
    }

    std::string lines;
    bool failed = false;
    for (const auto& r : reports) {
        lines += to_json(r).dump() + "\n";
        failed = failed || (r.applicable && !r.passed);
    }
    write_text_file(c.output_dir / "checks.jsonl", lines);
    ctx.out << lines;
    return failed ? kExitCheckFailed : kExitOk;
}

int cmd_sweep(Context& ctx, std::size_t jobs) {
    const auto& c = ctx.config;
    if (c.sweep_key.empty() || c.sweep_values.empty()) {
        throw Error(ErrorCode::InvalidInput, "sweep needs sweep.key and sweep.values");
    }
    if (c.sweep_key.rfind("sweep.", 0) == 0) throw Error(ErrorCode::InvalidInput, "cannot sweep a sweep key");

    const auto n = c.sweep_values.size();
    std::vector<ValueReport> reports(n);
    std::vector<std::string> errors(n);
    std::vector<int> codes(n, kExitOk);
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                auto entries = ctx.entries;
                entries[c.sweep_key] = c.sweep_values[i];
                auto point = build_config(entries);
                point.id = c.id + "_" + std::to_string(i);
                if (point.kind != ModelKind::LqScalar) {
                    throw Error(ErrorCode::InvalidInput, "sweep supports lq_scalar models only");
                }
                reports[i] = value_report(point.scenario(), routes_of(point));
            } catch (const Error& e) {
                errors[i] = e.what();
                codes[i] = is_numerical(e.code()) ? kExitNumerical : kExitInput;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::ostringstream csv;
    csv << c.sweep_key << ",value_closed_form,value_mc,mc_std_error,value_pde,certainty_equivalent,residual_beta2,"
                          "blow_up,error\n";
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    int code = kExitOk;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = reports[i];
        csv << format_double(c.sweep_values[i]) << ',' << opt(r.value_closed_form) << ',' << opt(r.value_mc) << ','
            << opt(r.mc_std_error) << ',' << opt(r.value_pde) << ',' << opt(r.certainty_equivalent) << ','
            << opt(r.residual_beta2) << ',' << (r.blow_up ? "true" : "false") << ',' << errors[i] << '\n';
        if (errors[i].empty()) {
            write_json(c.output_dir / "sweep" / ("point_" + std::to_string(i) + ".json"), to_json(r));
            ctx.out << to_json(r).dump() << '\n';
        }
        code = std::max(code, codes[i]);
    }
    write_text_file(c.output_dir / "sweep.csv", csv.str());
    return code;
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
    err << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk-sensitive mean-field-type control toolkit"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Scenario config file")->required();
    app.add_option("--set", overrides, "Override a config entry, section.key=value")->take_all();
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--jobs", jobs, "Parallel sweep points")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Overrides mc.seed");

    for (const char* name : {"riccati", "simulate", "fpk", "value", "validate", "sweep"}) app.add_subcommand(name);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "InvalidInput", e.what());
        return kExitInput;
    }

    try {
        Context ctx{{}, {}, out};
        {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorCode::Io, "cannot open config file " + config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            ctx.entries = parse_config_text(buf.str());
        }
        for (const auto& o : overrides) apply_override(ctx.entries, o);
        if (seed) ctx.entries["mc.seed"] = *seed;
        if (!out_dir.empty()) ctx.entries["output.directory"] = out_dir;
        ctx.config = build_config(ctx.entries);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "riccati") return cmd_riccati(ctx);
        if (cmd == "simulate") return cmd_simulate(ctx);
        if (cmd == "fpk") return cmd_fpk(ctx);
        if (cmd == "value") return cmd_value(ctx);
        if (cmd == "validate") return cmd_validate(ctx);
        return cmd_sweep(ctx, jobs);
    } catch (const Error& e) {
        report_error(err, to_string(e.code()), e.what());
        return is_numerical(e.code()) ? kExitNumerical : kExitInput;
    } catch (const std::exception& e) {
        report_error(err, "Internal", e.what());
        return kExitNumerical;
    }
}

} // namespace riskmf
