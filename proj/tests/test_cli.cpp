#include "riskmf/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace riskmf;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "riskmf_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto path = dir / "scenario.ini";
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* const kBenchmark = R"(
[model]
kind = lq_scalar
a = 0
b = 0
sigma = 1
q = 0
qT = 1
[init]
kind = dirac
mean = 1
[risk]
alpha = 1
beta = 0
[grid]
T = 0.5
n_steps = 200
[mc]
n_particles = 4000
seed = 1
snapshot_stride = 20
[fpk]
n_x = 200
n_z = 40
x_bounds = [-6, 8]
[output]
formats = csv, json, binary
)";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("riccati on the blow-up scenario exits 0 and records the escape time") {
    const auto dir = scratch("blowup");
    const auto cfg = write_config(dir, std::string(kBenchmark));
    const auto r = run({"riccati", "--config", cfg.string(), "--out", (dir / "out").string(), "--set", "grid.T=2",
                        "--set", "grid.n_steps=20000"});
    CHECK(r.code == kExitOk);
    const auto summary = nlohmann::json::parse(r.out);
    CHECK(summary.at("blow_up") == true);
    CHECK(std::abs(summary.at("blow_up_t").get<double>() - 1.0) < 0.01);
    std::ifstream csv(dir / "out" / "riccati.csv");
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "t,pi,rho,omega,y,blow_up_t");
    const double t_star = std::stod(row.substr(row.rfind(',') + 1));
    CHECK(std::abs(t_star - 1.0) < 0.01);
}

TEST_CASE("input errors exit 2 with one JSON line") {
    const auto dir = scratch("errors");
    SUBCASE("missing config") {
        const auto r = run({"riccati", "--config", (dir / "nope.ini").string()});
        CHECK(r.code == kExitInput);
        const auto j = nlohmann::json::parse(r.err);
        CHECK(j.at("error") == "Io");
        CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    }
    SUBCASE("unknown key") {
        const auto cfg = write_config(dir, std::string(kBenchmark) + "[risk]\nalpah = 2\n");
        const auto r = run({"riccati", "--config", cfg.string()});
        CHECK(r.code == kExitInput);
        CHECK(nlohmann::json::parse(r.err).at("message").get<std::string>().find("alpah") != std::string::npos);
    }
    SUBCASE("unknown override") {
        const auto cfg = write_config(dir, kBenchmark);
        CHECK(run({"riccati", "--config", cfg.string(), "--set", "grid.dt=0.1"}).code == kExitInput);
    }
    SUBCASE("non-finite value") {
        const auto cfg = write_config(dir, kBenchmark);
        CHECK(run({"riccati", "--config", cfg.string(), "--set", "model.a=nan"}).code == kExitInput);
    }
    SUBCASE("no command") {
        const auto cfg = write_config(dir, kBenchmark);
        CHECK(run({"--config", cfg.string()}).code == kExitInput);
    }
}

TEST_CASE("value on the Gaussian benchmark") {
    const auto dir = scratch("value");
    const auto cfg = write_config(dir, kBenchmark);
    const auto r = run({"value", "--config", cfg.string(), "--out", (dir / "out").string()});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "value_report.json"));
    const double v = 3.844231028159117;
    CHECK(j.at("value_closed_form").get<double>() == doctest::Approx(v).epsilon(1e-6));
    CHECK(std::abs(j.at("value_mc").get<double>() - v) <= 3.0 * j.at("mc_std_error").get<double>());
    CHECK(j.at("value_pde").get<double>() == doctest::Approx(v).epsilon(0.02));
    CHECK(j.at("blow_up") == false);
    for (const char* key : {"scenario_id", "alpha", "beta", "value_closed_form", "value_mc", "mc_std_error", "value_pde",
                            "certainty_equivalent", "residual_beta2", "blow_up"})
        CHECK(j.contains(key));
}

TEST_CASE("value on a blow-up scenario exits 3") {
    const auto dir = scratch("value_blowup");
    const auto cfg = write_config(dir, kBenchmark);
    const auto r = run({"value", "--config", cfg.string(), "--out", (dir / "out").string(), "--set", "grid.T=2"});
    CHECK(r.code == kExitNumerical);
    CHECK(nlohmann::json::parse(slurp(dir / "out" / "value_report.json")).at("blow_up") == true);
}

TEST_CASE("simulate and fpk write their artifacts") {
    const auto dir = scratch("artifacts");
    const auto cfg = write_config(dir, kBenchmark);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "sim").string()}).code == kExitOk);
    CHECK(fs::exists(dir / "sim" / "trajectory.csv"));
    CHECK(fs::exists(dir / "sim" / "ensemble.bin"));
    const auto cost = nlohmann::json::parse(slurp(dir / "sim" / "cost.json"));
    CHECK(cost.at("j_alpha").get<double>() > 0.0);
    REQUIRE(run({"fpk", "--config", cfg.string(), "--out", (dir / "fpk").string()}).code == kExitOk);
    CHECK(fs::exists(dir / "fpk" / "fpk_density.csv"));
    CHECK(fs::exists(dir / "fpk" / "fpk_marginal.csv"));
    CHECK(fs::exists(dir / "fpk" / "density.bin"));
    const auto moment = nlohmann::json::parse(slurp(dir / "fpk" / "fpk.json"));
    CHECK(moment.at("terminal_moment").contains("value"));
    CHECK(moment.at("max_mass_error").get<double>() <= 1e-8);
}

TEST_CASE("validate writes JSON lines") {
    const auto dir = scratch("validate");
    const auto cfg = write_config(dir, std::string(kBenchmark) +
                                           "[validate]\nalpha_particles = 4000\nchi_particles = 200\n");
    const auto r = run({"validate", "--config", cfg.string(), "--out", (dir / "out").string(), "--set",
                        "model.b=1", "--set", "model.sigma=0.5", "--set", "risk.alpha=0.5", "--set", "grid.T=1",
                        "--set", "fpk.x_bounds=[-3,4]"});
    CHECK((r.code == kExitOk || r.code == kExitCheckFailed));
    std::istringstream lines(slurp(dir / "out" / "checks.jsonl"));
    std::string line;
    int n = 0;
    bool any_failed = false;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("name"));
        any_failed = any_failed || (j.at("applicable") == true && j.at("passed") == false);
        ++n;
    }
    CHECK(n == 4);
    CHECK((r.code == kExitCheckFailed) == any_failed);
}

TEST_CASE("sweep over alpha gives a nondecreasing certainty equivalent") {
    const auto dir = scratch("sweep");
    const auto cfg = write_config(dir, std::string(kBenchmark) +
                                           "[sweep]\nkey = risk.alpha\nvalues = 0.05, 0.1, 0.2, 0.4\n");
    const auto r = run({"sweep", "--config", cfg.string(), "--out", (dir / "out").string(), "--jobs", "3", "--set",
                        "output.routes=mc", "--set", "mc.policy=zero"});
    REQUIRE(r.code == kExitOk);
    std::istringstream csv(slurp(dir / "out" / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    double prev = -1e300;
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const double ce = std::stod(cells.at(5));
        CHECK(ce >= prev);
        prev = ce;
        ++rows;
    }
    CHECK(rows == 4);
    for (int i = 0; i < 4; ++i) CHECK(fs::exists(dir / "out" / "sweep" / ("point_" + std::to_string(i) + ".json")));
}

TEST_CASE("outputs are byte-identical across runs and job counts") {
    const auto dir = scratch("bytes");
    const auto cfg = write_config(dir, std::string(kBenchmark) + "[sweep]\nkey = risk.alpha\nvalues = 0.5, 1\n");
    for (const char* cmd : {"simulate", "value", "fpk"}) {
        REQUIRE(run({cmd, "--config", cfg.string(), "--out", (dir / "a").string()}).code == kExitOk);
        REQUIRE(run({cmd, "--config", cfg.string(), "--out", (dir / "b").string()}).code == kExitOk);
    }
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (dir / "a").string(), "--jobs", "1"}).code == kExitOk);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (dir / "b").string(), "--jobs", "2"}).code == kExitOk);
    for (const char* f : {"trajectory.csv", "cost.json", "ensemble.bin", "value_report.json", "fpk_density.csv",
                          "fpk.json", "density.bin", "sweep.csv"})
        CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);

    // --seed overrides mc.seed
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "2"}).code == kExitOk);
    CHECK(slurp(dir / "a" / "cost.json") != slurp(dir / "c" / "cost.json"));
}

TEST_CASE("matrix models") {
    const auto dir = scratch("matrix");
    const auto cfg = write_config(dir, R"(
[model]
kind = lq_matrix
A = [[0, 1], [0, 0]]
B = [[0], [1]]
Q = [[1, 0], [0, 0]]
R = [[1]]
QT = [[1, 0], [0, 1]]
Sigma = [[0.3, 0], [0, 0.3]]
[risk]
alpha = 0.5
[grid]
T = 1
n_steps = 100
)");
    const auto r = run({"riccati", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitOk);
    std::ifstream csv(dir / "out" / "riccati.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("t,Pi_00,Pi_01,Pi_10,Pi_11,rho", 0) == 0);
}

} // TEST_SUITE
