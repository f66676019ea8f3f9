/**
 * @file config.hpp
 * @brief Scenario configuration files
 *
 * INI-style text: `[section]` headers, `key = value` lines, `#` comments.
 * Values are JSON literals (numbers, booleans, arrays, quoted strings) or bare
 * words, which are read as strings. Unknown sections or keys are rejected.
 *
 *   [model]   kind (lq_scalar | lq_matrix | generic), a, b, sigma, r, q, qT,
 *             A, B, Q, R, QT, Sigma (matrices as nested arrays), name (generic catalog)
 *   [init]    kind (dirac | gaussian | samples), mean, variance, samples
 *   [risk]    alpha, beta, risk_seeking
 *   [grid]    T, n_steps
 *   [mc]      n_particles, seed, snapshot_stride, policy (optimal | zero)
 *   [fpk]     n_x, n_z, x_bounds, z_max_factor, z_max
 *   [output]  directory, formats (subset of csv, json, binary), routes, scenario_id
 *   [sweep]   key, values
 *   [validate] alphas, alpha_particles, chi_particles
 */

#pragma once

#include "riskmf/model.hpp"
#include "riskmf/validation.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace riskmf {

/// Flat "section.key" -> value map.
using ConfigEntries = std::map<std::string, nlohmann::json>;

[[nodiscard]] ConfigEntries parse_config_text(const std::string& text);

/// Parses "section.key=value".
void apply_override(ConfigEntries& entries, const std::string& assignment);

enum class ModelKind { LqScalar, LqMatrix, Generic };

struct ScenarioConfig {
    ModelKind kind = ModelKind::LqScalar;
    LQScalarModel scalar;
    std::optional<LQMatrixModel> matrix;
    std::string generic_name = "lq";
    RiskParams risk;
    bool risk_seeking = false;
    InitialLaw init = InitialLaw::dirac(0.0);
    TimeGrid grid{1.0, 1000};
    std::size_t n_particles = 10000;
    std::uint64_t seed = 1;
    std::size_t snapshot_stride = 10;
    bool optimal_policy = true;
    std::size_t n_x = 400;
    std::size_t n_z = 200;
    Interval x_bounds{-6.0, 8.0};
    FpkOptions fpk;
    std::filesystem::path output_dir = "out";
    std::set<std::string> formats{"csv", "json"};
    std::set<std::string> routes{"closed_form", "mc", "pde"};
    std::string sweep_key;
    std::vector<double> sweep_values;
    std::vector<double> alphas{0.2, 0.1, 0.05};
    std::size_t alpha_particles = 100000;
    std::size_t chi_particles = 2000;
    std::string id = "scenario";

    /// The LQ scenario view used by the value and validation routes.
    [[nodiscard]] Scenario scenario() const;
    /// Generic model for the particle route, with the risk-seeking flip applied.
    [[nodiscard]] GenericModel generic_model() const;
};

/// Builds a config from entries; throws InvalidInput on unknown keys or bad values.
[[nodiscard]] ScenarioConfig build_config(const ConfigEntries& entries);

[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

} // namespace riskmf
