/**
 * @file io.hpp
 * @brief CSV, binary and JSON artifacts
 *
 * CSV: comma separated, header row, doubles printed with 17 significant digits.
 *
 * Binary ensemble dump (little-endian):
 *   char[4] "MFRS", u32 version, u64 N, u64 n_snapshots,
 *   then per snapshot: f64 t, f64 x[N], f64 z[N].
 * Binary density dump:
 *   char[4] "MFPK", u32 version, u64 n_x, u64 n_z,
 *   f64 x_min, f64 x_max, f64 z_max, f64 t, f64 mu[n_x * n_z] (row-major in x).
 */

#pragma once

#include "riskmf/fpk.hpp"
#include "riskmf/lq_value.hpp"
#include "riskmf/model.hpp"
#include "riskmf/particles.hpp"
#include "riskmf/riccati.hpp"
#include "riskmf/validation.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace riskmf {

inline constexpr std::uint32_t kBinaryVersion = 1;

/// "%.17g"
[[nodiscard]] std::string format_double(double v);

/// Columns t, pi (or Pi_ij row-major), rho, omega, y, blow_up_t. Nodes before
/// a blow-up print as nan; blow_up_t is empty when the solve completed.
void write_riccati_csv(std::ostream& os, const RiccatiSolution& sol, std::span<const double> y = {});

/// Columns t, mean_x, var_x, mean_z.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Columns x, z, mu.
void write_density_csv(std::ostream& os, const GridDensity2D& density);

void write_ensemble_binary(std::ostream& os, const Trajectory& traj);
[[nodiscard]] std::vector<ParticleEnsemble> read_ensemble_binary(std::istream& is);

void write_density_binary(std::ostream& os, const GridDensity2D& density);
[[nodiscard]] GridDensity2D read_density_binary(std::istream& is);

[[nodiscard]] nlohmann::json to_json(const CostEstimate& est);
[[nodiscard]] nlohmann::json to_json(const ValueReport& report);
[[nodiscard]] nlohmann::json to_json(const CheckReport& report);
[[nodiscard]] nlohmann::json to_json(const TerminalMoment& moment);

/// Strict readers: unknown keys and non-finite numbers are rejected.
[[nodiscard]] LQScalarModel scalar_model_from_json(const nlohmann::json& j);
[[nodiscard]] LQMatrixModel matrix_model_from_json(const nlohmann::json& j);
[[nodiscard]] RiskParams risk_from_json(const nlohmann::json& j);
[[nodiscard]] TimeGrid grid_from_json(const nlohmann::json& j);
[[nodiscard]] InitialLaw initial_law_from_json(const nlohmann::json& j);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

} // namespace riskmf
