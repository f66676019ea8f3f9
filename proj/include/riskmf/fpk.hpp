/**
 * @file fpk.hpp
 * @brief Finite-volume Fokker-Planck solvers for m(x, t) and mu(x, z, t)
 *
 * x is discretized by cells (centers x_min + (i + 1/2) dx), z by nodes
 * z_j = j dz on [0, z_max]. Both directions use explicit first-order upwind
 * fluxes; diffusion sigma^2/2 d_xx uses central fluxes. All boundary fluxes
 * are zero, so every step conserves mass up to round-off.
 *
 * The z equation is written in conservative form d_z(fhat mu) with
 *   fhat(x, t) = 1/2 (q + b^2 Pi(t)^2 / r) x^2 >= 0,
 * the running cost along the feedback v = -(b/r) Pi x. Upwinding on z-nodes
 * reproduces the first moment of z exactly.
 */

#pragma once

#include "riskmf/hamiltonian.hpp"
#include "riskmf/model.hpp"
#include "riskmf/riccati.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace riskmf {

/// Cell-centred grid on [lo, hi].
struct CellGrid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 1;

    [[nodiscard]] double width() const noexcept { return (hi - lo) / static_cast<double>(n); }
    [[nodiscard]] double center(std::size_t i) const noexcept {
        return lo + (static_cast<double>(i) + 0.5) * width();
    }
};

/// Nodes z_j = j dz, j = 0 .. n-1, on [0, z_max].
struct NodeGrid {
    double z_max = 1.0;
    std::size_t n = 2;

    [[nodiscard]] double width() const noexcept { return z_max / static_cast<double>(n - 1); }
    [[nodiscard]] double node(std::size_t j) const noexcept { return static_cast<double>(j) * width(); }
};

/// Cell densities of the initial law (sum of m_i dx is 1). Dirac masses and
/// samples are split linearly between the two nearest centres, which keeps
/// the mean exact.
[[nodiscard]] std::vector<double> discretize_initial_law(const InitialLaw& init, const CellGrid& x);

struct FpkPath1D {
    TimeGrid grid{1.0, 2};
    CellGrid x;
    std::vector<std::vector<double>> m;  ///< density per node
    std::vector<double> mass;            ///< per node

    [[nodiscard]] double mean(std::size_t k) const;
    [[nodiscard]] double variance(std::size_t k) const;
};

/// Explicit finite-volume solve of dm/dt = sigma^2/2 m_xx - d_x((a - b k(t)) x m)
/// for the feedback v = -k(t) x.
[[nodiscard]] FpkPath1D solve_fpk_x(const LQScalarModel& model, std::span<const double> gain, const InitialLaw& init,
                                    const TimeGrid& grid, std::size_t n_x, Interval bounds);

struct GridDensity2D {
    CellGrid x;
    NodeGrid z;
    double t = 0.0;
    std::vector<double> mu;           ///< row-major, mu[i * z.n + j]
    std::vector<double> mass;         ///< per time node
    double min_value = 0.0;           ///< most negative entry seen during the solve

    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return mu[i * z.n + j]; }
    [[nodiscard]] double total_mass() const;
    [[nodiscard]] std::vector<double> x_marginal() const;
    [[nodiscard]] std::vector<double> z_marginal() const;
    [[nodiscard]] double mean_x() const;
    [[nodiscard]] double mean_z() const;
};

struct FpkOptions {
    double z_max_factor = 1.5;
    std::optional<double> z_max;  ///< overrides the automatic choice
};

/// z_max = factor * T * max over x-cells and nodes of fhat (1 when fhat vanishes).
[[nodiscard]] double automatic_z_max(const LQScalarModel& model, const RiccatiSolution& riccati, const CellGrid& x,
                                     double factor);

/// Dimensional splitting per step: x advection-diffusion with drift
/// (a - (b^2/r) Pi(t)) x, then z advection with speed fhat. Pi is taken from
/// the Riccati solution, interpolated when its grid differs.
[[nodiscard]] GridDensity2D solve_fpk_xz(const LQScalarModel& model, const RiccatiSolution& riccati,
                                         const InitialLaw& init, const TimeGrid& grid, std::size_t n_x,
                                         std::size_t n_z, Interval bounds, const FpkOptions& options = {});

/// Smallest step count on [0, T] meeting the 0.9 CFL bound of solve_fpk_xz.
[[nodiscard]] std::size_t fpk_stable_steps(const LQScalarModel& model, const RiccatiSolution& riccati,
                                           std::size_t n_x, std::size_t n_z, Interval bounds,
                                           const FpkOptions& options = {});

struct TerminalMoment {
    double value = 1.0;
    double log_value = 0.0;
    double boundary_fraction = 0.0;  ///< share of the integrand in boundary cells
    bool truncation_warning = false;
};

/// sum mu e^{alpha (z + qT x^2/2 + beta mean_x)} dx dz, max-shifted.
[[nodiscard]] TerminalMoment terminal_exponential_moment(const GridDensity2D& density, const LQScalarModel& model,
                                                         const RiskParams& risk);

} // namespace riskmf
