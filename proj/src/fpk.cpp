#include "riskmf/fpk.hpp"

#include "riskmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace riskmf {

namespace {

constexpr double kCfl = 0.9;
constexpr double kBoundaryMassTol = 1e-6;

void check_bounds(Interval bounds, std::size_t n_x) {
    if (!(bounds.hi > bounds.lo) || !std::isfinite(bounds.lo) || !std::isfinite(bounds.hi)) {
        throw Error(ErrorCode::InvalidInput, "x bounds must be a finite non-empty interval");
    }
    if (n_x < 3) throw Error(ErrorCode::InvalidInput, "need at least 3 x cells");
}

/// Adds `mass` at location x split linearly between the two nearest centres.
void deposit(std::vector<double>& cells, const CellGrid& grid, double x, double mass) {
    const double s = (x - grid.lo) / grid.width() - 0.5;
    if (s < -0.5 || s > static_cast<double>(grid.n) - 0.5) {
        throw Error(ErrorCode::InvalidInput, "initial mass lies outside the x bounds");
    }
    if (s <= 0.0) {
        cells.front() += mass;
        return;
    }
    const auto i = static_cast<std::size_t>(s);
    if (i + 1 >= grid.n) {
        cells.back() += mass;
        return;
    }
    const double w = s - static_cast<double>(i);
    cells[i] += (1.0 - w) * mass;
    cells[i + 1] += w * mass;
}

std::vector<double> pi_on_grid(const RiccatiSolution& riccati, const TimeGrid& grid) {
    riccati.require_usable();
    const auto path = riccati.pi_path();
    std::vector<double> out(grid.n_nodes());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = riccati.grid == grid ? path[k] : riccati.grid.interpolate(path, grid.t(k));
    }
    return out;
}

/// Max of |c| |x_face| over faces, i.e. the largest advection speed in x.
double max_face_speed(const CellGrid& x, double drift_coeff) {
    return std::abs(drift_coeff) * std::max(std::abs(x.lo), std::abs(x.hi));
}

double x_step_limit(const CellGrid& x, double max_speed, double sigma) {
    const double dx = x.width();
    const double rate = max_speed / dx + sigma * sigma / (dx * dx);
    return rate > 0.0 ? kCfl / rate : std::numeric_limits<double>::infinity();
}

/// One explicit step of sigma^2/2 m_xx - d_x(c x m) on `stride`-interleaved
/// columns: row i of the block holds `width` contiguous values.
void x_step(std::vector<double>& mu, std::vector<double>& flux, const CellGrid& x, std::size_t width, double coeff,
            double sigma, double dt) {
    const double dx = x.width();
    const double diff = 0.5 * sigma * sigma / dx;
    const double lambda = dt / dx;
    const std::size_t n = x.n;
    flux.assign((n - 1) * width, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double speed = coeff * (x.lo + static_cast<double>(i + 1) * dx);
        const double* left = &mu[i * width];
        const double* right = &mu[(i + 1) * width];
        double* f = &flux[i * width];
        if (speed >= 0.0) {
            for (std::size_t j = 0; j < width; ++j) f[j] = speed * left[j] - diff * (right[j] - left[j]);
        } else {
            for (std::size_t j = 0; j < width; ++j) f[j] = speed * right[j] - diff * (right[j] - left[j]);
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double* f = &flux[i * width];
        double* left = &mu[i * width];
        double* right = &mu[(i + 1) * width];
        for (std::size_t j = 0; j < width; ++j) {
            left[j] -= lambda * f[j];
            right[j] += lambda * f[j];
        }
    }
}

double weighted_sum(std::span<const double> values, double cell) {
    return pairwise_sum(values) * cell;
}

} // namespace

std::vector<double> discretize_initial_law(const InitialLaw& init, const CellGrid& x) {
    std::vector<double> cells(x.n, 0.0);
    std::visit(
        [&](const auto& law) {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, GaussianLaw>) {
                if (law.variance == 0.0) {
                    deposit(cells, x, law.mean, 1.0);
                    return;
                }
                const double scale = std::sqrt(2.0 * law.variance);
                const auto cdf = [&](double v) { return 0.5 * std::erfc(-(v - law.mean) / scale); };
                for (std::size_t i = 0; i < x.n; ++i) {
                    const double left = x.lo + static_cast<double>(i) * x.width();
                    cells[i] = cdf(left + x.width()) - cdf(left);
                }
                const double total = pairwise_sum(cells);
                if (!(total > 0.0)) throw Error(ErrorCode::InvalidInput, "initial law has no mass inside the x bounds");
                for (auto& c : cells) c /= total;
            } else if constexpr (std::is_same_v<L, DiracLaw>) {
                deposit(cells, x, law.x0, 1.0);
            } else {
                const double w = 1.0 / static_cast<double>(law.samples.size());
                for (double s : law.samples) deposit(cells, x, s, w);
            }
        },
        init.kind);
    const double dx = x.width();
    for (auto& c : cells) c /= dx;
    return cells;
}

double FpkPath1D::mean(std::size_t k) const {
    std::vector<double> w(x.n);
    for (std::size_t i = 0; i < x.n; ++i) w[i] = x.center(i) * m[k][i];
    return weighted_sum(w, x.width()) / mass[k];
}

double FpkPath1D::variance(std::size_t k) const {
    const double mu = mean(k);
    std::vector<double> w(x.n);
    for (std::size_t i = 0; i < x.n; ++i) w[i] = (x.center(i) - mu) * (x.center(i) - mu) * m[k][i];
    return weighted_sum(w, x.width()) / mass[k];
}

FpkPath1D solve_fpk_x(const LQScalarModel& model, std::span<const double> gain, const InitialLaw& init,
                      const TimeGrid& grid, std::size_t n_x, Interval bounds) {
    check_bounds(bounds, n_x);
    if (gain.size() != grid.n_nodes()) throw Error(ErrorCode::InvalidInput, "gain samples do not match the time grid");
    const CellGrid x{bounds.lo, bounds.hi, n_x};

    double max_speed = 0.0;
    for (double k : gain) max_speed = std::max(max_speed, max_face_speed(x, model.a - model.b * k));
    const double dt_required = x_step_limit(x, max_speed, model.sigma);
    if (grid.dt() > dt_required) {
        throw CflError("time step " + std::to_string(grid.dt()) + " violates the CFL bound " +
                           std::to_string(dt_required),
                       dt_required);
    }

    FpkPath1D path;
    path.grid = grid;
    path.x = x;
    std::vector<double> m = discretize_initial_law(init, x);
    path.m.push_back(m);
    path.mass.push_back(weighted_sum(m, x.width()));

    std::vector<double> flux;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        x_step(m, flux, x, 1, model.a - model.b * gain[k], model.sigma, grid.dt());
        path.m.push_back(m);
        path.mass.push_back(weighted_sum(m, x.width()));
    }
    const double edge = (m.front() + m.back()) * x.width();
    if (edge > kBoundaryMassTol) {
        throw Error(ErrorCode::MassLoss, "boundary cells hold " + std::to_string(edge) + " of the mass; widen x bounds");
    }
    return path;
}

double GridDensity2D::total_mass() const { return pairwise_sum(mu) * x.width() * z.width(); }

std::vector<double> GridDensity2D::x_marginal() const {
    std::vector<double> out(x.n);
    for (std::size_t i = 0; i < x.n; ++i) {
        out[i] = pairwise_sum(std::span<const double>(&mu[i * z.n], z.n)) * z.width();
    }
    return out;
}

std::vector<double> GridDensity2D::z_marginal() const {
    std::vector<double> out(z.n, 0.0);
    std::vector<double> column(x.n);
    for (std::size_t j = 0; j < z.n; ++j) {
        for (std::size_t i = 0; i < x.n; ++i) column[i] = at(i, j);
        out[j] = pairwise_sum(column) * x.width();
    }
    return out;
}

double GridDensity2D::mean_x() const {
    const auto m = x_marginal();
    std::vector<double> w(x.n);
    for (std::size_t i = 0; i < x.n; ++i) w[i] = x.center(i) * m[i];
    return pairwise_sum(w) / pairwise_sum(m);
}

double GridDensity2D::mean_z() const {
    const auto m = z_marginal();
    std::vector<double> w(z.n);
    for (std::size_t j = 0; j < z.n; ++j) w[j] = z.node(j) * m[j];
    return pairwise_sum(w) / pairwise_sum(m);
}

double automatic_z_max(const LQScalarModel& model, const RiccatiSolution& riccati, const CellGrid& x, double factor) {
    riccati.require_usable();
    const double xmax = std::max(std::abs(x.center(0)), std::abs(x.center(x.n - 1)));
    double fmax = 0.0;
    for (std::size_t k = 0; k < riccati.grid.n_nodes(); ++k) {
        const double p = riccati.pi(k);
        fmax = std::max(fmax, 0.5 * (model.q + model.b * model.b * p * p / model.r) * xmax * xmax);
    }
    const double z_max = factor * riccati.grid.horizon() * fmax;
    return z_max > 0.0 ? z_max : 1.0;
}

namespace {

struct StepLimits {
    double dt_x;
    double dt_z;
};

StepLimits xz_limits(const LQScalarModel& model, std::span<const double> pi, const CellGrid& x, const NodeGrid& z) {
    const double gain = model.b * model.b / model.r;
    const double xmax = std::max(std::abs(x.center(0)), std::abs(x.center(x.n - 1)));
    double speed = 0.0;
    double fmax = 0.0;
    for (double p : pi) {
        speed = std::max(speed, max_face_speed(x, model.a - gain * p));
        fmax = std::max(fmax, 0.5 * (model.q + gain * p * p) * xmax * xmax);
    }
    const double dt_z = fmax > 0.0 ? kCfl * z.width() / fmax : std::numeric_limits<double>::infinity();
    return {x_step_limit(x, speed, model.sigma), dt_z};
}

NodeGrid make_z_grid(const LQScalarModel& model, const RiccatiSolution& riccati, const CellGrid& x, std::size_t n_z,
                     const FpkOptions& options) {
    if (n_z < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 z nodes");
    const double z_max = options.z_max ? *options.z_max : automatic_z_max(model, riccati, x, options.z_max_factor);
    if (!(z_max > 0.0) || !std::isfinite(z_max)) throw Error(ErrorCode::InvalidInput, "z_max must be finite and > 0");
    return NodeGrid{z_max, n_z};
}

} // namespace

std::size_t fpk_stable_steps(const LQScalarModel& model, const RiccatiSolution& riccati, std::size_t n_x,
                             std::size_t n_z, Interval bounds, const FpkOptions& options) {
    check_bounds(bounds, n_x);
    const CellGrid x{bounds.lo, bounds.hi, n_x};
    const NodeGrid z = make_z_grid(model, riccati, x, n_z, options);
    riccati.require_usable();
    const auto limits = xz_limits(model, riccati.pi_path(), x, z);
    const double dt = std::min(limits.dt_x, limits.dt_z);
    const double T = riccati.grid.horizon();
    if (!std::isfinite(dt)) return 2;
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(T / dt)));
}

GridDensity2D solve_fpk_xz(const LQScalarModel& model, const RiccatiSolution& riccati, const InitialLaw& init,
                           const TimeGrid& grid, std::size_t n_x, std::size_t n_z, Interval bounds,
                           const FpkOptions& options) {
    check_bounds(bounds, n_x);
    const CellGrid x{bounds.lo, bounds.hi, n_x};
    const NodeGrid z = make_z_grid(model, riccati, x, n_z, options);
    const auto pi = pi_on_grid(riccati, grid);
    const double gain = model.b * model.b / model.r;

    const auto limits = xz_limits(model, pi, x, z);
    const double dt_required = std::min(limits.dt_x, limits.dt_z);
    if (grid.dt() > dt_required) {
        throw CflError("time step " + std::to_string(grid.dt()) + " violates the CFL bound " +
                           std::to_string(dt_required),
                       dt_required);
    }

    GridDensity2D out;
    out.x = x;
    out.z = z;
    out.mu.assign(x.n * z.n, 0.0);
    const auto m0 = discretize_initial_law(init, x);
    for (std::size_t i = 0; i < x.n; ++i) out.mu[i * z.n] = m0[i] / z.width();
    out.mass.push_back(out.total_mass());

    std::vector<double> sq(x.n);
    for (std::size_t i = 0; i < x.n; ++i) sq[i] = 0.5 * x.center(i) * x.center(i);

    std::vector<double> flux;
    const double dt = grid.dt();
    const double lambda_z = dt / z.width();
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        x_step(out.mu, flux, x, z.n, model.a - gain * pi[k], model.sigma, dt);

        const double speed_coeff = model.q + gain * pi[k] * pi[k];
        for (std::size_t i = 0; i < x.n; ++i) {
            const double courant = lambda_z * speed_coeff * sq[i];
            if (courant == 0.0) continue;
            double* row = &out.mu[i * z.n];
            // Top node has zero outflow; walk downward so row[j-1] is still old.
            row[z.n - 1] += courant * row[z.n - 2];
            for (std::size_t j = z.n - 2; j > 0; --j) row[j] += courant * (row[j - 1] - row[j]);
            row[0] -= courant * row[0];
        }

        const auto lowest = *std::min_element(out.mu.begin(), out.mu.end());
        out.min_value = std::min(out.min_value, lowest);
        out.mass.push_back(out.total_mass());
    }
    out.t = grid.horizon();

    double edge = 0.0;
    for (std::size_t j = 0; j < z.n; ++j) edge += out.at(0, j) + out.at(x.n - 1, j);
    double top = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) top += out.at(i, z.n - 1);
    edge *= x.width() * z.width();
    top *= x.width() * z.width();
    if (edge > kBoundaryMassTol) {
        throw Error(ErrorCode::MassLoss, "x-boundary cells hold " + std::to_string(edge) + " of the mass; widen bounds");
    }
    if (top > kBoundaryMassTol) {
        throw Error(ErrorCode::MassLoss, "top z node holds " + std::to_string(top) + " of the mass; raise z_max");
    }
    return out;
}

TerminalMoment terminal_exponential_moment(const GridDensity2D& density, const LQScalarModel& model,
                                           const RiskParams& risk) {
    if (!(risk.alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "alpha must be > 0");
    const auto& x = density.x;
    const auto& z = density.z;
    const double mean = density.mean_x();
    const double alpha = risk.alpha;

    const auto exponent = [&](std::size_t i, std::size_t j) {
        const double xi = x.center(i);
        return alpha * (z.node(j) + 0.5 * model.qT * xi * xi + risk.beta * mean);
    };

    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.n; ++i) {
        for (std::size_t j = 0; j < z.n; ++j) {
            if (density.at(i, j) > 0.0) shift = std::max(shift, exponent(i, j));
        }
    }
    if (!std::isfinite(shift)) throw Error(ErrorCode::InvalidInput, "density carries no positive mass");

    std::vector<double> terms(x.n * z.n);
    double boundary = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) {
        for (std::size_t j = 0; j < z.n; ++j) {
            const double w = std::max(density.at(i, j), 0.0);
            const double term = w * std::exp(exponent(i, j) - shift);
            terms[i * z.n + j] = term;
            if (i == 0 || i + 1 == x.n || j + 1 == z.n) boundary += term;
        }
    }
    const double total = pairwise_sum(terms);
    const double cell = x.width() * z.width();

    TerminalMoment out;
    out.log_value = shift + std::log(total * cell);
    out.value = std::exp(out.log_value);
    out.boundary_fraction = total > 0.0 ? boundary / total : 0.0;
    out.truncation_warning = out.boundary_fraction > kBoundaryMassTol;
    return out;
}

} // namespace riskmf
