/**
 * @file model.hpp
 * @brief Domain types shared by the numerical modules
 *
 * Models, risk parameters, the uniform time grid, initial laws and feedback
 * policies. Everything here is plain value data; once constructed it can be
 * shared across threads freely.
 *
 * Quadratic costs follow the half convention
 *   f(x, v) = 1/2 (x'Qx + v'Rv),   h(x) = 1/2 x'Q_T x,
 * which is the convention under which the risk-sensitive Riccati equation
 * carries the term Pi (B R^-1 B' - alpha a) Pi and rho = 1/2 int tr(a Pi).
 */

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace riskmf {

struct RiskParams {
    double alpha = 1.0;  ///< risk-sensitivity index, > 0 for risk-averse costs
    double beta = 0.0;   ///< weight of E[x(T)] in the terminal cost
};

struct LQScalarModel {
    double a = 0.0;      ///< drift gain
    double b = 0.0;      ///< control gain
    double sigma = 1.0;  ///< diffusion, > 0
    double r = 1.0;      ///< control cost weight, > 0
    double q = 0.0;      ///< running state cost weight
    double qT = 1.0;     ///< terminal state cost weight
};

struct LQMatrixModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;
    Eigen::MatrixXd QT;
    Eigen::MatrixXd Sigma;

    /// a = Sigma Sigma'. Always recomputed.
    [[nodiscard]] Eigen::MatrixXd diffusion_matrix() const { return Sigma * Sigma.transpose(); }
    [[nodiscard]] Eigen::Index state_dim() const { return A.rows(); }

    /// 1x1 embedding of a scalar model.
    [[nodiscard]] static LQMatrixModel from_scalar(const LQScalarModel& m);
};

/// Uniform grid t_k = k T / n_steps on [0, T].
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_steps);

    [[nodiscard]] double horizon() const noexcept { return T_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_; }
    [[nodiscard]] std::size_t n_nodes() const noexcept { return n_ + 1; }
    [[nodiscard]] double dt() const noexcept { return T_ / static_cast<double>(n_); }

    /// Computed from the index, so t(n_steps) == T exactly and there is no drift.
    [[nodiscard]] double t(std::size_t k) const noexcept {
        return k == n_ ? T_ : T_ * static_cast<double>(k) / static_cast<double>(n_);
    }

    /// Linear interpolation of nodal samples at an arbitrary time (clamped).
    [[nodiscard]] double interpolate(std::span<const double> values, double t) const;

    /// Four-point Lagrange interpolation at t_k + dt/2, fourth-order accurate.
    [[nodiscard]] double midpoint(std::span<const double> values, std::size_t k) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double T_;
    std::size_t n_;
};

struct GaussianLaw {
    double mean = 0.0;
    double variance = 1.0;
};

struct DiracLaw {
    double x0 = 0.0;
};

struct SampleLaw {
    std::vector<double> samples;
};

struct InitialLaw {
    std::variant<GaussianLaw, DiracLaw, SampleLaw> kind;

    static InitialLaw gaussian(double mean, double variance);
    static InitialLaw dirac(double x0);
    static InitialLaw from_samples(std::vector<double> samples);

    [[nodiscard]] double mean() const;
    [[nodiscard]] double variance() const;
};

/// v = -k(t_k) x
struct LinearGain {
    std::vector<double> gain;
};

/// v = -k(t_k) x - c(t_k)
struct AffineMeanField {
    std::vector<double> gain;
    std::vector<double> offset;
};

/// v = fn(t, x, z, law statistic)
struct CallbackPolicy {
    std::function<double(double, double, double, double)> fn;
};

struct Policy {
    std::variant<LinearGain, AffineMeanField, CallbackPolicy> kind;

    /// Control at grid node k.
    [[nodiscard]] double control(std::size_t k, double t, double x, double z, double stat) const;

    /// Throws InvalidInput when sampled gains do not match the grid.
    void check_against(const TimeGrid& grid) const;

    static Policy zero(const TimeGrid& grid);
};

/// Scalar model with general coefficients. The law enters through a single
/// user-supplied statistic of the particle ensemble.
struct GenericModel {
    std::function<double(double x, double stat, double v)> f;
    std::function<double(double x, double stat, double v)> g;
    std::function<double(double x)> sigma;
    std::function<double(double x, double stat)> h;
    std::function<double(std::span<const double> x)> law_stat;
};

/// Wraps the scalar LQ model: g = ax + bv, f = (qx^2 + rv^2)/2,
/// h = qT x^2/2 + beta * stat with stat the empirical mean.
[[nodiscard]] GenericModel to_generic(const LQScalarModel& model, double beta);

struct ValidationOutcome {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

[[nodiscard]] ValidationOutcome validate_model(const LQScalarModel& model, const RiskParams& risk,
                                               const TimeGrid& grid);
[[nodiscard]] ValidationOutcome validate_model(const LQMatrixModel& model, const RiskParams& risk,
                                               const TimeGrid& grid);

/// Risk-seeking problems (alpha < 0) are solved as risk-averse ones with
/// f -> -f and h -> -h and |alpha|.
[[nodiscard]] GenericModel risk_seeking_transform(const GenericModel& model);

/// Pairwise summation in fixed index order.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

} // namespace riskmf
