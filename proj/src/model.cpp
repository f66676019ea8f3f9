#include "riskmf/model.hpp"

#include "riskmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace riskmf {

LQMatrixModel LQMatrixModel::from_scalar(const LQScalarModel& m) {
    LQMatrixModel out;
    out.A = Eigen::MatrixXd::Constant(1, 1, m.a);
    out.B = Eigen::MatrixXd::Constant(1, 1, m.b);
    out.Q = Eigen::MatrixXd::Constant(1, 1, m.q);
    out.R = Eigen::MatrixXd::Constant(1, 1, m.r);
    out.QT = Eigen::MatrixXd::Constant(1, 1, m.qT);
    out.Sigma = Eigen::MatrixXd::Constant(1, 1, m.sigma);
    return out;
}

TimeGrid::TimeGrid(double horizon, std::size_t n_steps) : T_(horizon), n_(n_steps) {
    if (!(std::isfinite(horizon) && horizon > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "time grid horizon must be finite and > 0");
    }
    if (n_steps < 2) {
        throw Error(ErrorCode::InvalidInput, "time grid needs at least 2 steps");
    }
}

double TimeGrid::interpolate(std::span<const double> values, double t) const {
    if (values.size() != n_nodes()) {
        throw Error(ErrorCode::InvalidInput, "sample count does not match time grid");
    }
    if (t <= 0.0) return values.front();
    if (t >= T_) return values.back();
    const double s = t / dt();
    const auto k = std::min(static_cast<std::size_t>(s), n_ - 1);
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * values[k] + w * values[k + 1];
}

double TimeGrid::midpoint(std::span<const double> values, std::size_t k) const {
    // Stencil of four consecutive nodes, shifted inward at the ends.
    const std::size_t start = k == 0 ? 0 : std::min(k - 1, n_ - 3);
    const double target = static_cast<double>(k) + 0.5;
    double result = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double weight = 1.0;
        const double xi = static_cast<double>(start + i);
        for (std::size_t j = 0; j < 4; ++j) {
            if (j == i) continue;
            const double xj = static_cast<double>(start + j);
            weight *= (target - xj) / (xi - xj);
        }
        result += weight * values[start + i];
    }
    return result;
}

InitialLaw InitialLaw::gaussian(double mean, double variance) {
    if (!(variance >= 0.0) || !std::isfinite(mean) || !std::isfinite(variance)) {
        throw Error(ErrorCode::InvalidInput, "Gaussian initial law needs finite mean and variance >= 0");
    }
    return InitialLaw{GaussianLaw{mean, variance}};
}

InitialLaw InitialLaw::dirac(double x0) {
    if (!std::isfinite(x0)) throw Error(ErrorCode::InvalidInput, "Dirac location must be finite");
    return InitialLaw{DiracLaw{x0}};
}

InitialLaw InitialLaw::from_samples(std::vector<double> samples) {
    if (samples.empty()) throw Error(ErrorCode::InvalidInput, "sample initial law is empty");
    if (!std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorCode::InvalidInput, "sample initial law has non-finite entries");
    }
    return InitialLaw{SampleLaw{std::move(samples)}};
}

double InitialLaw::mean() const {
    struct Visitor {
        double operator()(const GaussianLaw& g) const { return g.mean; }
        double operator()(const DiracLaw& d) const { return d.x0; }
        double operator()(const SampleLaw& s) const {
            return pairwise_sum(s.samples) / static_cast<double>(s.samples.size());
        }
    };
    return std::visit(Visitor{}, kind);
}

double InitialLaw::variance() const {
    struct Visitor {
        double operator()(const GaussianLaw& g) const { return g.variance; }
        double operator()(const DiracLaw&) const { return 0.0; }
        double operator()(const SampleLaw& s) const {
            const double n = static_cast<double>(s.samples.size());
            const double m = pairwise_sum(s.samples) / n;
            std::vector<double> sq(s.samples.size());
            std::transform(s.samples.begin(), s.samples.end(), sq.begin(),
                           [m](double v) { return (v - m) * (v - m); });
            return pairwise_sum(sq) / n;
        }
    };
    return std::visit(Visitor{}, kind);
}

double Policy::control(std::size_t k, double t, double x, double z, double stat) const {
    struct Visitor {
        std::size_t k;
        double t, x, z, stat;
        double operator()(const LinearGain& p) const { return -p.gain[k] * x; }
        double operator()(const AffineMeanField& p) const { return -p.gain[k] * x - p.offset[k]; }
        double operator()(const CallbackPolicy& p) const { return p.fn(t, x, z, stat); }
    };
    return std::visit(Visitor{k, t, x, z, stat}, kind);
}

void Policy::check_against(const TimeGrid& grid) const {
    const auto n = grid.n_nodes();
    const bool ok = std::visit(
        [n](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearGain>) {
                return p.gain.size() == n;
            } else if constexpr (std::is_same_v<P, AffineMeanField>) {
                return p.gain.size() == n && p.offset.size() == n;
            } else {
                return static_cast<bool>(p.fn);
            }
        },
        kind);
    if (!ok) {
        throw Error(ErrorCode::InvalidInput, "policy samples do not match the time grid nodes");
    }
}

Policy Policy::zero(const TimeGrid& grid) {
    return Policy{LinearGain{std::vector<double>(grid.n_nodes(), 0.0)}};
}

GenericModel to_generic(const LQScalarModel& m, double beta) {
    GenericModel out;
    out.f = [q = m.q, r = m.r](double x, double, double v) { return 0.5 * (q * x * x + r * v * v); };
    out.g = [a = m.a, b = m.b](double x, double, double v) { return a * x + b * v; };
    out.sigma = [s = m.sigma](double) { return s; };
    out.h = [qT = m.qT, beta](double x, double stat) { return 0.5 * qT * x * x + beta * stat; };
    out.law_stat = [](std::span<const double> x) {
        return pairwise_sum(x) / static_cast<double>(x.size());
    };
    return out;
}

namespace {

void check_grid_and_risk(const RiskParams& risk, const TimeGrid& grid, ValidationOutcome& out) {
    if (!std::isfinite(risk.alpha) || !std::isfinite(risk.beta)) {
        out.violations.emplace_back("risk parameters must be finite");
    } else if (risk.alpha <= 0.0) {
        out.violations.emplace_back("alpha must be > 0 (apply risk_seeking_transform for alpha < 0)");
    }
    if (!std::isfinite(grid.horizon())) out.violations.emplace_back("horizon must be finite");
}

bool is_symmetric(const Eigen::MatrixXd& m) {
    return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
}

bool is_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    return eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
}

} // namespace

ValidationOutcome validate_model(const LQScalarModel& m, const RiskParams& risk, const TimeGrid& grid) {
    ValidationOutcome out;
    check_grid_and_risk(risk, grid, out);
    for (double v : {m.a, m.b, m.sigma, m.r, m.q, m.qT}) {
        if (!std::isfinite(v)) {
            out.violations.emplace_back("model contains non-finite coefficients");
            return out;
        }
    }
    if (!(m.sigma > 0.0)) out.violations.emplace_back("sigma must be > 0");
    if (!(m.r > 0.0)) out.violations.emplace_back("R not positive definite");
    if (m.q < 0.0) out.violations.emplace_back("Q not positive semidefinite");
    if (m.qT < 0.0) out.violations.emplace_back("Q_T not positive semidefinite");
    if (m.r > 0.0 && m.b * m.b / m.r - risk.alpha * m.sigma * m.sigma < 0.0) {
        std::ostringstream msg;
        msg << "b^2/r - alpha*sigma^2 = " << m.b * m.b / m.r - risk.alpha * m.sigma * m.sigma
            << " < 0: Riccati solution may blow up in finite time";
        out.warnings.push_back(msg.str());
    }
    return out;
}

ValidationOutcome validate_model(const LQMatrixModel& m, const RiskParams& risk, const TimeGrid& grid) {
    ValidationOutcome out;
    check_grid_and_risk(risk, grid, out);
    const auto n = m.A.rows();
    const auto d = m.B.cols();
    if (m.A.cols() != n || m.B.rows() != n || m.Q.rows() != n || m.Q.cols() != n || m.QT.rows() != n ||
        m.QT.cols() != n || m.R.rows() != d || m.R.cols() != d || m.Sigma.rows() != n || n == 0 || d == 0) {
        out.violations.emplace_back("matrix dimensions are inconsistent");
        return out;
    }
    for (const auto* mat : {&m.A, &m.B, &m.Q, &m.R, &m.QT, &m.Sigma}) {
        if (!mat->allFinite()) {
            out.violations.emplace_back("model contains non-finite coefficients");
            return out;
        }
    }
    if (!is_symmetric(m.R) || Eigen::LLT<Eigen::MatrixXd>(m.R).info() != Eigen::Success) {
        out.violations.emplace_back("R not positive definite");
    }
    if (!is_symmetric(m.Q) || !is_psd(m.Q)) out.violations.emplace_back("Q not symmetric positive semidefinite");
    if (!is_symmetric(m.QT) || !is_psd(m.QT)) {
        out.violations.emplace_back("Q_T not symmetric positive semidefinite");
    }
    if (out.ok()) {
        const Eigen::MatrixXd gain = m.B * m.R.llt().solve(m.B.transpose()) - risk.alpha * m.diffusion_matrix();
        if (!is_psd(gain)) {
            out.warnings.emplace_back(
                "B R^-1 B' - alpha a is indefinite: Riccati solution may blow up in finite time");
        }
    }
    return out;
}

GenericModel risk_seeking_transform(const GenericModel& model) {
    GenericModel out = model;
    out.f = [f = model.f](double x, double stat, double v) { return -f(x, stat, v); };
    out.h = [h = model.h](double x, double stat) { return -h(x, stat); };
    return out;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const auto half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

} // namespace riskmf
