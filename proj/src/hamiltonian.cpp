#include "riskmf/hamiltonian.hpp"

#include "riskmf/error.hpp"

#include <array>
#include <cmath>

namespace riskmf {

namespace {

void require_positive_rho(double rho) {
    if (!(rho > 0.0)) {
        throw Error(ErrorCode::NonpositiveRho, "rho = D_z u must be positive");
    }
}

} // namespace

HamiltonianResult lq_hamiltonian(const LQScalarModel& m, double x, double q, double rho) {
    require_positive_rho(rho);
    const double v_star = -(m.b / m.r) * q / rho;
    const double value = 0.5 * rho * m.q * x * x + m.a * x * q - 0.5 * (m.b * m.b / m.r) * q * q / rho;
    return {value, v_star};
}

HamiltonianResult numeric_hamiltonian(const GenericModel& model, double x, double stat, double q, double rho,
                                      Interval v_bounds, double tol) {
    require_positive_rho(rho);
    if (!(v_bounds.hi > v_bounds.lo) || !std::isfinite(v_bounds.lo) || !std::isfinite(v_bounds.hi)) {
        throw Error(ErrorCode::EmptyBounds, "control interval is empty or not finite");
    }
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tolerance must be > 0");

    const auto objective = [&](double v) { return rho * model.f(x, stat, v) + q * model.g(x, stat, v); };

    constexpr std::size_t kSeeds = 16;
    const double step = (v_bounds.hi - v_bounds.lo) / static_cast<double>(kSeeds - 1);
    std::array<double, kSeeds> vs{};
    std::size_t best = 0;
    double best_val = 0.0;
    for (std::size_t i = 0; i < kSeeds; ++i) {
        vs[i] = i + 1 == kSeeds ? v_bounds.hi : v_bounds.lo + step * static_cast<double>(i);
        const double val = objective(vs[i]);
        if (i == 0 || val < best_val || (val == best_val && std::abs(vs[i]) < std::abs(vs[best]))) {
            best = i;
            best_val = val;
        }
    }

    double lo = best == 0 ? vs[0] : vs[best - 1];
    double hi = best + 1 == kSeeds ? vs[kSeeds - 1] : vs[best + 1];

    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = objective(c);
    double fd = objective(d);
    while (hi - lo > tol) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }

    HamiltonianResult out{best_val, vs[best]};
    const double mid = 0.5 * (lo + hi);
    const double mid_val = objective(mid);
    if (mid_val < out.value || (mid_val == out.value && std::abs(mid) < std::abs(out.v_star))) {
        out = {mid_val, mid};
    }
    return out;
}

double tilde_reduce(const ReducedHamiltonian& H, double x, double stat, double q, double rho) {
    require_positive_rho(rho);
    return rho * H(x, stat, q / rho);
}

} // namespace riskmf
