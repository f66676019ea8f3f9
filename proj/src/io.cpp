#include "riskmf/io.hpp"

#include "riskmf/error.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>

namespace riskmf {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_riccati_csv(std::ostream& os, const RiccatiSolution& sol, std::span<const double> y) {
    const auto dim = static_cast<std::size_t>(sol.Pi.front().rows());
    os << 't';
    if (dim == 1) {
        os << ",pi";
    } else {
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) os << ",Pi_" << i << j;
    }
    os << ",rho,omega,y,blow_up_t\n";
    const std::string blow = sol.blow_up ? format_double(sol.blow_up->t_node) : "";
    for (std::size_t k = 0; k < sol.grid.n_nodes(); ++k) {
        os << format_double(sol.grid.t(k));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                os << ',' << format_double(sol.Pi[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        os << ',' << format_double(sol.rho[k]);
        os << ',' << (sol.omega.empty() ? "" : format_double(sol.omega[k]));
        os << ',' << (y.empty() ? "" : format_double(y[k]));
        os << ',' << blow << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,mean_x,var_x,mean_z\n";
    for (const auto& s : traj.summary) {
        os << format_double(s.t) << ',' << format_double(s.mean_x) << ',' << format_double(s.var_x) << ','
           << format_double(s.mean_z) << '\n';
    }
}

void write_density_csv(std::ostream& os, const GridDensity2D& density) {
    os << "x,z,mu\n";
    for (std::size_t i = 0; i < density.x.n; ++i) {
        for (std::size_t j = 0; j < density.z.n; ++j) {
            os << format_double(density.x.center(i)) << ',' << format_double(density.z.node(j)) << ','
               << format_double(std::max(density.at(i, j), 0.0)) << '\n';
        }
    }
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw Error(ErrorCode::Io, "truncated binary file");
    return value;
}

void put_doubles(std::ostream& os, std::span<const double> values) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> get_doubles(std::istream& is, std::size_t n) {
    std::vector<double> out(n);
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw Error(ErrorCode::Io, "truncated binary file");
    return out;
}

void expect_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0) throw Error(ErrorCode::Io, std::string("bad magic, expected ") + magic);
    if (get<std::uint32_t>(is) != kBinaryVersion) throw Error(ErrorCode::Io, "unsupported binary version");
}

} // namespace

void write_ensemble_binary(std::ostream& os, const Trajectory& traj) {
    os.write("MFRS", 4);
    put<std::uint32_t>(os, kBinaryVersion);
    put<std::uint64_t>(os, traj.n_particles());
    put<std::uint64_t>(os, traj.snapshots.size());
    for (const auto& snap : traj.snapshots) {
        put<double>(os, snap.t);
        put_doubles(os, snap.x);
        put_doubles(os, snap.z);
    }
}

std::vector<ParticleEnsemble> read_ensemble_binary(std::istream& is) {
    expect_magic(is, "MFRS");
    const auto n = get<std::uint64_t>(is);
    const auto snaps = get<std::uint64_t>(is);
    std::vector<ParticleEnsemble> out;
    for (std::uint64_t s = 0; s < snaps; ++s) {
        ParticleEnsemble e;
        e.t = get<double>(is);
        e.x = get_doubles(is, n);
        e.z = get_doubles(is, n);
        out.push_back(std::move(e));
    }
    return out;
}

void write_density_binary(std::ostream& os, const GridDensity2D& density) {
    os.write("MFPK", 4);
    put<std::uint32_t>(os, kBinaryVersion);
    put<std::uint64_t>(os, density.x.n);
    put<std::uint64_t>(os, density.z.n);
    put<double>(os, density.x.lo);
    put<double>(os, density.x.hi);
    put<double>(os, density.z.z_max);
    put<double>(os, density.t);
    put_doubles(os, density.mu);
}

GridDensity2D read_density_binary(std::istream& is) {
    expect_magic(is, "MFPK");
    GridDensity2D d;
    d.x.n = get<std::uint64_t>(is);
    d.z.n = get<std::uint64_t>(is);
    d.x.lo = get<double>(is);
    d.x.hi = get<double>(is);
    d.z.z_max = get<double>(is);
    d.t = get<double>(is);
    d.mu = get_doubles(is, d.x.n * d.z.n);
    return d;
}

nlohmann::json to_json(const CostEstimate& est) {
    return {{"j_alpha", est.j_alpha},
            {"log_j_alpha", est.log_j_alpha},
            {"certainty_equivalent", est.certainty_equivalent},
            {"std_error", est.std_error},
            {"n", est.n}};
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace

nlohmann::json to_json(const ValueReport& r) {
    return {{"scenario_id", r.scenario_id},
            {"alpha", r.alpha},
            {"beta", r.beta},
            {"value_closed_form", optional_number(r.value_closed_form)},
            {"value_mc", optional_number(r.value_mc)},
            {"mc_std_error", optional_number(r.mc_std_error)},
            {"value_pde", optional_number(r.value_pde)},
            {"certainty_equivalent", optional_number(r.certainty_equivalent)},
            {"residual_beta2", optional_number(r.residual_beta2)},
            {"blow_up", r.blow_up}};
}

nlohmann::json to_json(const CheckReport& r) {
    return {{"name", r.name},
            {"passed", r.passed},
            {"applicable", r.applicable},
            {"statistic", std::isfinite(r.statistic) ? nlohmann::json(r.statistic) : nlohmann::json("inf")},
            {"threshold", r.threshold},
            {"detail", r.detail}};
}

nlohmann::json to_json(const TerminalMoment& m) {
    return {{"value", m.value},
            {"log_value", m.log_value},
            {"boundary_fraction", m.boundary_fraction},
            {"truncation_warning", m.truncation_warning}};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, std::string(what) + " must be a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (!keys.contains(item.key())) {
            throw Error(ErrorCode::InvalidInput, std::string("unknown key '") + item.key() + "' in " + what);
        }
    }
}

double number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be finite");
    return v;
}

Eigen::MatrixXd matrix(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidInput, std::string("missing matrix ") + key);
    const auto& rows = j.at(key);
    if (!rows.is_array() || rows.empty()) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be a matrix");
    const auto n_cols = rows.front().size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_array() || rows[i].size() != n_cols) {
            throw Error(ErrorCode::InvalidInput, std::string(key) + " rows must have equal length");
        }
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (!rows[i][c].is_number()) throw Error(ErrorCode::InvalidInput, std::string(key) + " entries must be numbers");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
        }
    }
    if (!out.allFinite()) throw Error(ErrorCode::InvalidInput, std::string(key) + " must be finite");
    return out;
}

} // namespace

LQScalarModel scalar_model_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"a", "b", "sigma", "r", "q", "qT"}, "scalar model");
    LQScalarModel m;
    m.a = number(j, "a", m.a);
    m.b = number(j, "b", m.b);
    m.sigma = number(j, "sigma", m.sigma);
    m.r = number(j, "r", m.r);
    m.q = number(j, "q", m.q);
    m.qT = number(j, "qT", m.qT);
    return m;
}

LQMatrixModel matrix_model_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"A", "B", "Q", "R", "QT", "Sigma"}, "matrix model");
    LQMatrixModel m;
    m.A = matrix(j, "A");
    m.B = matrix(j, "B");
    m.Q = matrix(j, "Q");
    m.R = matrix(j, "R");
    m.QT = matrix(j, "QT");
    m.Sigma = matrix(j, "Sigma");
    return m;
}

RiskParams risk_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"alpha", "beta"}, "risk parameters");
    RiskParams r;
    r.alpha = number(j, "alpha", r.alpha);
    r.beta = number(j, "beta", r.beta);
    return r;
}

TimeGrid grid_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"T", "n_steps"}, "time grid");
    if (!j.contains("n_steps") || !j.at("n_steps").is_number_unsigned()) {
        throw Error(ErrorCode::InvalidInput, "n_steps must be a non-negative integer");
    }
    return TimeGrid(number(j, "T", 1.0), j.at("n_steps").get<std::size_t>());
}

InitialLaw initial_law_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"kind", "mean", "variance", "samples"}, "initial law");
    const std::string kind = j.value("kind", std::string("dirac"));
    if (kind == "dirac") return InitialLaw::dirac(number(j, "mean", 0.0));
    if (kind == "gaussian") return InitialLaw::gaussian(number(j, "mean", 0.0), number(j, "variance", 1.0));
    if (kind == "samples") {
        if (!j.contains("samples") || !j.at("samples").is_array()) {
            throw Error(ErrorCode::InvalidInput, "samples must be an array");
        }
        return InitialLaw::from_samples(j.at("samples").get<std::vector<double>>());
    }
    throw Error(ErrorCode::InvalidInput, "unknown initial law kind '" + kind + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << contents;
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

} // namespace riskmf
