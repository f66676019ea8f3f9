#include "riskmf/config.hpp"

#include "riskmf/error.hpp"
#include "riskmf/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace riskmf {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Drops a `#` comment that is outside quotes.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_value(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw Error(ErrorCode::InvalidInput, "empty value");
    auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    // Comma-separated lists without brackets, e.g. --set sweep.values=0.1,0.2 or formats = csv, json
    if (text.find(',') != std::string::npos) {
        auto list = nlohmann::json::array();
        std::istringstream items(text);
        std::string item;
        while (std::getline(items, item, ',')) list.push_back(parse_value(item));
        return list;
    }
    return nlohmann::json(text);
}

} // namespace

ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']') {
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos || section.empty()) {
            throw Error(ErrorCode::InvalidInput, "config line " + std::to_string(line_no) + " is not 'key = value'");
        }
        const std::string key = section + "." + trim(body.substr(0, eq));
        if (entries.contains(key)) throw Error(ErrorCode::InvalidInput, "duplicate config key " + key);
        try {
            entries[key] = parse_value(body.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidInput, "config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return entries;
}

void apply_override(ConfigEntries& entries, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(assignment.substr(0, eq));
    if (key.empty() || key.find('.') == std::string::npos) {
        throw Error(ErrorCode::InvalidInput, "override must look like section.key=value: " + assignment);
    }
    entries[key] = parse_value(assignment.substr(eq + 1));
}

namespace {

class Reader {
public:
    explicit Reader(const ConfigEntries& entries) : entries_(entries) {}

    const nlohmann::json* find(const std::string& key) {
        used_.insert(key);
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw Error(ErrorCode::InvalidInput, key + " must be a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) throw Error(ErrorCode::InvalidInput, key + " must be finite");
        return d;
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned()) throw Error(ErrorCode::InvalidInput, key + " must be a non-negative integer");
        return v->get<std::size_t>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (v->is_string()) return v->get<std::string>();
        return v->dump();
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw Error(ErrorCode::InvalidInput, key + " must be true or false");
        return v->get<bool>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        const nlohmann::json list = v->is_array() ? *v : nlohmann::json::array({*v});
        std::vector<double> out;
        for (const auto& item : list) {
            if (!item.is_number() || !std::isfinite(item.get<double>())) {
                throw Error(ErrorCode::InvalidInput, key + " must be a list of finite numbers");
            }
            out.push_back(item.get<double>());
        }
        return out;
    }

    std::set<std::string> words(const std::string& key, std::set<std::string> fallback,
                                const std::set<std::string>& allowed) {
        const auto* v = find(key);
        if (!v) return fallback;
        const nlohmann::json list = v->is_array() ? *v : nlohmann::json::array({*v});
        std::set<std::string> out;
        for (const auto& item : list) {
            if (!item.is_string() || !allowed.contains(item.get<std::string>())) {
                throw Error(ErrorCode::InvalidInput, key + " has an unsupported entry " + item.dump());
            }
            out.insert(item.get<std::string>());
        }
        return out;
    }

    void reject_unused() const {
        for (const auto& [key, value] : entries_) {
            if (!used_.contains(key)) throw Error(ErrorCode::InvalidInput, "unknown config key " + key);
        }
    }

private:
    const ConfigEntries& entries_;
    std::set<std::string> used_;
};

GenericModel double_well(const LQScalarModel& m, double beta) {
    GenericModel out = to_generic(m, beta);
    out.g = [b = m.b](double x, double, double v) { return x - x * x * x + b * v; };
    return out;
}

} // namespace

ScenarioConfig build_config(const ConfigEntries& entries) {
    Reader rd(entries);
    ScenarioConfig c;

    const std::string kind = rd.string("model.kind", "lq_scalar");
    if (kind == "lq_scalar") {
        c.kind = ModelKind::LqScalar;
    } else if (kind == "lq_matrix") {
        c.kind = ModelKind::LqMatrix;
    } else if (kind == "generic") {
        c.kind = ModelKind::Generic;
    } else {
        throw Error(ErrorCode::InvalidInput, "model.kind must be lq_scalar, lq_matrix or generic");
    }
    c.scalar.a = rd.number("model.a", c.scalar.a);
    c.scalar.b = rd.number("model.b", c.scalar.b);
    c.scalar.sigma = rd.number("model.sigma", c.scalar.sigma);
    c.scalar.r = rd.number("model.r", c.scalar.r);
    c.scalar.q = rd.number("model.q", c.scalar.q);
    c.scalar.qT = rd.number("model.qT", c.scalar.qT);
    c.generic_name = rd.string("model.name", c.generic_name);
    if (c.kind == ModelKind::Generic && c.generic_name != "lq" && c.generic_name != "double_well") {
        throw Error(ErrorCode::InvalidInput, "model.name must be one of: lq, double_well");
    }
    {
        nlohmann::json mat = nlohmann::json::object();
        for (const char* name : {"A", "B", "Q", "R", "QT", "Sigma"}) {
            if (const auto* v = rd.find(std::string("model.") + name)) mat[name] = *v;
        }
        if (c.kind == ModelKind::LqMatrix) c.matrix = matrix_model_from_json(mat);
        else if (!mat.empty()) throw Error(ErrorCode::InvalidInput, "matrix entries need model.kind = lq_matrix");
    }

    nlohmann::json init = nlohmann::json::object();
    for (const char* name : {"kind", "mean", "variance", "samples"}) {
        if (const auto* v = rd.find(std::string("init.") + name)) init[name] = *v;
    }
    c.init = initial_law_from_json(init);

    c.risk.alpha = rd.number("risk.alpha", c.risk.alpha);
    c.risk.beta = rd.number("risk.beta", c.risk.beta);
    c.risk_seeking = rd.boolean("risk.risk_seeking", false);
    if (c.risk_seeking) {
        if (c.kind != ModelKind::Generic) {
            throw Error(ErrorCode::InvalidInput, "risk_seeking is only supported for generic models");
        }
        c.risk.alpha = std::abs(c.risk.alpha);
    }
    if (!(c.risk.alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "risk.alpha must be > 0");

    c.grid = TimeGrid(rd.number("grid.T", 1.0), rd.count("grid.n_steps", 1000));

    c.n_particles = rd.count("mc.n_particles", c.n_particles);
    c.seed = rd.count("mc.seed", c.seed);
    c.snapshot_stride = rd.count("mc.snapshot_stride", c.snapshot_stride);
    const std::string policy = rd.string("mc.policy", "optimal");
    if (policy != "optimal" && policy != "zero") throw Error(ErrorCode::InvalidInput, "mc.policy must be optimal or zero");
    c.optimal_policy = policy == "optimal";

    c.n_x = rd.count("fpk.n_x", c.n_x);
    c.n_z = rd.count("fpk.n_z", c.n_z);
    const auto bounds = rd.numbers("fpk.x_bounds", {c.x_bounds.lo, c.x_bounds.hi});
    if (bounds.size() != 2) throw Error(ErrorCode::InvalidInput, "fpk.x_bounds must be [lo, hi]");
    c.x_bounds = {bounds[0], bounds[1]};
    c.fpk.z_max_factor = rd.number("fpk.z_max_factor", c.fpk.z_max_factor);
    if (rd.find("fpk.z_max")) c.fpk.z_max = rd.number("fpk.z_max", 1.0);

    c.output_dir = rd.string("output.directory", c.output_dir.string());
    c.formats = rd.words("output.formats", c.formats, {"csv", "json", "binary"});
    c.routes = rd.words("output.routes", c.routes, {"closed_form", "mc", "pde"});

    c.sweep_key = rd.string("sweep.key", "");
    c.sweep_values = rd.numbers("sweep.values", {});

    c.alphas = rd.numbers("validate.alphas", c.alphas);
    c.alpha_particles = rd.count("validate.alpha_particles", c.alpha_particles);
    c.chi_particles = rd.count("validate.chi_particles", c.chi_particles);

    c.id = rd.string("output.scenario_id", c.id);
    rd.reject_unused();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto entries = parse_config_text(buf.str());
    for (const auto& o : overrides) apply_override(entries, o);
    return build_config(entries);
}

Scenario ScenarioConfig::scenario() const {
    Scenario s;
    s.id = id;
    s.model = scalar;
    s.risk = risk;
    s.init = init;
    s.grid = grid;
    s.n_particles = n_particles;
    s.seed = seed;
    s.snapshot_stride = snapshot_stride;
    s.n_x = n_x;
    s.n_z = n_z;
    s.x_bounds = x_bounds;
    s.fpk = fpk;
    s.optimal_policy = optimal_policy;
    return s;
}

GenericModel ScenarioConfig::generic_model() const {
    GenericModel m = generic_name == "double_well" ? double_well(scalar, risk.beta) : to_generic(scalar, risk.beta);
    return risk_seeking ? risk_seeking_transform(m) : m;
}

} // namespace riskmf
