#include "nesslab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "nesslab/errors.hpp"

namespace nesslab {

namespace {

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

TomlValue parse_scalar(const std::string& text, int line) {
    TomlValue v;
    v.line = line;
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        v.type = TomlValue::Type::String;
        v.str = text.substr(1, text.size() - 2);
        return v;
    }
    if (text == "true" || text == "false") {
        v.type = TomlValue::Type::Boolean;
        v.boolean = text == "true";
        return v;
    }
    try {
        std::size_t used = 0;
        v.num = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        v.type = TomlValue::Type::Number;
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse value '" + text + "'", line);
    }
}

TomlValue parse_value(const std::string& text, int line) {
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') throw ConfigError("unterminated array", line);
        TomlValue v;
        v.type = TomlValue::Type::Array;
        v.line = line;
        const std::string inner = text.substr(1, text.size() - 2);
        std::string item;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                const std::string t = strip(item);
                if (!t.empty()) v.array.push_back(parse_scalar(t, line));
                item.clear();
            } else {
                item += c;
            }
        }
        const std::string t = strip(item);
        if (!t.empty()) v.array.push_back(parse_scalar(t, line));
        return v;
    }
    return parse_scalar(text, line);
}

} // namespace

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated table header", line_no);
            section = strip(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty table name", line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (val.empty()) throw ConfigError("missing value for key '" + key + "'", line_no);
        const std::string full = section.empty() ? key : section + "." + key;
        if (table.count(full)) throw ConfigError("duplicate key '" + full + "'", line_no);
        table[full] = parse_value(val, line_no);
    }
    return table;
}

namespace {

class TomlReader {
public:
    explicit TomlReader(const TomlTable& t) : t_(t) {}

    bool has(const std::string& key) const { return t_.count(key) > 0; }

    double number(const std::string& key, double dflt) const {
        auto it = t_.find(key);
        if (it == t_.end()) return dflt;
        require(it->second, TomlValue::Type::Number, key);
        return it->second.num;
    }
    long integer(const std::string& key, long dflt) const {
        return static_cast<long>(number(key, static_cast<double>(dflt)));
    }
    bool boolean(const std::string& key, bool dflt) const {
        auto it = t_.find(key);
        if (it == t_.end()) return dflt;
        require(it->second, TomlValue::Type::Boolean, key);
        return it->second.boolean;
    }
    std::string str(const std::string& key, const std::string& dflt) const {
        auto it = t_.find(key);
        if (it == t_.end()) return dflt;
        require(it->second, TomlValue::Type::String, key);
        return it->second.str;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> dflt) const {
        auto it = t_.find(key);
        if (it == t_.end()) return dflt;
        require(it->second, TomlValue::Type::Array, key);
        std::vector<double> out;
        for (const auto& v : it->second.array) {
            require(v, TomlValue::Type::Number, key);
            out.push_back(v.num);
        }
        return out;
    }

private:
    static void require(const TomlValue& v, TomlValue::Type t, const std::string& key) {
        if (v.type != t) throw ConfigError("wrong type for key '" + key + "'", v.line);
    }
    const TomlTable& t_;
};

} // namespace

RunConfig config_from_toml(const TomlTable& toml) {
    TomlReader r(toml);
    RunConfig c;

    c.out_dir = r.str("run.out_dir", c.out_dir);
    c.seed = static_cast<uint64_t>(r.number("run.seed", static_cast<double>(c.seed)));
    {
        std::vector<double> g = r.numbers("run.grids", {32, 64, 128});
        c.grids.clear();
        for (double v : g) c.grids.push_back(static_cast<int>(v));
    }
    c.quiet = r.boolean("run.quiet", c.quiet);

    c.model_name = r.str("model.name", c.model_name);
    c.q_left = r.numbers("model.q_left", c.q_left);
    c.q_right = r.numbers("model.q_right", c.q_right);
    for (const char* key : {"alpha", "epsilon", "mobility", "curvature"}) {
        const std::string full = std::string("model.") + key;
        if (r.has(full)) c.model_params[key] = r.number(full, 0.0);
    }
    if (r.has("model.mobility_coeffs")) {
        const auto ks = r.numbers("model.mobility_coeffs", {});
        for (std::size_t i = 0; i < ks.size(); ++i) c.model_params["k" + std::to_string(i)] = ks[i];
    }
    if (r.has("model.entropy_coeffs")) {
        const auto ss = r.numbers("model.entropy_coeffs", {});
        for (std::size_t i = 0; i < ss.size(); ++i) c.model_params["s" + std::to_string(i)] = ss[i];
    }
    if (r.has("model.window_lo")) c.window_lo = r.numbers("model.window_lo", {});
    if (r.has("model.window_hi")) c.window_hi = r.numbers("model.window_hi", {});

    c.steady_tol = r.number("steady.tol", c.steady_tol);
    c.steady_max_iter = static_cast<int>(r.integer("steady.max_iter", c.steady_max_iter));

    c.dump_matrices = r.boolean("fluct.dump_matrices", c.dump_matrices);

    c.separation_cutoff = r.number("correlation.separation_cutoff", c.separation_cutoff);
    c.tau_lr_scale = r.number("correlation.tau_lr_scale", c.tau_lr_scale);
    c.tau_sr_scale = r.number("correlation.tau_sr_scale", c.tau_sr_scale);

    c.sim_grid = static_cast<int>(r.integer("simulate.grid", c.sim_grid));
    c.sim_dt = r.number("simulate.dt", c.sim_dt);
    c.sim_steps = r.integer("simulate.n_steps", c.sim_steps);
    c.sim_burn_in = r.integer("simulate.burn_in", c.sim_burn_in);
    c.sim_trajectories = static_cast<int>(r.integer("simulate.n_trajectories", c.sim_trajectories));
    c.sim_scheme = r.str("simulate.scheme", c.sim_scheme);
    c.sim_lags = r.numbers("simulate.lags", c.sim_lags);

    c.ssep_sites = static_cast<int>(r.integer("ssep.sites", c.ssep_sites));
    c.ssep_sweeps = r.integer("ssep.sweeps", c.ssep_sweeps);
    c.ssep_burn_in_sweeps = r.integer("ssep.burn_in_sweeps", c.ssep_burn_in_sweeps);
    c.ssep_chains = static_cast<int>(r.integer("ssep.chains", c.ssep_chains));
    c.ssep_sample_stride = r.integer("ssep.sample_stride", c.ssep_sample_stride);

    validate_config(c);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_toml(parse_toml(buf.str()));
}

void validate_config(const RunConfig& cfg) {
    if (cfg.grids.empty()) throw ConfigError("run.grids must list at least one grid size");
    for (int m : cfg.grids) {
        if (m < 1) throw ConfigError("run.grids entries must be positive");
    }
    if (!catalog_has(cfg.model_name)) {
        throw ConfigError("model.name '" + cfg.model_name + "' is not in the catalog");
    }
    if (cfg.q_left.size() != cfg.q_right.size() || cfg.q_left.empty()) {
        throw ConfigError("model.q_left and model.q_right must be non-empty and equally sized");
    }
    if (!(cfg.steady_tol > 0.0)) throw ConfigError("steady.tol must be positive");
    if (!(cfg.sim_dt > 0.0)) throw ConfigError("simulate.dt must be positive");
    if (cfg.sim_steps < 1) throw ConfigError("simulate.n_steps must be positive");
    if (cfg.sim_trajectories < 1) throw ConfigError("simulate.n_trajectories must be >= 1");
    if (cfg.sim_scheme != "semi_implicit" && cfg.sim_scheme != "explicit") {
        throw ConfigError("simulate.scheme must be 'semi_implicit' or 'explicit'");
    }
    if (cfg.ssep_sites < 2) throw ConfigError("ssep.sites must be >= 2");
    if (cfg.ssep_burn_in_sweeps >= cfg.ssep_sweeps) {
        throw ConfigError("ssep.burn_in_sweeps must be smaller than ssep.sweeps");
    }
    if (cfg.window_lo.has_value() != cfg.window_hi.has_value()) {
        throw ConfigError("model.window_lo and model.window_hi must be given together");
    }
}

ModelSpec RunConfig::build_model() const {
    Eigen::VectorXd ql = Eigen::Map<const Eigen::VectorXd>(q_left.data(), q_left.size());
    Eigen::VectorXd qr = Eigen::Map<const Eigen::VectorXd>(q_right.data(), q_right.size());
    ModelSpec spec = catalog_entry(model_name).build(ql, qr, model_params);
    if (window_lo && window_hi) {
        if (static_cast<int>(window_lo->size()) != spec.n ||
            static_cast<int>(window_hi->size()) != spec.n) {
            throw ConfigError("model.window_lo/hi must have one entry per component");
        }
        spec.domain_window.lo = Eigen::Map<const Eigen::VectorXd>(window_lo->data(), spec.n);
        spec.domain_window.hi = Eigen::Map<const Eigen::VectorXd>(window_hi->data(), spec.n);
    }
    return spec;
}

SimConfig RunConfig::sim_config() const {
    SimConfig s;
    s.dt = sim_dt;
    s.n_steps = sim_steps;
    s.burn_in = sim_burn_in;
    s.n_trajectories = sim_trajectories;
    s.seed = seed;
    s.scheme = sim_scheme == "explicit" ? Scheme::Explicit : Scheme::SemiImplicit;
    return s;
}

LatticeConfig RunConfig::lattice_config() const {
    LatticeConfig l;
    l.sites = ssep_sites;
    l.rho_left = q_left.at(0);
    l.rho_right = q_right.at(0);
    l.sweeps = ssep_sweeps;
    l.burn_in_sweeps = ssep_burn_in_sweeps;
    l.seed = seed;
    l.chains = ssep_chains;
    l.sample_stride = ssep_sample_stride;
    return l;
}

} // namespace nesslab
