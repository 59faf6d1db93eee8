#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nesslab/model.hpp"
#include "nesslab/simulate.hpp"
#include "nesslab/ssep.hpp"

namespace nesslab {

/// Minimal TOML reader covering what run configs use: [table] headers,
/// comments, and key = string | number | boolean | [array] entries. Keys are
/// returned dotted ("model.name") with their source line for diagnostics.
struct TomlValue {
    enum class Type { String, Number, Boolean, Array };
    Type type = Type::Number;
    std::string str;
    double num = 0.0;
    bool boolean = false;
    std::vector<TomlValue> array;
    int line = -1;
};

using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);

struct RunConfig {
    // [run]
    std::string out_dir = "out";
    uint64_t seed = 20240801;
    std::vector<int> grids = {32, 64, 128};
    bool quiet = false;

    // [model]
    std::string model_name = "ssep";
    std::vector<double> q_left = {0.2};
    std::vector<double> q_right = {0.8};
    std::map<std::string, double> model_params;
    std::optional<std::vector<double>> window_lo;
    std::optional<std::vector<double>> window_hi;

    // [steady]
    double steady_tol = 1e-10;
    int steady_max_iter = 60;

    // [fluct]
    bool dump_matrices = false;

    // [correlation]
    double separation_cutoff = 0.25;
    double tau_lr_scale = 1e-3;
    double tau_sr_scale = 1e-6;

    // [simulate]
    int sim_grid = 16;
    double sim_dt = 2e-5;
    long sim_steps = 10000;
    long sim_burn_in = -1;
    int sim_trajectories = 200;
    std::string sim_scheme = "semi_implicit";
    std::vector<double> sim_lags = {0.05};

    // [ssep]
    int ssep_sites = 100;
    long ssep_sweeps = 40000000;
    long ssep_burn_in_sweeps = 200000;
    int ssep_chains = 2;
    long ssep_sample_stride = 0;

    ModelSpec build_model() const;
    SimConfig sim_config() const;
    LatticeConfig lattice_config() const;
};

RunConfig config_from_toml(const TomlTable& toml);
RunConfig load_run_config(const std::string& path);

/// Throws ConfigError on structural problems (empty grid list, unknown model,
/// non-positive tolerances, ...).
void validate_config(const RunConfig& cfg);

} // namespace nesslab
