#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nesslab/config.hpp"
#include "nesslab/errors.hpp"
#include "nesslab/pipeline.hpp"

namespace {

std::vector<int> parse_grid_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nesslab: stationary profiles, fluctuation covariances and the long-range "
                 "correlation criterion for boundary-driven nonlinear diffusions"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string grids;
    uint64_t seed = 0;
    bool have_seed = false;
    bool quiet = false;

    app.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--grids", grids, "comma-separated grid sizes, e.g. \"16,32,64\"");
    app.add_option("--seed", seed, "base RNG seed (overrides config)")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_flag("--quiet", quiet, "suppress progress lines");

    const char* descriptions[][2] = {
        {"steady", "solve stationary profiles on every grid"},
        {"fluct", "assemble the linearized generator and noise; report spectra"},
        {"corr", "exact stationary covariance, local/long-range split, verdict"},
        {"phi", "long-range criterion tables and verdict"},
        {"simulate", "sample the fluctuation process and estimate covariances"},
        {"ssep", "microscopic exclusion-process oracle and macro comparison"},
        {"verify", "full pipeline plus the quality gates"},
    };
    for (const auto& d : descriptions) app.add_subcommand(d[0], d[1])->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        nesslab::RunConfig cfg =
            config_path.empty() ? nesslab::RunConfig{} : nesslab::load_run_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!grids.empty()) cfg.grids = parse_grid_list(grids);
        if (have_seed) cfg.seed = seed;
        if (quiet) cfg.quiet = true;
        nesslab::validate_config(cfg);

        const std::string command = app.get_subcommands().front()->get_name();
        return nesslab::run_command(command, cfg);
    } catch (const nesslab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return nesslab::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nesslab::kExitSolver;
    }
}
