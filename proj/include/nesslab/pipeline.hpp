#pragma once

#include <string>

#include "nesslab/config.hpp"

namespace nesslab {

/// Exit codes shared by the CLI: 0 success, 2 config error, 3 solver
/// failure, 4 acceptance-gate failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitAcceptance = 4;

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Runs one subcommand ("steady", "fluct", "corr", "phi", "simulate",
/// "ssep", "verify") against the config, writing outputs and a manifest into
/// the resolved output directory. Returns the exit code. Idempotent given
/// (config, seed); manifests differ only in their "timings" block.
int run_command(const std::string& command, const RunConfig& cfg);

/// Output directory after applying the NESSLAB_OUT_ROOT override.
std::string resolve_out_dir(const RunConfig& cfg);

} // namespace nesslab
