#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "nesslab/covariance.hpp"

namespace nesslab {

/// Boundary-driven exclusion chain. Bulk bonds exchange site contents at
/// rate 1; the wall sites are refreshed to Bernoulli(rho) at rate 1, which
/// realises injection at rate rho and extraction at rate 1-rho. One "sweep"
/// is sites+1 events (one event per clock on average).
struct LatticeConfig {
    int sites = 100;
    double rho_left = 0.2;
    double rho_right = 0.8;
    long sweeps = 1000000;
    long burn_in_sweeps = 20000;
    uint64_t seed = 1;
    int chains = 1;          // independent chains with derived seeds, merged
    long sample_stride = 0;  // events between samples; 0 = one per sweep
    int batches = 32;        // batch-means batches per chain
};

struct MicroStats {
    Eigen::VectorXd profile;
    Eigen::VectorXd profile_se;
    Eigen::MatrixXd scaled_covariance;  // N_s * <eta_i eta_j>_c
    Eigen::MatrixXd scaled_covariance_se;
    Eigen::VectorXd bond_current;  // signed, rightward positive; sites+1 bonds
    Eigen::VectorXd bond_current_se;
    Eigen::VectorXd state_histogram;     // only when sites <= 12
    Eigen::VectorXd state_histogram_se;  // ditto
    long events = 0;
    double total_time = 0.0;
    int batches = 0;
};

MicroStats run_ssep(const LatticeConfig& cfg);

/// Lattice-to-continuum comparison at x_i = i/(N_s+1). The macroscopic R and
/// profile are interpolated onto the lattice (R vanishes at the walls).
struct MacroComparison {
    double max_offdiag_dev = 0.0;
    double mean_offdiag_dev = 0.0;
    double max_abs_R = 0.0;  // largest interpolated |R| over lattice pairs
    int diag_within_3se = 0;
    int diag_total = 0;
    double max_diag_dev = 0.0;
    Eigen::VectorXd macro_profile_at_lattice;
    Eigen::MatrixXd macro_R_at_lattice;
};

MacroComparison compare_to_macro(const MicroStats& micro, const LatticeConfig& cfg,
                                 const GridCorrelation& macro);

} // namespace nesslab
