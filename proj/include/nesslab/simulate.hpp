#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "nesslab/linearized.hpp"

namespace nesslab {

enum class Scheme { SemiImplicit, Explicit };

/// RNG identity recorded in manifests; trajectories derive their streams from
/// (seed, trajectory index).
inline constexpr const char* kRngName = "mt19937_64/std::normal_distribution";

uint64_t derive_seed(uint64_t base, uint64_t index);

struct SimConfig {
    double dt = 1e-4;
    long n_steps = 20000;    // post-burn-in steps that enter the statistics
    long burn_in = -1;       // -1: ten relaxation times of the slowest mode
    int n_trajectories = 1;
    uint64_t seed = 1;
    Scheme scheme = Scheme::SemiImplicit;
    // Errors come from batch means; batches are spread over the ensemble so
    // that with many trajectories each batch is one independent trajectory.
    int target_batches = 20;
};

long resolve_burn_in(const SimConfig& cfg, const LinearizedSystem& sys);

/// One trajectory of the fluctuation Langevin dynamics; states are the
/// stream the estimators consume. Noise is sampled on flux points and pushed
/// through the divergence via the factor F. Same seed => bit-identical runs.
class OmSimulator {
public:
    OmSimulator(const LinearizedSystem& sys, const SimConfig& cfg, uint64_t trajectory_seed);

    void step();
    const Eigen::VectorXd& state() const { return state_; }
    double dt() const { return dt_; }

private:
    const LinearizedSystem& sys_;
    double dt_;
    Scheme scheme_;
    Eigen::PartialPivLU<Eigen::MatrixXd> drift_lu_;  // I - dt L
    Eigen::MatrixXd noise_gain_;                     // sqrt(dt) * F
    Eigen::VectorXd state_;
    Eigen::VectorXd normals_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_;
};

/// Time-and-ensemble second-moment estimator with batch-means errors.
struct EnsembleStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd std_error;
    Eigen::MatrixXd effective_samples;
    std::vector<double> lag_times;
    std::vector<Eigen::MatrixXd> lag_covariances;  // E(xi_{t+tau} (x) xi_t)
    std::vector<Eigen::MatrixXd> lag_std_errors;
    std::vector<double> skipped_lag_times;  // lags beyond the sampled window
    long total_samples = 0;
    int total_batches = 0;
    bool low_confidence = false;
};

EnsembleStats estimate_covariance(const LinearizedSystem& sys, const SimConfig& cfg,
                                  const std::vector<long>& lag_steps = {});

} // namespace nesslab
