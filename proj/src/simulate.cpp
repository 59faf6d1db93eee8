#include "nesslab/simulate.hpp"

#include <cmath>

#include "nesslab/errors.hpp"

namespace nesslab {

uint64_t derive_seed(uint64_t base, uint64_t index) {
    // splitmix64 step on the combined word
    uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

long resolve_burn_in(const SimConfig& cfg, const LinearizedSystem& sys) {
    if (cfg.burn_in >= 0) return cfg.burn_in;
    const double abscissa = std::abs(sys.spectral_abscissa);
    if (abscissa <= 0.0) throw ArgumentError("resolve_burn_in: system is not dissipative");
    return static_cast<long>(std::ceil(10.0 / (abscissa * cfg.dt)));
}

OmSimulator::OmSimulator(const LinearizedSystem& sys, const SimConfig& cfg,
                         uint64_t trajectory_seed)
    : sys_(sys), dt_(cfg.dt), scheme_(cfg.scheme), rng_(trajectory_seed), gauss_(0.0, 1.0) {
    if (!(dt_ > 0.0)) throw ArgumentError("OmSimulator: dt must be positive");
    if (sys.spectral_abscissa >= 0.0) {
        throw ArgumentError("OmSimulator: generator is not dissipative");
    }
    const int dim = static_cast<int>(sys.L.rows());
    if (scheme_ == Scheme::SemiImplicit) {
        drift_lu_.compute(Eigen::MatrixXd::Identity(dim, dim) - dt_ * sys.L);
    } else {
        const double bound = 0.5 * sys.grid.h * sys.grid.h / std::max(sys.mobility_bound, 1e-300);
        if (dt_ > bound) {
            throw ArgumentError("OmSimulator: explicit scheme unstable; need dt <= " +
                                std::to_string(bound));
        }
    }
    noise_gain_ = std::sqrt(dt_) * sys.F;
    state_ = Eigen::VectorXd::Zero(dim);
    normals_.resize(sys.F.cols());
}

void OmSimulator::step() {
    for (int i = 0; i < normals_.size(); ++i) normals_(i) = gauss_(rng_);
    if (scheme_ == Scheme::SemiImplicit) {
        state_ = drift_lu_.solve(state_ + noise_gain_ * normals_);
    } else {
        state_ += dt_ * (sys_.L * state_) + noise_gain_ * normals_;
    }
}

namespace {

// Streaming mean/variance over equally weighted samples (batch means here).
struct MatrixWelford {
    long count = 0;
    Eigen::MatrixXd mean;
    Eigen::MatrixXd m2;

    void init(int rows, int cols) {
        mean = Eigen::MatrixXd::Zero(rows, cols);
        m2 = Eigen::MatrixXd::Zero(rows, cols);
    }
    void add(const Eigen::MatrixXd& x) {
        ++count;
        const Eigen::MatrixXd delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta.cwiseProduct(x - mean);
    }
    Eigen::MatrixXd variance() const {
        if (count < 2) return Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
        return m2 / static_cast<double>(count - 1);
    }
};

} // namespace

EnsembleStats estimate_covariance(const LinearizedSystem& sys, const SimConfig& cfg,
                                  const std::vector<long>& lag_steps) {
    if (cfg.n_trajectories < 1) throw ArgumentError("estimate_covariance: need a trajectory");
    const long burn_in = resolve_burn_in(cfg, sys);
    if (cfg.n_steps < 1) {
        throw ArgumentError("estimate_covariance: need at least one post-burn-in step");
    }
    const int dim = static_cast<int>(sys.L.rows());
    const long steps = cfg.n_steps;
    std::vector<long> usable_lags;
    std::vector<double> skipped;
    long max_lag = 0;
    for (long l : lag_steps) {
        if (l < 0) throw ArgumentError("estimate_covariance: lags must be non-negative");
        if (l >= steps) {
            skipped.push_back(l * cfg.dt);  // beyond the sampled window
            continue;
        }
        usable_lags.push_back(l);
        max_lag = std::max(max_lag, l);
    }

    int batches = std::max(1, cfg.target_batches / cfg.n_trajectories);
    if (steps < batches) batches = static_cast<int>(std::max<long>(steps, 1));
    const long batch_len = steps / batches;

    MatrixWelford cov_batches;
    cov_batches.init(dim, dim);
    std::vector<MatrixWelford> lag_batches(usable_lags.size());
    for (auto& w : lag_batches) w.init(dim, dim);

    Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd inst_sum = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd inst_sumsq = Eigen::MatrixXd::Zero(dim, dim);
    long total_samples = 0;

    // Ring buffer over the last max_lag+1 states.
    std::vector<Eigen::VectorXd> ring(static_cast<std::size_t>(max_lag) + 1);

    for (int traj = 0; traj < cfg.n_trajectories; ++traj) {
        OmSimulator sim(sys, cfg, derive_seed(cfg.seed, static_cast<uint64_t>(traj)));
        for (long k = 0; k < burn_in; ++k) sim.step();

        Eigen::MatrixXd batch_sum = Eigen::MatrixXd::Zero(dim, dim);
        std::vector<Eigen::MatrixXd> lag_sum(usable_lags.size(),
                                             Eigen::MatrixXd::Zero(dim, dim));
        std::vector<long> lag_count(usable_lags.size(), 0);
        long in_batch = 0;
        int batch_index = 0;

        for (long k = 0; k < steps; ++k) {
            sim.step();
            const Eigen::VectorXd& x = sim.state();
            ring[static_cast<std::size_t>(k % (max_lag + 1))] = x;

            const Eigen::MatrixXd outer = x * x.transpose();
            batch_sum += outer;
            mean_acc += x;
            inst_sum += outer;
            inst_sumsq += outer.cwiseProduct(outer);
            ++total_samples;

            for (std::size_t li = 0; li < usable_lags.size(); ++li) {
                const long l = usable_lags[li];
                if (k >= l) {
                    const Eigen::VectorXd& past =
                        ring[static_cast<std::size_t>((k - l) % (max_lag + 1))];
                    lag_sum[li] += x * past.transpose();
                    ++lag_count[li];
                }
            }

            ++in_batch;
            const bool last_step = (k == steps - 1);
            if ((in_batch >= batch_len && batch_index < batches - 1) || last_step) {
                cov_batches.add(batch_sum / static_cast<double>(in_batch));
                for (std::size_t li = 0; li < usable_lags.size(); ++li) {
                    if (lag_count[li] > 0) {
                        lag_batches[li].add(lag_sum[li] / static_cast<double>(lag_count[li]));
                    }
                    lag_sum[li].setZero();
                    lag_count[li] = 0;
                }
                batch_sum.setZero();
                in_batch = 0;
                ++batch_index;
            }
        }
    }

    EnsembleStats stats;
    stats.total_samples = total_samples;
    stats.total_batches = static_cast<int>(cov_batches.count);
    stats.low_confidence = stats.total_batches < 20;
    stats.mean = mean_acc / static_cast<double>(total_samples);
    stats.covariance = cov_batches.mean;
    stats.covariance = 0.5 * (stats.covariance + stats.covariance.transpose()).eval();
    stats.std_error =
        (cov_batches.variance() / static_cast<double>(std::max<long>(cov_batches.count, 1)))
            .cwiseSqrt();

    const Eigen::MatrixXd inst_mean = inst_sum / static_cast<double>(total_samples);
    const Eigen::MatrixXd inst_var =
        (inst_sumsq / static_cast<double>(total_samples) - inst_mean.cwiseProduct(inst_mean))
            .cwiseMax(0.0);
    stats.effective_samples = inst_var.cwiseQuotient(
        stats.std_error.cwiseProduct(stats.std_error).cwiseMax(1e-300));

    for (std::size_t li = 0; li < usable_lags.size(); ++li) {
        stats.lag_times.push_back(usable_lags[li] * cfg.dt);
        stats.lag_covariances.push_back(lag_batches[li].mean);
        stats.lag_std_errors.push_back(
            (lag_batches[li].variance() /
             static_cast<double>(std::max<long>(lag_batches[li].count, 1)))
                .cwiseSqrt());
    }
    stats.skipped_lag_times = std::move(skipped);
    return stats;
}

} // namespace nesslab
