#include "nesslab/ssep.hpp"

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "nesslab/errors.hpp"
#include "nesslab/simulate.hpp"

namespace nesslab {

namespace {

struct BatchStats {
    long samples = 0;
    Eigen::VectorXd site_sum;      // sum of eta_i over samples
    Eigen::MatrixXd pair_sum;      // sum of eta_i eta_j, upper triangle filled
    Eigen::VectorXd hops;          // signed rightward hops per bond
    long events = 0;               // post-burn-in events inside the batch
    Eigen::VectorXd histogram;     // state counts (small lattices only)
};

struct ChainResult {
    std::vector<BatchStats> batches;
};

// Uniformised event chain: total rate is sites+1 and constant, so the jump
// chain observed at a fixed event stride has the stationary law of the
// continuous-time dynamics.
void run_chain(const LatticeConfig& cfg, long sweeps_this_chain, uint64_t chain_seed,
               ChainResult& out) {
    const int N = cfg.sites;
    const bool histogram = N <= 12;
    const long stride = cfg.sample_stride > 0 ? cfg.sample_stride : (N + 1);
    const long burn_events = cfg.burn_in_sweeps * (N + 1);
    const long run_events = sweeps_this_chain * (N + 1);
    const long total_samples = run_events / stride;
    const int batches = cfg.batches;
    const long samples_per_batch = std::max<long>(total_samples / batches, 1);

    std::mt19937_64 rng(chain_seed);
    std::uniform_int_distribution<int> pick(0, N);  // N+1 clocks
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<uint8_t> eta(N);
    for (int i = 0; i < N; ++i) {
        const double q = cfg.rho_left + (cfg.rho_right - cfg.rho_left) * (i + 1.0) / (N + 1.0);
        eta[i] = unif(rng) < q ? 1 : 0;
    }

    std::vector<long> site_sum(N, 0);
    std::vector<long> pair_sum(static_cast<std::size_t>(N) * N, 0);
    std::vector<long> hops(N + 1, 0);
    std::vector<long> hist(histogram ? (1L << N) : 0, 0);
    std::vector<int> occupied;
    occupied.reserve(N);

    long samples_in_batch = 0;
    long events_in_batch = 0;
    out.batches.clear();

    auto flush_batch = [&]() {
        BatchStats b;
        b.samples = samples_in_batch;
        b.events = events_in_batch;
        b.site_sum = Eigen::VectorXd::Zero(N);
        for (int i = 0; i < N; ++i) b.site_sum(i) = static_cast<double>(site_sum[i]);
        b.pair_sum = Eigen::MatrixXd::Zero(N, N);
        for (int i = 0; i < N; ++i)
            for (int j = i; j < N; ++j)
                b.pair_sum(i, j) = static_cast<double>(pair_sum[static_cast<std::size_t>(i) * N + j]);
        b.hops = Eigen::VectorXd::Zero(N + 1);
        for (int bnd = 0; bnd <= N; ++bnd) b.hops(bnd) = static_cast<double>(hops[bnd]);
        if (histogram) {
            b.histogram = Eigen::VectorXd::Zero(static_cast<long>(hist.size()));
            for (std::size_t s = 0; s < hist.size(); ++s)
                b.histogram(static_cast<long>(s)) = static_cast<double>(hist[s]);
        }
        out.batches.push_back(std::move(b));
        std::fill(site_sum.begin(), site_sum.end(), 0);
        std::fill(pair_sum.begin(), pair_sum.end(), 0);
        std::fill(hops.begin(), hops.end(), 0);
        std::fill(hist.begin(), hist.end(), 0);
        samples_in_batch = 0;
        events_in_batch = 0;
    };

    const long total_events = burn_events + run_events;
    long samples_taken = 0;
    for (long ev = 0; ev < total_events; ++ev) {
        const int c = pick(rng);
        const bool counting = ev >= burn_events;
        if (c == 0) {
            const uint8_t next = unif(rng) < cfg.rho_left ? 1 : 0;
            if (counting && next != eta[0]) hops[0] += next ? 1 : -1;
            eta[0] = next;
        } else if (c == N) {
            const uint8_t next = unif(rng) < cfg.rho_right ? 1 : 0;
            // A particle leaving through the right wall is a rightward hop.
            if (counting && next != eta[N - 1]) hops[N] += next ? -1 : 1;
            eta[N - 1] = next;
        } else {
            const int i = c - 1;
            if (eta[i] != eta[i + 1]) {
                if (counting) hops[c] += eta[i] ? 1 : -1;
                std::swap(eta[i], eta[i + 1]);
            }
        }
        if (!counting) continue;
        ++events_in_batch;

        const long post = ev - burn_events;
        if ((post + 1) % stride == 0 && samples_taken < total_samples) {
            occupied.clear();
            for (int i = 0; i < N; ++i) {
                if (eta[i]) {
                    ++site_sum[i];
                    occupied.push_back(i);
                }
            }
            for (std::size_t a = 0; a < occupied.size(); ++a) {
                long* row = pair_sum.data() + static_cast<std::size_t>(occupied[a]) * N;
                for (std::size_t b = a; b < occupied.size(); ++b) ++row[occupied[b]];
            }
            if (histogram) {
                long code = 0;
                for (int i = 0; i < N; ++i) code |= static_cast<long>(eta[i]) << i;
                ++hist[static_cast<std::size_t>(code)];
            }
            ++samples_taken;
            ++samples_in_batch;
            const bool last = samples_taken == total_samples;
            if (samples_in_batch >= samples_per_batch &&
                (static_cast<int>(out.batches.size()) < batches - 1 || last)) {
                flush_batch();
            }
        }
    }
    if (samples_in_batch > 0) flush_batch();
}

struct VectorWelford {
    long count = 0;
    Eigen::VectorXd mean, m2;
    void init(long n) {
        mean = Eigen::VectorXd::Zero(n);
        m2 = Eigen::VectorXd::Zero(n);
    }
    void add(const Eigen::VectorXd& x) {
        ++count;
        const Eigen::VectorXd d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d.cwiseProduct(x - mean);
    }
    Eigen::VectorXd se() const {
        if (count < 2) return Eigen::VectorXd::Zero(mean.size());
        return (m2 / static_cast<double>((count - 1) * count)).cwiseSqrt();
    }
};

struct MatWelford {
    long count = 0;
    Eigen::MatrixXd mean, m2;
    void init(long r, long c) {
        mean = Eigen::MatrixXd::Zero(r, c);
        m2 = Eigen::MatrixXd::Zero(r, c);
    }
    void add(const Eigen::MatrixXd& x) {
        ++count;
        const Eigen::MatrixXd d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d.cwiseProduct(x - mean);
    }
    Eigen::MatrixXd se() const {
        if (count < 2) return Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
        return (m2 / static_cast<double>((count - 1) * count)).cwiseSqrt();
    }
};

} // namespace

MicroStats run_ssep(const LatticeConfig& cfg) {
    if (cfg.sites < 2) throw ArgumentError("run_ssep: need at least two sites");
    if (!(cfg.rho_left > 0.0 && cfg.rho_left < 1.0 && cfg.rho_right > 0.0 && cfg.rho_right < 1.0)) {
        throw ArgumentError("run_ssep: reservoir densities must lie strictly inside (0,1)");
    }
    if (cfg.burn_in_sweeps >= cfg.sweeps) {
        throw ArgumentError("run_ssep: burn-in must be shorter than the run");
    }
    const int N = cfg.sites;
    const int chains = std::max(cfg.chains, 1);
    const long sweeps_per_chain = cfg.sweeps / chains;

    std::vector<ChainResult> results(chains);
    std::vector<std::thread> workers;
    for (int c = 0; c < chains; ++c) {
        workers.emplace_back(run_chain, std::cref(cfg), sweeps_per_chain,
                             derive_seed(cfg.seed, 0x55EBull + c), std::ref(results[c]));
    }
    for (auto& w : workers) w.join();

    // Pool batches across chains; each batch is an equally weighted sample.
    VectorWelford prof;
    prof.init(N);
    MatWelford cov;
    cov.init(N, N);
    VectorWelford currents;
    currents.init(N + 1);
    const bool histogram = N <= 12;
    VectorWelford hist;
    if (histogram) hist.init(1L << N);

    long events = 0;
    int batch_count = 0;
    for (const auto& chain : results) {
        for (const auto& b : chain.batches) {
            if (b.samples < 2) continue;
            const double s = static_cast<double>(b.samples);
            const Eigen::VectorXd q = b.site_sum / s;
            prof.add(q);
            Eigen::MatrixXd c(N, N);
            for (int i = 0; i < N; ++i) {
                for (int j = i; j < N; ++j) {
                    const double conn = b.pair_sum(i, j) / s - q(i) * q(j);
                    c(i, j) = N * conn;
                    c(j, i) = N * conn;
                }
            }
            cov.add(c);
            const double batch_time = static_cast<double>(b.events) / (N + 1);
            currents.add(b.hops / batch_time);
            if (histogram) hist.add(b.histogram / s);
            events += b.events;
            ++batch_count;
        }
    }

    MicroStats out;
    out.profile = prof.mean;
    out.profile_se = prof.se();
    out.scaled_covariance = cov.mean;
    out.scaled_covariance_se = cov.se();
    out.bond_current = currents.mean;
    out.bond_current_se = currents.se();
    if (histogram) {
        out.state_histogram = hist.mean;
        out.state_histogram_se = hist.se();
    }
    out.events = events;
    out.total_time = static_cast<double>(events) / (N + 1);
    out.batches = batch_count;
    return out;
}

namespace {

// Linear interpolation on the cell grid extended by the wall values.
double interp_profile(const GridCorrelation& macro, double x) {
    const auto& grid = macro.profile.grid;
    const int M = grid.cells;
    std::vector<double> xs(M + 2), ys(M + 2);
    xs[0] = 0.0;
    ys[0] = macro.profile.q_left(0);
    for (int i = 0; i < M; ++i) {
        xs[i + 1] = grid.cell_points[i];
        ys[i + 1] = macro.profile.values(i);
    }
    xs[M + 1] = 1.0;
    ys[M + 1] = macro.profile.q_right(0);
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int hi = std::clamp<int>(static_cast<int>(it - xs.begin()), 1, M + 1);
    const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + t * (ys[hi] - ys[hi - 1]);
}

} // namespace

MacroComparison compare_to_macro(const MicroStats& micro, const LatticeConfig& cfg,
                                 const GridCorrelation& macro) {
    if (macro.profile.components() != 1) {
        throw ArgumentError("compare_to_macro: scalar models only");
    }
    if (std::abs(macro.profile.q_left(0) - cfg.rho_left) > 1e-12 ||
        std::abs(macro.profile.q_right(0) - cfg.rho_right) > 1e-12) {
        throw ArgumentError("compare_to_macro: micro and macro boundary densities differ");
    }
    const int N = cfg.sites;
    const auto& grid = macro.profile.grid;
    const int M = grid.cells;

    // R extended by its Dirichlet zeros at the walls, then bilinear.
    std::vector<double> xs(M + 2);
    xs[0] = 0.0;
    for (int i = 0; i < M; ++i) xs[i + 1] = grid.cell_points[i];
    xs[M + 1] = 1.0;
    Eigen::MatrixXd Re = Eigen::MatrixXd::Zero(M + 2, M + 2);
    Re.block(1, 1, M, M) = macro.R;

    auto bracket = [&](double x) {
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        int hi = std::clamp<int>(static_cast<int>(it - xs.begin()), 1, M + 1);
        const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
        return std::make_pair(hi, t);
    };
    auto interp_R = [&](double x, double y) {
        const auto [i, s] = bracket(x);
        const auto [j, t] = bracket(y);
        const double a = Re(i - 1, j - 1) * (1 - s) * (1 - t) + Re(i, j - 1) * s * (1 - t) +
                         Re(i - 1, j) * (1 - s) * t + Re(i, j) * s * t;
        return a;
    };

    MacroComparison cmp;
    cmp.macro_profile_at_lattice = Eigen::VectorXd(N);
    cmp.macro_R_at_lattice = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        const double xi = (i + 1.0) / (N + 1.0);
        cmp.macro_profile_at_lattice(i) = interp_profile(macro, xi);
    }

    double dev_sum = 0.0;
    long dev_count = 0;
    for (int i = 0; i < N; ++i) {
        const double xi = (i + 1.0) / (N + 1.0);
        for (int j = 0; j < N; ++j) {
            if (i == j) continue;
            const double xj = (j + 1.0) / (N + 1.0);
            const double r = interp_R(xi, xj);
            cmp.macro_R_at_lattice(i, j) = r;
            cmp.max_abs_R = std::max(cmp.max_abs_R, std::abs(r));
            const double dev = std::abs(micro.scaled_covariance(i, j) - r);
            cmp.max_offdiag_dev = std::max(cmp.max_offdiag_dev, dev);
            dev_sum += dev;
            ++dev_count;
        }
    }
    cmp.mean_offdiag_dev = dev_count ? dev_sum / dev_count : 0.0;

    cmp.diag_total = N;
    for (int i = 0; i < N; ++i) {
        const double q = cmp.macro_profile_at_lattice(i);
        const double target = q * (1.0 - q);
        // Occupations are 0/1, so Var(eta_i) = qhat (1 - qhat) with the
        // full-run mean; its error follows from the profile error by the
        // delta method (second-order term kept for sites near 1/2).
        const double qhat = micro.profile(i);
        const double se_q = micro.profile_se(i);
        const double var = qhat * (1.0 - qhat);
        const double se = std::max(std::abs(1.0 - 2.0 * qhat) * se_q + 3.0 * se_q * se_q, 1e-12);
        const double dev = std::abs(var - target);
        cmp.max_diag_dev = std::max(cmp.max_diag_dev, dev);
        if (dev <= 3.0 * se) ++cmp.diag_within_3se;
    }
    return cmp;
}

} // namespace nesslab
