#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nesslab/linearized.hpp"
#include "nesslab/model.hpp"
#include "nesslab/steady_state.hpp"

namespace nesslab {

enum class LyapunovMethod { Auto, Kronecker, Schur };

/// Unique symmetric PSD solution of L W + W L^T + B = 0. Dispatches to the
/// direct Kronecker solve for small systems and a complex-Schur substitution
/// otherwise; both get residual refinement with extended-precision residuals.
/// Refuses non-dissipative generators.
Eigen::MatrixXd solve_stationary_covariance(const Eigen::MatrixXd& L, const Eigen::MatrixXd& B,
                                            double* relative_residual = nullptr,
                                            LyapunovMethod method = LyapunovMethod::Auto);

/// max|L W + W L^T + B| / max|B|, accumulated in long double.
double lyapunov_residual(const Eigen::MatrixXd& L, const Eigen::MatrixXd& W,
                         const Eigen::MatrixXd& B);

struct LocalDecomposition {
    Eigen::MatrixXd W_local;  // block diagonal of J(q(x_i)) / h
    Eigen::MatrixXd R;        // W - W_local
};

LocalDecomposition decompose_local(const Eigen::MatrixXd& W, const ModelSpec& spec,
                                   const Profile& profile);

/// Largest |R| block entry over cell pairs separated by at least
/// `separation` in x.
double max_offdiagonal(const Eigen::MatrixXd& R, const Grid1D& grid, int components,
                       double separation);

/// Phi(q;x) = Lap[K J]_sym + div Psi_sym per cell, with Psi per the
/// gradient-bracket formula. For n = 1 the bracket cancels identically and
/// psi is returned as exact zeros.
struct PhiField {
    std::vector<Eigen::MatrixXd> phi;  // one n x n matrix per cell
    std::vector<Eigen::MatrixXd> psi;
    double max_abs_phi = 0.0;
};

PhiField compute_phi(const ModelSpec& spec, const Profile& profile);

/// Weak-form pairing h^2 phi^T E psi with E = L W_local + W_local L^T + B and
/// test vectors sin(k pi x). The companion quadrature h sum Phi phi psi is the
/// limit the pairing must approach at O(h^2).
struct WeakFormSample {
    int cells = 0;
    double pairing = 0.0;     // h^2 f^T E g
    double quadrature = 0.0;  // h sum_i Phi(x_i) f_i g_i
};

WeakFormSample proposition_pairing(const ModelSpec& spec, const Profile& profile,
                                   const Eigen::MatrixXd& L, const Eigen::MatrixXd& B,
                                   int mode_left = 1, int mode_right = 1);

/// Multi-grid weak-form study; observed_orders holds log2 error ratios of
/// |pairing - quadrature| between consecutive grids.
struct PropositionCheck {
    std::vector<WeakFormSample> samples;
    std::vector<double> observed_orders;
};

PropositionCheck proposition_residual(const ModelSpec& spec, const std::vector<int>& grid_sizes,
                                      const SteadyOptions& steady_opts = {}, int mode_left = 1,
                                      int mode_right = 1);

/// exp(tL) W for t >= 0; negative lags must use the transpose relation.
Eigen::MatrixXd time_correlation(const Eigen::MatrixXd& L, const Eigen::MatrixXd& W, double t);

enum class Verdict { LongRange, ShortRange, Inconclusive };

const char* verdict_name(Verdict v);

/// Everything measured on one grid.
struct GridCorrelation {
    Profile profile;
    Eigen::MatrixXd W;
    Eigen::MatrixXd W_local;
    Eigen::MatrixXd R;
    PhiField phi;
    double lyapunov_residual = 0.0;
    double max_offdiag_R = 0.0;  // at the separation cutoff
    double w_local_scale = 0.0;  // max diagonal of W_local * h (= max J entry)
};

struct VerdictThresholds {
    double tau_lr_scale = 1e-3;
    double tau_sr_scale = 1e-6;
    double separation_cutoff = 0.25;
    double stability_band = 0.20;  // relative drift allowed for "h-independent"
};

struct VerdictReport {
    Verdict verdict = Verdict::Inconclusive;
    double tau_lr = 0.0;
    double tau_sr = 0.0;
    std::vector<int> grid_sizes;
    std::vector<double> max_offdiag_by_grid;
    std::string explanation;
};

GridCorrelation analyze_correlations(const ModelSpec& spec, const Grid1D& grid,
                                     const SteadyOptions& steady_opts = {},
                                     double separation_cutoff = 0.25);

/// Requires at least two grid resolutions; grids must be passed coarse to
/// fine.
VerdictReport long_range_verdict(const std::vector<GridCorrelation>& grids,
                                 const VerdictThresholds& thresholds = {});

} // namespace nesslab
