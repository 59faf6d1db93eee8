#pragma once

#include <Eigen/Dense>
#include <complex>

#include "nesslab/grid.hpp"
#include "nesslab/model.hpp"
#include "nesslab/steady_state.hpp"

namespace nesslab {

/// Discrete linearized generator plus the chaotic-noise covariances.
///  L : nM x nM generator on cell fluctuations (homogeneous Dirichlet)
///  C : n(M+1) x n(M+1) block-diagonal flux covariance, 2[K J]_sym / h
///  B : nM x nM cell noise covariance, D C D^T
///  F : nM x n(M+1) factor with F F^T = B (divergence of the block roots)
struct LinearizedSystem {
    Eigen::MatrixXd L;
    Eigen::MatrixXd C;
    Eigen::MatrixXd B;
    Eigen::MatrixXd F;
    Grid1D grid;
    int n = 1;
    double spectral_abscissa = 0.0;
    double mobility_bound = 0.0;  // max ||K|| along the profile, for step guards
};

/// Jacobian of steady_residual at an arbitrary in-window cell field; equals
/// the linearized generator when the field is stationary.
Eigen::MatrixXd linearize_residual(const ModelSpec& spec, const Grid1D& grid,
                                   const Eigen::VectorXd& q_cells);

/// Requires a converged profile.
Eigen::MatrixXd assemble_generator(const ModelSpec& spec, const Profile& profile);

struct SpectralReport {
    std::complex<double> leading;  // eigenvalue with largest real part
    double abscissa = 0.0;
    bool dissipative = false;
};

SpectralReport check_dissipativity(const Eigen::MatrixXd& L);

/// exp(tL) v, t >= 0.
Eigen::VectorXd semigroup_apply(const Eigen::MatrixXd& L, double t, const Eigen::VectorXd& v);

struct NoiseMatrices {
    Eigen::MatrixXd C;
    Eigen::MatrixXd B;
    Eigen::MatrixXd F;
};

NoiseMatrices assemble_noise(const ModelSpec& spec, const Profile& profile);

/// Generator + noise + spectral data in one pass.
LinearizedSystem assemble_system(const ModelSpec& spec, const Profile& profile);

} // namespace nesslab
