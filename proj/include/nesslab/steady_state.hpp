#pragma once

#include <Eigen/Dense>

#include "nesslab/grid.hpp"
#include "nesslab/model.hpp"

namespace nesslab {

/// Stationary field sampled at cell points. Values are stored cell-major:
/// values[i*n + c] is component c at cell i.
struct Profile {
    Grid1D grid;
    Eigen::VectorXd values;
    Eigen::VectorXd q_left;
    Eigen::VectorXd q_right;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();

    int components() const {
        return grid.cells > 0 ? static_cast<int>(values.size()) / grid.cells : 0;
    }
    Eigen::VectorXd value_at(int cell) const {
        const int n = components();
        return values.segment(cell * n, n);
    }
};

/// Discrete right side of the diffusion law at the given cell field:
/// divergence of K (evaluated at flux-midpoint averages) times the
/// inhomogeneous gradient.
Eigen::VectorXd steady_residual(const ModelSpec& spec, const Grid1D& grid,
                                const Eigen::VectorXd& q_cells);

/// Max-norm of the residual; throws DomainError when the profile leaves the
/// model window.
double stationarity_residual(const ModelSpec& spec, const Profile& profile);

enum class SteadyInit { LinearInterpolation, ConstantMidpoint };

struct SteadyOptions {
    double tol = 1e-10;
    int max_iter = 60;
    SteadyInit init = SteadyInit::LinearInterpolation;
};

/// Damped Newton with backtracking line search on the discrete residual;
/// falls back to pseudo-time marching when a Newton step stalls.
Profile solve_steady(const ModelSpec& spec, const Grid1D& grid, const SteadyOptions& opts = {});

/// Helper shared with the fluctuation modules: density averaged onto flux
/// point f (reservoir ghosts at the walls). Returned matrix is n x (M+1).
Eigen::MatrixXd flux_midpoint_values(const ModelSpec& spec, const Grid1D& grid,
                                     const Eigen::VectorXd& q_cells);

} // namespace nesslab
