#include "nesslab/steady_state.hpp"

#include <cmath>

#include "nesslab/errors.hpp"
#include "nesslab/linearized.hpp"

namespace nesslab {

namespace {

void check_cells_in_window(const ModelSpec& spec, const Eigen::VectorXd& q_cells, int cells) {
    const int n = spec.n;
    for (int i = 0; i < cells; ++i) {
        const Eigen::VectorXd qi = q_cells.segment(i * n, n);
        const int bad = spec.domain_window.violating_component(qi);
        if (bad >= 0) {
            throw DomainError("profile leaves domain window at cell " + std::to_string(i) +
                                  ", component " + std::to_string(bad),
                              bad);
        }
    }
}

// Largest mobility scale along the field, used for pseudo-time step bounds.
double mobility_bound(const ModelSpec& spec, const Grid1D& grid, const Eigen::VectorXd& q_cells) {
    const Eigen::MatrixXd mid = flux_midpoint_values(spec, grid, q_cells);
    double bound = 0.0;
    for (int f = 0; f <= grid.cells; ++f) {
        const Eigen::MatrixXd K = spec.mobility(mid.col(f));
        bound = std::max(bound, K.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return bound;
}

} // namespace

Eigen::MatrixXd flux_midpoint_values(const ModelSpec& spec, const Grid1D& grid,
                                     const Eigen::VectorXd& q_cells) {
    const int M = grid.cells;
    const int n = spec.n;
    Eigen::MatrixXd mid(n, M + 1);
    for (int f = 0; f <= M; ++f) {
        const Eigen::VectorXd lo = (f == 0) ? spec.q_left : q_cells.segment((f - 1) * n, n);
        const Eigen::VectorXd hi = (f == M) ? spec.q_right : q_cells.segment(f * n, n);
        mid.col(f) = 0.5 * (lo + hi);
    }
    return mid;
}

Eigen::VectorXd steady_residual(const ModelSpec& spec, const Grid1D& grid,
                                const Eigen::VectorXd& q_cells) {
    const int M = grid.cells;
    const int n = spec.n;
    check_cells_in_window(spec, q_cells, M);
    const double inv_h = 1.0 / grid.h;
    const Eigen::MatrixXd mid = flux_midpoint_values(spec, grid, q_cells);

    Eigen::MatrixXd flux(n, M + 1);
    for (int f = 0; f <= M; ++f) {
        const Eigen::VectorXd lo = (f == 0) ? spec.q_left : q_cells.segment((f - 1) * n, n);
        const Eigen::VectorXd hi = (f == M) ? spec.q_right : q_cells.segment(f * n, n);
        flux.col(f) = spec.mobility(mid.col(f)) * ((hi - lo) * inv_h);
    }

    Eigen::VectorXd r(M * n);
    for (int i = 0; i < M; ++i) {
        r.segment(i * n, n) = (flux.col(i + 1) - flux.col(i)) * inv_h;
    }
    return r;
}

double stationarity_residual(const ModelSpec& spec, const Profile& profile) {
    return steady_residual(spec, profile.grid, profile.values).cwiseAbs().maxCoeff();
}

Profile solve_steady(const ModelSpec& spec, const Grid1D& grid, const SteadyOptions& opts) {
    if (!(opts.tol > 0.0)) throw ArgumentError("solve_steady: tolerance must be positive");
    const int M = grid.cells;
    const int n = spec.n;

    Eigen::VectorXd q(M * n);
    for (int i = 0; i < M; ++i) {
        const double x = grid.cell_points[i];
        if (opts.init == SteadyInit::LinearInterpolation) {
            q.segment(i * n, n) = spec.q_left + x * (spec.q_right - spec.q_left);
        } else {
            q.segment(i * n, n) = 0.5 * (spec.q_left + spec.q_right);
        }
    }

    std::vector<double> history;
    Eigen::VectorXd r = steady_residual(spec, grid, q);
    double rnorm = r.cwiseAbs().maxCoeff();
    history.push_back(rnorm);

    auto in_window = [&](const Eigen::VectorXd& cand) {
        for (int i = 0; i < M; ++i) {
            if (!spec.domain_window.contains(cand.segment(i * n, n))) return false;
        }
        return true;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (rnorm <= opts.tol) break;

        const Eigen::MatrixXd Lj = linearize_residual(spec, grid, q);
        const Eigen::VectorXd step = Lj.partialPivLu().solve(-r);

        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= 1e-4) {
            const Eigen::VectorXd cand = q + alpha * step;
            if (in_window(cand)) {
                const Eigen::VectorXd rc = steady_residual(spec, grid, cand);
                const double cn = rc.cwiseAbs().maxCoeff();
                if (cn <= (1.0 - 0.25 * alpha) * rnorm || cn <= opts.tol) {
                    q = cand;
                    r = rc;
                    rnorm = cn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }

        if (!accepted) {
            // March in pseudo-time until Newton's basin is reached.
            const double dt = grid.h * grid.h / (2.0 * std::max(mobility_bound(spec, grid, q), 1e-12));
            for (int k = 0; k < 25; ++k) {
                const Eigen::VectorXd cand = q + dt * r;
                if (!in_window(cand)) {
                    throw DomainError("solve_steady: iterate left the domain window", 0);
                }
                q = cand;
                r = steady_residual(spec, grid, q);
            }
            rnorm = r.cwiseAbs().maxCoeff();
        }
        history.push_back(rnorm);
    }

    if (rnorm > opts.tol) {
        throw SolverError("solve_steady: no convergence within max_iter (residual " +
                              std::to_string(rnorm) + ")",
                          history);
    }

    Profile p;
    p.grid = grid;
    p.values = q;
    p.q_left = spec.q_left;
    p.q_right = spec.q_right;
    p.converged = true;
    p.residual = rnorm;
    return p;
}

} // namespace nesslab
