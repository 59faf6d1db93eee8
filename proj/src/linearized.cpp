#include "nesslab/linearized.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "nesslab/errors.hpp"

namespace nesslab {

namespace {

// Per-flux data entering the linearization: K at the midpoint value and the
// advection matrix T with T(j,l) = (dK[l] * grad)_j, so that the linearized
// flux is K (dq_hi - dq_lo)/h + T (dq_lo + dq_hi)/2.
struct FluxLinearization {
    Eigen::MatrixXd K;
    Eigen::MatrixXd T;
};

std::vector<FluxLinearization> flux_linearizations(const ModelSpec& spec, const Grid1D& grid,
                                                   const Eigen::VectorXd& q_cells) {
    const int M = grid.cells;
    const int n = spec.n;
    const double inv_h = 1.0 / grid.h;
    const Eigen::MatrixXd mid = flux_midpoint_values(spec, grid, q_cells);

    std::vector<FluxLinearization> out(M + 1);
    for (int f = 0; f <= M; ++f) {
        const Eigen::VectorXd lo = (f == 0) ? spec.q_left : q_cells.segment((f - 1) * n, n);
        const Eigen::VectorXd hi = (f == M) ? spec.q_right : q_cells.segment(f * n, n);
        const Eigen::VectorXd grad = (hi - lo) * inv_h;

        out[f].K = spec.mobility(mid.col(f));
        const auto dK = spec.mobility_grad(mid.col(f));
        out[f].T = Eigen::MatrixXd::Zero(n, n);
        for (int l = 0; l < n; ++l) out[f].T.col(l) = dK[l] * grad;
    }
    return out;
}

} // namespace

Eigen::MatrixXd linearize_residual(const ModelSpec& spec, const Grid1D& grid,
                                   const Eigen::VectorXd& q_cells) {
    const int M = grid.cells;
    const int n = spec.n;
    const double h = grid.h;
    const auto fl = flux_linearizations(spec, grid, q_cells);

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M * n, M * n);
    for (int i = 0; i < M; ++i) {
        const auto& lo = fl[i];      // flux below cell i
        const auto& hi = fl[i + 1];  // flux above cell i
        // d(residual_i)/d(q_i)
        L.block(i * n, i * n, n, n) =
            -(hi.K + lo.K) / (h * h) + (hi.T - lo.T) / (2.0 * h);
        if (i > 0) {
            L.block(i * n, (i - 1) * n, n, n) = lo.K / (h * h) - lo.T / (2.0 * h);
        }
        if (i < M - 1) {
            L.block(i * n, (i + 1) * n, n, n) = hi.K / (h * h) + hi.T / (2.0 * h);
        }
    }
    return L;
}

Eigen::MatrixXd assemble_generator(const ModelSpec& spec, const Profile& profile) {
    if (!profile.converged) {
        throw ArgumentError("assemble_generator: profile is not marked converged");
    }
    return linearize_residual(spec, profile.grid, profile.values);
}

SpectralReport check_dissipativity(const Eigen::MatrixXd& L) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(L);
    SpectralReport rep;
    rep.abscissa = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> ev = es.eigenvalues()(i);
        if (ev.real() > rep.abscissa) {
            rep.abscissa = ev.real();
            rep.leading = ev;
        }
    }
    rep.dissipative = rep.abscissa < 0.0;
    return rep;
}

Eigen::VectorXd semigroup_apply(const Eigen::MatrixXd& L, double t, const Eigen::VectorXd& v) {
    if (t < 0.0) throw ArgumentError("semigroup_apply: t must be non-negative");
    if (t == 0.0) return v;
    return (t * L).exp() * v;
}

NoiseMatrices assemble_noise(const ModelSpec& spec, const Profile& profile) {
    if (!profile.converged) {
        throw ArgumentError("assemble_noise: profile is not marked converged");
    }
    const Grid1D& grid = profile.grid;
    const int M = grid.cells;
    const int n = spec.n;
    const double h = grid.h;
    const Eigen::MatrixXd mid = flux_midpoint_values(spec, grid, profile.values);

    NoiseMatrices nm;
    nm.C = Eigen::MatrixXd::Zero((M + 1) * n, (M + 1) * n);
    Eigen::MatrixXd Chalf = Eigen::MatrixXd::Zero((M + 1) * n, (M + 1) * n);

    for (int f = 0; f <= M; ++f) {
        const Eigen::MatrixXd K = spec.mobility(mid.col(f));
        const Eigen::MatrixXd J = eval_static_covariance(spec, mid.col(f));
        const Eigen::MatrixXd KJ = K * J;
        const Eigen::MatrixXd S = (KJ + KJ.transpose()) / 2.0;

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
        if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
            throw ModelError("assemble_noise: [K J]_sym not positive semi-definite at flux point x = " +
                             std::to_string(grid.flux_points[f]));
        }
        const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
        const Eigen::MatrixXd block =
            es.eigenvectors() * (2.0 / h * clamped).asDiagonal() * es.eigenvectors().transpose();
        const Eigen::MatrixXd root = es.eigenvectors() *
                                     (2.0 / h * clamped).cwiseSqrt().asDiagonal() *
                                     es.eigenvectors().transpose();
        nm.C.block(f * n, f * n, n, n) = 0.5 * (block + block.transpose());
        Chalf.block(f * n, f * n, n, n) = 0.5 * (root + root.transpose());
    }

    const Eigen::MatrixXd D = divergence_op(grid, n).matrix;
    nm.B = D * nm.C * D.transpose();
    nm.B = 0.5 * (nm.B + nm.B.transpose()).eval();
    nm.F = D * Chalf;
    return nm;
}

LinearizedSystem assemble_system(const ModelSpec& spec, const Profile& profile) {
    LinearizedSystem sys;
    sys.grid = profile.grid;
    sys.n = spec.n;
    sys.L = assemble_generator(spec, profile);
    NoiseMatrices nm = assemble_noise(spec, profile);
    sys.C = std::move(nm.C);
    sys.B = std::move(nm.B);
    sys.F = std::move(nm.F);
    sys.spectral_abscissa = check_dissipativity(sys.L).abscissa;

    const Eigen::MatrixXd mid = flux_midpoint_values(spec, profile.grid, profile.values);
    double bound = 0.0;
    for (int f = 0; f <= profile.grid.cells; ++f) {
        const Eigen::MatrixXd K = spec.mobility(mid.col(f));
        bound = std::max(bound, Eigen::EigenSolver<Eigen::MatrixXd>(K, false)
                                    .eigenvalues()
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    sys.mobility_bound = bound;
    return sys;
}

} // namespace nesslab
