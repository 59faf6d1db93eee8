#include "nesslab/grid.hpp"

#include "nesslab/errors.hpp"

namespace nesslab {

Grid1D build_grid(int cells) {
    if (cells < 1) {
        throw ArgumentError("build_grid: cell count must be >= 1, got " + std::to_string(cells));
    }
    Grid1D g;
    g.cells = cells;
    g.h = 1.0 / (cells + 1);
    g.cell_points.resize(cells);
    for (int i = 0; i < cells; ++i) g.cell_points[i] = (i + 1) * g.h;
    g.flux_points.resize(cells + 1);
    for (int f = 0; f <= cells; ++f) g.flux_points[f] = (f + 0.5) * g.h;
    return g;
}

Eigen::VectorXd DiscreteOperator::apply(const Eigen::VectorXd& v) const {
    if (v.size() != matrix.cols()) {
        throw ArgumentError("DiscreteOperator::apply: size mismatch");
    }
    Eigen::VectorXd out = matrix * v;
    if (offset.size() > 0) out += offset;
    return out;
}

DiscreteOperator gradient_op(const Grid1D& grid, int components) {
    const int M = grid.cells;
    const int n = components;
    DiscreteOperator G;
    G.range_space = GridSpace::Fluxes;
    G.domain_space = GridSpace::Cells;
    G.components = n;
    G.matrix = Eigen::MatrixXd::Zero((M + 1) * n, M * n);
    const double inv_h = 1.0 / grid.h;
    // flux f sits between cell f-1 and cell f (0-based); ghosts beyond the walls.
    for (int f = 0; f <= M; ++f) {
        for (int c = 0; c < n; ++c) {
            if (f < M) G.matrix(f * n + c, f * n + c) = inv_h;
            if (f > 0) G.matrix(f * n + c, (f - 1) * n + c) = -inv_h;
        }
    }
    return G;
}

DiscreteOperator gradient_op(const Grid1D& grid, int components,
                             const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right) {
    if (q_left.size() != components || q_right.size() != components) {
        throw ArgumentError("gradient_op: boundary vector size must equal component count");
    }
    DiscreteOperator G = gradient_op(grid, components);
    const int M = grid.cells;
    const int n = components;
    G.offset = Eigen::VectorXd::Zero((M + 1) * n);
    const double inv_h = 1.0 / grid.h;
    for (int c = 0; c < n; ++c) {
        G.offset(c) = -q_left(c) * inv_h;
        G.offset(M * n + c) = q_right(c) * inv_h;
    }
    return G;
}

DiscreteOperator divergence_op(const Grid1D& grid, int components) {
    DiscreteOperator D;
    D.range_space = GridSpace::Cells;
    D.domain_space = GridSpace::Fluxes;
    D.components = components;
    D.matrix = -gradient_op(grid, components).matrix.transpose();
    return D;
}

DiscreteOperator delta_matrix(const Grid1D& grid, int components) {
    DiscreteOperator I;
    I.range_space = GridSpace::Cells;
    I.domain_space = GridSpace::Cells;
    I.components = components;
    const int dim = grid.cells * components;
    I.matrix = Eigen::MatrixXd::Identity(dim, dim) / grid.h;
    return I;
}

DiscreteOperator compose(const DiscreteOperator& a, const DiscreteOperator& b) {
    if (a.domain_space != b.range_space || a.components != b.components) {
        throw ArgumentError("compose: operator space tags do not match");
    }
    DiscreteOperator out;
    out.range_space = a.range_space;
    out.domain_space = b.domain_space;
    out.components = a.components;
    out.matrix = a.matrix * b.matrix;
    if (b.offset.size() > 0) {
        out.offset = a.matrix * b.offset;
        if (a.offset.size() > 0) out.offset += a.offset;
    } else if (a.offset.size() > 0) {
        out.offset = a.offset;
    }
    return out;
}

} // namespace nesslab
