#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nesslab {

/// Staggered 1-D grid on the unit interval. M interior cell points at
/// x_i = i*h (i = 1..M) and M+1 flux points at x_{i+1/2} = (i+1/2)*h,
/// including the two half-fluxes next to the reservoirs.
struct Grid1D {
    int cells = 0;                    // M
    double h = 0.0;                   // spacing, 1/(M+1)
    std::vector<double> cell_points;  // size M
    std::vector<double> flux_points;  // size M+1
};

Grid1D build_grid(int cells);

enum class GridSpace { Cells, Fluxes };

/// Dense matrix with row/column space tags plus an optional affine offset
/// for inhomogeneous Dirichlet data. Gradients map cells -> fluxes,
/// divergences map fluxes -> cells; compositions check the tags.
struct DiscreteOperator {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd offset;  // empty for homogeneous operators
    GridSpace range_space = GridSpace::Cells;
    GridSpace domain_space = GridSpace::Cells;
    int components = 1;

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
};

/// Homogeneous difference quotient: ghost values at x=0 and x=1 are zero
/// (the fluctuation variant).
DiscreteOperator gradient_op(const Grid1D& grid, int components);

/// Inhomogeneous variant: ghost values fixed to the given boundary densities.
DiscreteOperator gradient_op(const Grid1D& grid, int components,
                             const Eigen::VectorXd& q_left,
                             const Eigen::VectorXd& q_right);

/// D = -G^T for the homogeneous gradient G; exact entrywise.
DiscreteOperator divergence_op(const Grid1D& grid, int components);

/// Discrete delta: block identity on cells scaled by 1/h.
DiscreteOperator delta_matrix(const Grid1D& grid, int components);

/// Matrix product with space-tag checking; offsets propagate as
/// (A o B)(v) = A(B(v)).
DiscreteOperator compose(const DiscreteOperator& a, const DiscreteOperator& b);

} // namespace nesslab
