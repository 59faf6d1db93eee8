#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nesslab/covariance.hpp"
#include "nesslab/errors.hpp"

using namespace nesslab;

namespace {

double green_kernel(double x, double y) { return std::min(x, y) * (1.0 - std::max(x, y)); }

Profile analytic_ssep_profile(const ModelSpec& spec, int M) {
    Profile p;
    p.grid = build_grid(M);
    p.values.resize(M);
    for (int i = 0; i < M; ++i) {
        p.values(i) = spec.q_left(0) + (spec.q_right(0) - spec.q_left(0)) * p.grid.cell_points[i];
    }
    p.q_left = spec.q_left;
    p.q_right = spec.q_right;
    p.converged = true;
    p.residual = 0.0;
    return p;
}

} // namespace

TEST_CASE("equilibrium Lyapunov solution is J/h on the diagonal, exactly") {
    ModelSpec ssep = make_ssep(0.5, 0.5);
    Profile p = solve_steady(ssep, build_grid(32));
    LinearizedSystem sys = assemble_system(ssep, p);
    double res = 0.0;
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B, &res);
    CHECK(res <= 1e-10);
    const double expected = 0.25 / p.grid.h;
    const double wmax = W.cwiseAbs().maxCoeff();
    for (int i = 0; i < 32; ++i) {
        CHECK(std::abs(W(i, i) - expected) <= 1e-12 * wmax);
        for (int j = 0; j < 32; ++j) {
            if (i != j) CHECK(std::abs(W(i, j)) <= 1e-12 * wmax);
        }
    }
}

TEST_CASE("two-component equilibrium covariance is block J/h") {
    Eigen::VectorXd q = Eigen::VectorXd::Constant(2, 0.4);
    ModelSpec two = make_two_component(q, q);
    Profile p = solve_steady(two, build_grid(16));
    LinearizedSystem sys = assemble_system(two, p);
    double res = 0.0;
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B, &res);
    CHECK(res <= 1e-10);
    LocalDecomposition loc = decompose_local(W, two, p);
    CHECK(loc.R.cwiseAbs().maxCoeff() <= 1e-12 * W.cwiseAbs().maxCoeff());
}

TEST_CASE("M=1 scalar Lyapunov reduces to W = B / (-2L)") {
    ModelSpec gauss = make_gaussian(0.5, 0.5);
    Profile p = solve_steady(gauss, build_grid(1));
    LinearizedSystem sys = assemble_system(gauss, p);
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B);
    CHECK(W(0, 0) == doctest::Approx(sys.B(0, 0) / (-2.0 * sys.L(0, 0))).epsilon(1e-13));
}

TEST_CASE("Kronecker and Schur routes agree on the SSEP NESS at M=32") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = solve_steady(ssep, build_grid(32));
    LinearizedSystem sys = assemble_system(ssep, p);
    double r1 = 0.0, r2 = 0.0;
    Eigen::MatrixXd Wk =
        solve_stationary_covariance(sys.L, sys.B, &r1, LyapunovMethod::Kronecker);
    Eigen::MatrixXd Ws = solve_stationary_covariance(sys.L, sys.B, &r2, LyapunovMethod::Schur);
    CHECK(r1 <= 1e-10);
    CHECK(r2 <= 1e-10);
    CHECK((Wk - Ws).cwiseAbs().maxCoeff() <= 1e-11 * Wk.cwiseAbs().maxCoeff());
}

TEST_CASE("solver refuses a non-dissipative generator") {
    Eigen::MatrixXd L = Eigen::MatrixXd::Constant(1, 1, 0.5);
    Eigen::MatrixXd B = Eigen::MatrixXd::Constant(1, 1, 1.0);
    CHECK_THROWS_AS(solve_stationary_covariance(L, B), SolverError);
}

TEST_CASE("SSEP long-range remainder matches the Green-function kernel") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    const double b = 0.6;
    Profile p = solve_steady(ssep, build_grid(128));
    LinearizedSystem sys = assemble_system(ssep, p);
    double res = 0.0;
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B, &res);
    CHECK(res <= 1e-10);

    // symmetry and near-positive-semidefiniteness of W
    CHECK((W - W.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * W.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());

    LocalDecomposition loc = decompose_local(W, ssep, p);
    const double ref_max = b * b * 0.25;  // |R| peaks at x = x' = 1/2
    double worst = 0.0;
    for (int i = 0; i < 128; ++i) {
        for (int j = 0; j < 128; ++j) {
            const double xi = p.grid.cell_points[i];
            const double xj = p.grid.cell_points[j];
            if (std::abs(xi - xj) < 0.1) continue;
            const double formula = -b * b * green_kernel(xi, xj);
            worst = std::max(worst, std::abs(loc.R(i, j) - formula));
        }
    }
    CHECK(worst <= 0.02 * ref_max);

    // negativity of the remainder away from the smeared diagonal ridge
    for (int i = 0; i < 128; ++i) {
        for (int j = 0; j < 128; ++j) {
            if (std::abs(i - j) <= 1) continue;
            CHECK(loc.R(i, j) < 0.0);
        }
    }
}

TEST_CASE("max |R| is h-independent for the SSEP NESS (long range)") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    auto max_R = [&](int M) {
        GridCorrelation gc = analyze_correlations(ssep, build_grid(M));
        return max_offdiagonal(gc.R, gc.profile.grid, 1, 0.1);
    };
    const double m64 = max_R(64);
    const double m128 = max_R(128);
    CHECK(std::abs(m128 - m64) <= 0.05 * std::max(m64, m128));
}

TEST_CASE("constant-K quadratic-entropy NESS has an exactly local covariance") {
    ModelSpec gauss = make_gaussian(0.2, 0.8);
    Profile p = solve_steady(gauss, build_grid(64));
    LinearizedSystem sys = assemble_system(gauss, p);
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B);
    LocalDecomposition loc = decompose_local(W, gauss, p);
    CHECK(loc.R.cwiseAbs().maxCoeff() <= 1e-10 * loc.W_local.cwiseAbs().maxCoeff());
}

TEST_CASE("phi: SSEP analytic profile gives -2 b^2 at every cell") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = analytic_ssep_profile(ssep, 64);
    PhiField f = compute_phi(ssep, p);
    for (int i = 0; i < 64; ++i) {
        CHECK(std::abs(f.phi[i](0, 0) - (-0.72)) <= 1e-10);
        CHECK(f.psi[i](0, 0) == 0.0);  // scalar bracket cancels identically
    }
}

TEST_CASE("phi: power-law closed form -3B^2/(4q)") {
    ModelSpec power = make_power_law(0.2, 0.8);
    const auto& entry = catalog_entry("power_law");
    auto max_err = [&](int M) {
        Profile p;
        p.grid = build_grid(M);
        p.values.resize(M);
        for (int i = 0; i < M; ++i) {
            p.values(i) = entry.closed_form.steady_profile(p.grid.cell_points[i], 0.2, 0.8);
        }
        p.q_left = power.q_left;
        p.q_right = power.q_right;
        p.converged = true;
        PhiField f = compute_phi(power, p);
        double err = 0.0;
        for (int i = 0; i < M; ++i) {
            const double ref = entry.closed_form.phi(p.grid.cell_points[i], 0.2, 0.8);
            err = std::max(err, std::abs(f.phi[i](0, 0) - ref));
        }
        return err;
    };
    const double e64 = max_err(64);
    const double e129 = max_err(129);
    CHECK(e129 <= 2e-2);
    CHECK(std::log2(e64 / e129) > 1.5);  // centered differences, O(h^2)
}

TEST_CASE("phi: constant-K quadratic-entropy model gives exactly zero") {
    ModelSpec gauss = make_gaussian(0.2, 0.8);
    Profile p = solve_steady(gauss, build_grid(32));
    PhiField f = compute_phi(gauss, p);
    CHECK(f.max_abs_phi == 0.0);
}

TEST_CASE("phi rejects grids below three cells") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = analytic_ssep_profile(ssep, 2);
    CHECK_THROWS_AS(compute_phi(ssep, p), ArgumentError);
}

TEST_CASE("two-component psi matches an independent contraction") {
    Eigen::VectorXd ql(2), qr(2);
    ql << 0.2, 0.3;
    qr << 0.7, 0.6;
    ModelSpec two = make_two_component(ql, qr, 0.25);
    Profile p = solve_steady(two, build_grid(21));
    PhiField f = compute_phi(two, p);

    // hand contraction at an interior cell, with a fresh gradient estimate
    const int i = 10;
    const Eigen::VectorXd grad = (p.value_at(i + 1) - p.value_at(i - 1)) / (2.0 * p.grid.h);
    const auto dK = eval_mobility_grad(two, p.value_at(i));
    const Eigen::MatrixXd J = eval_static_covariance(two, p.value_at(i));
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(2, 2);
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            for (int l = 0; l < 2; ++l) {
                for (int m = 0; m < 2; ++m) {
                    psi(j, k) += dK[m](j, l) * (J(m, k) * grad(l) - J(l, k) * grad(m));
                }
            }
        }
    }
    CHECK((f.psi[i] - psi).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(psi.cwiseAbs().maxCoeff() > 0.0);  // coupling actually engages the bracket
}

TEST_CASE("weak form: equilibrium pairing is exactly zero") {
    ModelSpec ssep = make_ssep(0.5, 0.5);
    Profile p = solve_steady(ssep, build_grid(16));
    Eigen::MatrixXd L = assemble_generator(ssep, p);
    NoiseMatrices nm = assemble_noise(ssep, p);
    WeakFormSample s = proposition_pairing(ssep, p, L, nm.B);
    CHECK(std::abs(s.pairing) <= 1e-13);
    CHECK(std::abs(s.quadrature) <= 1e-13);
}

TEST_CASE("weak form: SSEP pairing converges to -b^2 at order >= 1.8") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    PropositionCheck check = proposition_residual(ssep, {32, 64, 128});
    const double target = -0.36;  // -2 b^2 * int sin^2(pi x) dx = -b^2
    std::vector<double> errs;
    for (const auto& s : check.samples) errs.push_back(std::abs(s.pairing - target));
    CHECK(std::log2(errs[0] / errs[1]) > 1.8);
    CHECK(std::log2(errs[1] / errs[2]) > 1.8);
    // the companion quadrature agrees with the same limit
    CHECK(check.samples.back().quadrature == doctest::Approx(target).epsilon(1e-3));
    for (double order : check.observed_orders) CHECK(order > 1.5);
}

TEST_CASE("weak form: E vanishes for the constant-K quadratic-entropy NESS") {
    ModelSpec gauss = make_gaussian(0.2, 0.8);
    Profile p = solve_steady(gauss, build_grid(16));
    Eigen::MatrixXd L = assemble_generator(gauss, p);
    NoiseMatrices nm = assemble_noise(gauss, p);
    const int M = 16;
    Eigen::MatrixXd Wl = Eigen::MatrixXd::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        Wl(i, i) = eval_static_covariance(gauss, p.value_at(i))(0, 0) / p.grid.h;
    }
    const Eigen::MatrixXd E = L * Wl + Wl * L.transpose() + nm.B;
    CHECK(E.cwiseAbs().maxCoeff() <= 1e-12 * nm.B.cwiseAbs().maxCoeff());
}

TEST_CASE("weak form requires at least 7 cells") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = solve_steady(ssep, build_grid(6));
    Eigen::MatrixXd L = assemble_generator(ssep, p);
    NoiseMatrices nm = assemble_noise(ssep, p);
    CHECK_THROWS_AS(proposition_pairing(ssep, p, L, nm.B), ArgumentError);
}

TEST_CASE("time correlation: boundary cases and dissipative decay") {
    ModelSpec ssep = make_ssep(0.5, 0.5);
    Profile p = solve_steady(ssep, build_grid(8));
    LinearizedSystem sys = assemble_system(ssep, p);
    Eigen::MatrixXd W = solve_stationary_covariance(sys.L, sys.B);

    CHECK((time_correlation(sys.L, W, 0.0) - W).cwiseAbs().maxCoeff() == 0.0);
    CHECK(time_correlation(sys.L, W, 5.0).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK_THROWS_AS(time_correlation(sys.L, W, -0.1), ArgumentError);
    try {
        time_correlation(sys.L, W, -0.1);
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("transpose") != std::string::npos);
    }

    // at equilibrium exp(tL) W is symmetric: both branches of the lagged
    // two-point function coincide with their transposes
    const Eigen::MatrixXd C = time_correlation(sys.L, W, 0.03);
    CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * C.cwiseAbs().maxCoeff());
}

TEST_CASE("long-range verdict across grid refinements") {
    VerdictThresholds th;

    ModelSpec ssep = make_ssep(0.2, 0.8);
    std::vector<GridCorrelation> ness;
    for (int M : {48, 96}) ness.push_back(analyze_correlations(ssep, build_grid(M)));
    VerdictReport lr = long_range_verdict(ness, th);
    CHECK(lr.verdict == Verdict::LongRange);

    ModelSpec eq = make_ssep(0.5, 0.5);
    std::vector<GridCorrelation> eq_grids;
    for (int M : {48, 96}) eq_grids.push_back(analyze_correlations(eq, build_grid(M)));
    CHECK(long_range_verdict(eq_grids, th).verdict == Verdict::ShortRange);

    ModelSpec gauss = make_gaussian(0.2, 0.8);
    std::vector<GridCorrelation> null_grids;
    for (int M : {48, 96}) null_grids.push_back(analyze_correlations(gauss, build_grid(M)));
    CHECK(long_range_verdict(null_grids, th).verdict == Verdict::ShortRange);

    VerdictReport single = long_range_verdict({ness.front()}, th);
    CHECK(single.verdict == Verdict::Inconclusive);
    CHECK_FALSE(single.explanation.empty());
}

TEST_CASE("proposition consistency on catalog models") {
    // phi == 0 implies remainder at solver precision; large phi implies the
    // long-range verdict. Both directions, on models where each is computable.
    ModelSpec gauss = make_gaussian(0.2, 0.8);
    GridCorrelation g = analyze_correlations(gauss, build_grid(32));
    CHECK(g.phi.max_abs_phi == 0.0);
    CHECK(g.R.cwiseAbs().maxCoeff() <= 1e-10 * g.W_local.cwiseAbs().maxCoeff());

    ModelSpec ssep = make_ssep(0.2, 0.8);
    std::vector<GridCorrelation> grids;
    for (int M : {48, 96}) grids.push_back(analyze_correlations(ssep, build_grid(M)));
    CHECK(grids.back().phi.max_abs_phi > 0.1);
    CHECK(long_range_verdict(grids, {}).verdict == Verdict::LongRange);
}
