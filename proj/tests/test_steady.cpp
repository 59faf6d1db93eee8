#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nesslab/errors.hpp"
#include "nesslab/model.hpp"
#include "nesslab/steady_state.hpp"

using namespace nesslab;

namespace {

Profile sampled_profile(const ModelSpec& spec, int M, double (*f)(double, double, double)) {
    Profile p;
    p.grid = build_grid(M);
    p.values.resize(M);
    for (int i = 0; i < M; ++i) p.values(i) = f(p.grid.cell_points[i], spec.q_left(0), spec.q_right(0));
    p.q_left = spec.q_left;
    p.q_right = spec.q_right;
    return p;
}

double linear_form(double x, double ql, double qr) { return ql + (qr - ql) * x; }
double sqrt_form(double x, double ql, double qr) {
    return std::sqrt(ql * ql + (qr * qr - ql * ql) * x);
}
// stationary solution of (q^2 q')' = 0: q^3 affine in x
double cbrt_form(double x, double ql, double qr) {
    const double a = ql * ql * ql;
    const double b = qr * qr * qr;
    return std::cbrt(a + (b - a) * x);
}

} // namespace

TEST_CASE("stationarity residual annihilates linear SSEP profiles") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = sampled_profile(ssep, 64, linear_form);
    CHECK(stationarity_residual(ssep, p) <= 1e-12);
}

TEST_CASE("uniform profile with equal boundaries has exactly zero residual") {
    ModelSpec ssep = make_ssep(0.5, 0.5);
    Profile p;
    p.grid = build_grid(16);
    p.values = Eigen::VectorXd::Constant(16, 0.5);
    p.q_left = ssep.q_left;
    p.q_right = ssep.q_right;
    CHECK(stationarity_residual(ssep, p) == 0.0);
}

TEST_CASE("residual of the K(q)=q closed form sits at the rounding floor") {
    // With K(q) = q the midpoint flux is (q_{i+1}^2 - q_i^2)/(2h), and q^2 is
    // affine in x along the closed form, so the stencil is exact.
    ModelSpec power = make_power_law(0.2, 0.8);
    CHECK(stationarity_residual(power, sampled_profile(power, 16, sqrt_form)) <= 1e-11);
    CHECK(stationarity_residual(power, sampled_profile(power, 64, sqrt_form)) <= 1e-10);
}

TEST_CASE("residual of the K(q)=q^2 closed form vanishes at rate h^2") {
    // boundary densities away from zero keep the cube-root closed form
    // resolved on these grids; the max-norm order approaches 2 from below
    ModelSpec power2 = make_power_law(0.4, 0.8, 2.0);
    const double r1 = stationarity_residual(power2, sampled_profile(power2, 33, cbrt_form));
    const double r2 = stationarity_residual(power2, sampled_profile(power2, 67, cbrt_form));
    const double r3 = stationarity_residual(power2, sampled_profile(power2, 135, cbrt_form));
    CHECK(std::log2(r1 / r2) > 1.5);
    CHECK(std::log2(r2 / r3) > 1.7);
}

TEST_CASE("residual throws on a profile outside the window") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = sampled_profile(ssep, 8, linear_form);
    p.values(3) = 0.99;
    CHECK_THROWS_AS(stationarity_residual(ssep, p), DomainError);
}

TEST_CASE("solve_steady: SSEP gives the linear profile") {
    ModelSpec ssep = make_ssep(0.2, 0.8);
    Profile p = solve_steady(ssep, build_grid(64));
    CHECK(p.converged);
    CHECK(p.residual <= 1e-10);
    for (int i = 0; i < 64; ++i) {
        const double exact = 0.2 + 0.6 * p.grid.cell_points[i];
        CHECK(std::abs(p.values(i) - exact) <= 1e-10);
    }
}

TEST_CASE("solve_steady: equal reservoirs give the uniform state") {
    ModelSpec ssep = make_ssep(0.5, 0.5);
    Profile p = solve_steady(ssep, build_grid(32));
    for (int i = 0; i < 32; ++i) CHECK(std::abs(p.values(i) - 0.5) <= 1e-12);
}

TEST_CASE("solve_steady: K(q)=q reproduces sqrt(ql^2 + (qr^2-ql^2)x)") {
    // the discretization is exact on this closed form, so the solve hits it
    // to solver precision (far inside the 1e-4 budget)
    ModelSpec power = make_power_law(0.2, 0.8);
    Profile p = solve_steady(power, build_grid(64));
    double err = 0.0;
    for (int i = 0; i < 64; ++i) {
        err = std::max(err, std::abs(p.values(i) - sqrt_form(p.grid.cell_points[i], 0.2, 0.8)));
    }
    CHECK(err <= 1e-4);
    CHECK(err <= 1e-9);
}

TEST_CASE("solve_steady: K(q)=q^2 converges to its closed form at h^2") {
    ModelSpec power2 = make_power_law(0.4, 0.8, 2.0);
    auto max_err = [&](int M) {
        Profile p = solve_steady(power2, build_grid(M));
        double err = 0.0;
        for (int i = 0; i < M; ++i) {
            err = std::max(err, std::abs(p.values(i) - cbrt_form(p.grid.cell_points[i], 0.4, 0.8)));
        }
        return err;
    };
    const double e32 = max_err(32);
    const double e65 = max_err(65);
    CHECK(e65 <= 1e-4);
    CHECK(std::log2(e32 / e65) > 1.8);  // h^2
}

TEST_CASE("scalar solutions are monotone between their boundary values") {
    for (ModelSpec spec : {make_ssep(0.2, 0.8), make_power_law(0.2, 0.8),
                           make_polynomial(0.3, 0.7, {0.5, 1.0}, {0.0, 0.0, -0.5})}) {
        Profile p = solve_steady(spec, build_grid(40));
        CHECK(p.values(0) >= spec.q_left(0) - 1e-12);
        CHECK(p.values(39) <= spec.q_right(0) + 1e-12);
        for (int i = 1; i < 40; ++i) CHECK(p.values(i) >= p.values(i - 1) - 1e-12);
    }
}

TEST_CASE("solution is independent of the initial guess") {
    ModelSpec power = make_power_law(0.2, 0.8);
    SteadyOptions linear_init;
    SteadyOptions midpoint_init;
    midpoint_init.init = SteadyInit::ConstantMidpoint;
    Profile a = solve_steady(power, build_grid(48), linear_init);
    Profile b = solve_steady(power, build_grid(48), midpoint_init);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 10.0 * linear_init.tol);
}

TEST_CASE("profiles at M and 2M+1 agree at shared points") {
    ModelSpec power = make_power_law(0.2, 0.8);
    const int M = 32;
    Profile coarse = solve_steady(power, build_grid(M));
    Profile fine = solve_steady(power, build_grid(2 * M + 1));
    double diff = 0.0;
    for (int i = 0; i < M; ++i) {
        // coarse cell i sits at fine cell 2i+1
        diff = std::max(diff, std::abs(coarse.values(i) - fine.values(2 * i + 1)));
    }
    CHECK(diff <= 2e-4);  // O(h^2) at h = 1/33
}

TEST_CASE("two-component solve converges and stays in the window") {
    Eigen::VectorXd ql(2), qr(2);
    ql << 0.2, 0.3;
    qr << 0.7, 0.6;
    ModelSpec two = make_two_component(ql, qr);
    Profile p = solve_steady(two, build_grid(24));
    CHECK(p.converged);
    CHECK(stationarity_residual(two, p) <= 1e-10);
    for (int i = 0; i < 24; ++i) {
        CHECK(two.domain_window.contains(p.value_at(i)));
    }
}

TEST_CASE("solver failure carries the residual history") {
    ModelSpec power = make_power_law(0.2, 0.8);
    SteadyOptions opts;
    opts.max_iter = 0;
    try {
        solve_steady(power, build_grid(16), opts);
        CHECK(false);
    } catch (const SolverError& e) {
        CHECK_FALSE(e.residual_history().empty());
    }
    SteadyOptions bad_tol;
    bad_tol.tol = 0.0;
    CHECK_THROWS_AS(solve_steady(power, build_grid(16), bad_tol), ArgumentError);
}
