#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nesslab {

/// Axis-aligned box in density space.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    bool contains(const Eigen::VectorXd& q) const;
    /// Index of the first component of q outside the box, or -1.
    int violating_component(const Eigen::VectorXd& q) const;
};

/// One problem instance: mobility K with its gradient tensor, entropy s with
/// gradient and Hessian, reservoir densities, and the q-window on which the
/// single-phase smoothness assumptions are declared to hold.
///
/// mobility_grad returns dK[l] with dK[l](j,k) = dK_jk/dq_l, so the
/// contraction [K'(q) v]_jk = sum_l dK[l](j,k) v_l.
struct ModelSpec {
    std::string name;
    int n = 1;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> mobility;
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> mobility_grad;
    std::function<double(const Eigen::VectorXd&)> entropy;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> entropy_grad;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> entropy_hess;
    Eigen::VectorXd q_left;
    Eigen::VectorXd q_right;
    Box domain_window;
};

/// Analytic facts used by tests; entries are null when no closed form exists.
/// Scalar models only: arguments are (x, q_left, q_right).
struct ClosedFormNotes {
    std::function<double(double, double, double)> steady_profile;
    std::function<double(double, double, double)> phi;
};

struct ModelCatalogEntry {
    std::string name;
    std::function<ModelSpec(const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right,
                            const std::map<std::string, double>& params)>
        build;
    ClosedFormNotes closed_form;
};

/// Built-in models: "ssep", "gaussian", "power_law", "two_component",
/// plus "polynomial" driven by coefficient parameters.
const std::vector<ModelCatalogEntry>& model_catalog();
const ModelCatalogEntry& catalog_entry(const std::string& name);
bool catalog_has(const std::string& name);

/// Convenience builders used throughout the tests.
ModelSpec make_ssep(double q_left, double q_right);
ModelSpec make_gaussian(double q_left, double q_right, double mobility_value = 1.0,
                        double curvature = 1.0);
ModelSpec make_power_law(double q_left, double q_right, double alpha = 1.0);
ModelSpec make_two_component(const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right,
                             double coupling = 0.1);
ModelSpec make_polynomial(double q_left, double q_right,
                          const std::vector<double>& mobility_coeffs,
                          const std::vector<double>& entropy_coeffs);

/// Default validity window: the interval spanned by the boundary densities,
/// inflated by 5% of max(span, 1) on each side, clamped to an intrinsic
/// validity box when the model has one.
Box default_window(const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right,
                   const std::optional<Box>& clamp = std::nullopt);

Eigen::MatrixXd eval_mobility(const ModelSpec& spec, const Eigen::VectorXd& q);
std::vector<Eigen::MatrixXd> eval_mobility_grad(const ModelSpec& spec, const Eigen::VectorXd& q);

/// J(q) = -(Hess s)^{-1}; throws PhaseWindowError when the Hessian is
/// singular or not negative definite.
Eigen::MatrixXd eval_static_covariance(const ModelSpec& spec, const Eigen::VectorXd& q);

struct ValidationReport {
    bool pass = true;
    double worst_mobility_sym_eig = 0.0;  // min eigenvalue of sym(K) over probes
    double worst_hessian_eig = 0.0;       // max eigenvalue of Hess s over probes
    std::vector<std::string> failures;
};

/// Probes both single-phase invariants on a lattice of probe_count points per
/// q-dimension spanning the window. Failures land in the report, not throws.
ValidationReport validate_model(const ModelSpec& spec, int probe_count);

} // namespace nesslab
