#include "nesslab/model.hpp"

#include <cmath>
#include <sstream>

#include "nesslab/errors.hpp"

namespace nesslab {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

double poly_eval(const std::vector<double>& c, double q) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * q + *it;
    return acc;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(c[k] * static_cast<double>(k));
    return d;
}

Eigen::MatrixXd scalar_matrix(double v) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = v;
    return m;
}

std::string format_point(const Eigen::VectorXd& q) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q(i);
    os << ")";
    return os.str();
}

void check_window(const ModelSpec& spec, const Eigen::VectorXd& q, const char* op) {
    if (q.size() != spec.n) {
        throw ArgumentError(std::string(op) + ": density vector has wrong dimension");
    }
    const int bad = spec.domain_window.violating_component(q);
    if (bad >= 0) {
        std::ostringstream os;
        os << op << ": component q[" << bad << "] = " << q(bad) << " outside window ["
           << spec.domain_window.lo(bad) << ", " << spec.domain_window.hi(bad) << "] of model '"
           << spec.name << "'";
        throw DomainError(os.str(), bad);
    }
}

// Binary entropy s(q) = -q ln q - (1-q) ln(1-q) and its derivatives.
double binary_entropy(double q) { return -q * std::log(q) - (1.0 - q) * std::log(1.0 - q); }
double binary_entropy_d1(double q) { return std::log((1.0 - q) / q); }
double binary_entropy_d2(double q) { return -1.0 / (q * (1.0 - q)); }

Box unit_open_box() {
    Box b;
    b.lo = Eigen::VectorXd::Constant(1, 1e-6);
    b.hi = Eigen::VectorXd::Constant(1, 1.0 - 1e-6);
    return b;
}

} // namespace

bool Box::contains(const Eigen::VectorXd& q) const { return violating_component(q) < 0; }

int Box::violating_component(const Eigen::VectorXd& q) const {
    for (int i = 0; i < q.size(); ++i) {
        if (!(q(i) >= lo(i) && q(i) <= hi(i))) return i;
    }
    return -1;
}

Box default_window(const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right,
                   const std::optional<Box>& clamp) {
    Box w;
    const int n = static_cast<int>(q_left.size());
    w.lo.resize(n);
    w.hi.resize(n);
    for (int i = 0; i < n; ++i) {
        const double a = std::min(q_left(i), q_right(i));
        const double b = std::max(q_left(i), q_right(i));
        const double span = b - a;
        const double margin = span > 0.0 ? 0.05 * span : 0.05;
        w.lo(i) = a - margin;
        w.hi(i) = b + margin;
        if (clamp) {
            w.lo(i) = std::max(w.lo(i), clamp->lo(i));
            w.hi(i) = std::min(w.hi(i), clamp->hi(i));
        }
    }
    return w;
}

ModelSpec make_ssep(double q_left, double q_right) {
    ModelSpec m;
    m.name = "ssep";
    m.n = 1;
    m.mobility = [](const Eigen::VectorXd&) { return scalar_matrix(1.0); };
    m.mobility_grad = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>{scalar_matrix(0.0)};
    };
    m.entropy = [](const Eigen::VectorXd& q) { return binary_entropy(q(0)); };
    m.entropy_grad = [](const Eigen::VectorXd& q) {
        return Eigen::VectorXd::Constant(1, binary_entropy_d1(q(0))).eval();
    };
    m.entropy_hess = [](const Eigen::VectorXd& q) { return scalar_matrix(binary_entropy_d2(q(0))); };
    m.q_left = Eigen::VectorXd::Constant(1, q_left);
    m.q_right = Eigen::VectorXd::Constant(1, q_right);
    m.domain_window = default_window(m.q_left, m.q_right, unit_open_box());
    return m;
}

ModelSpec make_gaussian(double q_left, double q_right, double mobility_value, double curvature) {
    ModelSpec m;
    m.name = "gaussian";
    m.n = 1;
    m.mobility = [mobility_value](const Eigen::VectorXd&) { return scalar_matrix(mobility_value); };
    m.mobility_grad = [](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>{scalar_matrix(0.0)};
    };
    m.entropy = [curvature](const Eigen::VectorXd& q) { return -0.5 * curvature * q(0) * q(0); };
    m.entropy_grad = [curvature](const Eigen::VectorXd& q) {
        return Eigen::VectorXd::Constant(1, -curvature * q(0)).eval();
    };
    m.entropy_hess = [curvature](const Eigen::VectorXd&) { return scalar_matrix(-curvature); };
    m.q_left = Eigen::VectorXd::Constant(1, q_left);
    m.q_right = Eigen::VectorXd::Constant(1, q_right);
    m.domain_window = default_window(m.q_left, m.q_right);
    return m;
}

ModelSpec make_power_law(double q_left, double q_right, double alpha) {
    ModelSpec m;
    m.name = "power_law";
    m.n = 1;
    m.mobility = [alpha](const Eigen::VectorXd& q) { return scalar_matrix(std::pow(q(0), alpha)); };
    m.mobility_grad = [alpha](const Eigen::VectorXd& q) {
        return std::vector<Eigen::MatrixXd>{scalar_matrix(alpha * std::pow(q(0), alpha - 1.0))};
    };
    m.entropy = [](const Eigen::VectorXd& q) { return binary_entropy(q(0)); };
    m.entropy_grad = [](const Eigen::VectorXd& q) {
        return Eigen::VectorXd::Constant(1, binary_entropy_d1(q(0))).eval();
    };
    m.entropy_hess = [](const Eigen::VectorXd& q) { return scalar_matrix(binary_entropy_d2(q(0))); };
    m.q_left = Eigen::VectorXd::Constant(1, q_left);
    m.q_right = Eigen::VectorXd::Constant(1, q_right);
    m.domain_window = default_window(m.q_left, m.q_right, unit_open_box());
    return m;
}

ModelSpec make_two_component(const Eigen::VectorXd& q_left, const Eigen::VectorXd& q_right,
                             double coupling) {
    ModelSpec m;
    m.name = "two_component";
    m.n = 2;
    m.mobility = [coupling](const Eigen::VectorXd& q) {
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(2, 2);
        K(0, 1) = coupling * q(0);
        K(1, 0) = coupling * q(1);
        return K;
    };
    m.mobility_grad = [coupling](const Eigen::VectorXd&) {
        std::vector<Eigen::MatrixXd> dK(2, Eigen::MatrixXd::Zero(2, 2));
        dK[0](0, 1) = coupling;  // dK_01/dq_0
        dK[1](1, 0) = coupling;  // dK_10/dq_1
        return dK;
    };
    m.entropy = [](const Eigen::VectorXd& q) { return -0.5 * q.squaredNorm(); };
    m.entropy_grad = [](const Eigen::VectorXd& q) { return (-q).eval(); };
    m.entropy_hess = [](const Eigen::VectorXd&) {
        return (-Eigen::MatrixXd::Identity(2, 2)).eval();
    };
    m.q_left = q_left;
    m.q_right = q_right;
    m.domain_window = default_window(q_left, q_right);
    return m;
}

ModelSpec make_polynomial(double q_left, double q_right, const std::vector<double>& mobility_coeffs,
                          const std::vector<double>& entropy_coeffs) {
    if (mobility_coeffs.empty() || entropy_coeffs.empty()) {
        throw ArgumentError("make_polynomial: coefficient lists must be non-empty");
    }
    ModelSpec m;
    m.name = "polynomial";
    m.n = 1;
    const auto kd = poly_derivative(mobility_coeffs);
    const auto sd = poly_derivative(entropy_coeffs);
    const auto sdd = poly_derivative(sd);
    m.mobility = [mobility_coeffs](const Eigen::VectorXd& q) {
        return scalar_matrix(poly_eval(mobility_coeffs, q(0)));
    };
    m.mobility_grad = [kd](const Eigen::VectorXd& q) {
        return std::vector<Eigen::MatrixXd>{scalar_matrix(poly_eval(kd, q(0)))};
    };
    m.entropy = [entropy_coeffs](const Eigen::VectorXd& q) {
        return poly_eval(entropy_coeffs, q(0));
    };
    m.entropy_grad = [sd](const Eigen::VectorXd& q) {
        return Eigen::VectorXd::Constant(1, poly_eval(sd, q(0))).eval();
    };
    m.entropy_hess = [sdd](const Eigen::VectorXd& q) {
        return scalar_matrix(poly_eval(sdd, q(0)));
    };
    m.q_left = Eigen::VectorXd::Constant(1, q_left);
    m.q_right = Eigen::VectorXd::Constant(1, q_right);
    m.domain_window = default_window(m.q_left, m.q_right);
    return m;
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
}

std::vector<double> numbered_params(const std::map<std::string, double>& params,
                                    const std::string& prefix) {
    std::vector<double> out;
    for (int k = 0;; ++k) {
        auto it = params.find(prefix + std::to_string(k));
        if (it == params.end()) break;
        out.push_back(it->second);
    }
    return out;
}

std::vector<ModelCatalogEntry> build_catalog() {
    std::vector<ModelCatalogEntry> cat;

    ModelCatalogEntry ssep;
    ssep.name = "ssep";
    ssep.build = [](const Eigen::VectorXd& ql, const Eigen::VectorXd& qr,
                    const std::map<std::string, double>&) { return make_ssep(ql(0), qr(0)); };
    ssep.closed_form.steady_profile = [](double x, double ql, double qr) {
        return ql + (qr - ql) * x;
    };
    ssep.closed_form.phi = [](double, double ql, double qr) {
        const double b = qr - ql;
        return -2.0 * b * b;
    };
    cat.push_back(ssep);

    ModelCatalogEntry gauss;
    gauss.name = "gaussian";
    gauss.build = [](const Eigen::VectorXd& ql, const Eigen::VectorXd& qr,
                     const std::map<std::string, double>& p) {
        return make_gaussian(ql(0), qr(0), param_or(p, "mobility", 1.0),
                             param_or(p, "curvature", 1.0));
    };
    gauss.closed_form.steady_profile = [](double x, double ql, double qr) {
        return ql + (qr - ql) * x;
    };
    gauss.closed_form.phi = [](double, double, double) { return 0.0; };
    cat.push_back(gauss);

    // Closed forms below are for the default alpha = 1: (q q')' = 0 makes q^2
    // affine in x, and KJ = q^2(1-q) gives phi = -3 B^2 / (4 q(x)) with
    // B = qr^2 - ql^2.
    ModelCatalogEntry power;
    power.name = "power_law";
    power.build = [](const Eigen::VectorXd& ql, const Eigen::VectorXd& qr,
                     const std::map<std::string, double>& p) {
        return make_power_law(ql(0), qr(0), param_or(p, "alpha", 1.0));
    };
    power.closed_form.steady_profile = [](double x, double ql, double qr) {
        return std::sqrt(ql * ql + (qr * qr - ql * ql) * x);
    };
    power.closed_form.phi = [](double x, double ql, double qr) {
        const double B = qr * qr - ql * ql;
        const double q = std::sqrt(ql * ql + B * x);
        return -3.0 * B * B / (4.0 * q);
    };
    cat.push_back(power);

    ModelCatalogEntry two;
    two.name = "two_component";
    two.build = [](const Eigen::VectorXd& ql, const Eigen::VectorXd& qr,
                   const std::map<std::string, double>& p) {
        return make_two_component(ql, qr, param_or(p, "epsilon", 0.1));
    };
    cat.push_back(two);

    ModelCatalogEntry poly;
    poly.name = "polynomial";
    poly.build = [](const Eigen::VectorXd& ql, const Eigen::VectorXd& qr,
                    const std::map<std::string, double>& p) {
        return make_polynomial(ql(0), qr(0), numbered_params(p, "k"), numbered_params(p, "s"));
    };
    cat.push_back(poly);

    return cat;
}

} // namespace

const std::vector<ModelCatalogEntry>& model_catalog() {
    static const std::vector<ModelCatalogEntry> cat = build_catalog();
    return cat;
}

const ModelCatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : model_catalog()) {
        if (e.name == name) return e;
    }
    throw ArgumentError("unknown model '" + name + "'");
}

bool catalog_has(const std::string& name) {
    for (const auto& e : model_catalog()) {
        if (e.name == name) return true;
    }
    return false;
}

Eigen::MatrixXd eval_mobility(const ModelSpec& spec, const Eigen::VectorXd& q) {
    check_window(spec, q, "eval_mobility");
    return spec.mobility(q);
}

std::vector<Eigen::MatrixXd> eval_mobility_grad(const ModelSpec& spec, const Eigen::VectorXd& q) {
    check_window(spec, q, "eval_mobility_grad");
    return spec.mobility_grad(q);
}

Eigen::MatrixXd eval_static_covariance(const ModelSpec& spec, const Eigen::VectorXd& q) {
    check_window(spec, q, "eval_static_covariance");
    const Eigen::MatrixXd H = spec.entropy_hess(q);
    if (!all_finite(H)) {
        throw PhaseWindowError("eval_static_covariance: entropy Hessian not finite at " +
                               format_point(q));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    if (es.eigenvalues().maxCoeff() >= 0.0) {
        throw PhaseWindowError(
            "eval_static_covariance: entropy Hessian not negative definite at " + format_point(q));
    }
    const Eigen::VectorXd inv = (-es.eigenvalues()).cwiseInverse();
    Eigen::MatrixXd J = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (J + J.transpose());
}

ValidationReport validate_model(const ModelSpec& spec, int probe_count) {
    if (probe_count < 2) throw ArgumentError("validate_model: probe_count must be >= 2");
    ValidationReport rep;
    rep.worst_mobility_sym_eig = std::numeric_limits<double>::infinity();
    rep.worst_hessian_eig = -std::numeric_limits<double>::infinity();

    const int n = spec.n;
    std::vector<int> idx(n, 0);
    Eigen::VectorXd q(n);
    const long total = static_cast<long>(std::pow(probe_count, n));
    for (long it = 0; it < total; ++it) {
        long rem = it;
        for (int d = 0; d < n; ++d) {
            idx[d] = static_cast<int>(rem % probe_count);
            rem /= probe_count;
        }
        for (int d = 0; d < n; ++d) {
            const double lo = spec.domain_window.lo(d);
            const double hi = spec.domain_window.hi(d);
            q(d) = lo + (hi - lo) * idx[d] / (probe_count - 1);
        }

        const Eigen::MatrixXd K = spec.mobility(q);
        const auto dK = spec.mobility_grad(q);
        const double s = spec.entropy(q);
        const Eigen::MatrixXd H = spec.entropy_hess(q);

        bool finite = all_finite(K) && std::isfinite(s) && all_finite(H);
        for (const auto& slab : dK) finite = finite && all_finite(slab);
        if (!finite) {
            rep.pass = false;
            rep.failures.push_back("non-finite K/K'/s/s'' (singular Hessian) at " +
                                   format_point(q));
            continue;
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(0.5 * (K + K.transpose()));
        const double kmin = ek.eigenvalues().minCoeff();
        rep.worst_mobility_sym_eig = std::min(rep.worst_mobility_sym_eig, kmin);
        if (kmin <= 0.0) {
            rep.pass = false;
            rep.failures.push_back("sym(K) not positive definite at " + format_point(q));
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(0.5 * (H + H.transpose()));
        const double hmax = eh.eigenvalues().maxCoeff();
        rep.worst_hessian_eig = std::max(rep.worst_hessian_eig, hmax);
        if (hmax >= 0.0) {
            rep.pass = false;
            rep.failures.push_back("entropy Hessian not negative definite at " + format_point(q));
        }
    }
    return rep;
}

} // namespace nesslab
