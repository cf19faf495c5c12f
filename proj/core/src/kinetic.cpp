#include "hamdesc/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"

namespace hamdesc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stand-in for unbounded curvature entries so linear solves stay finite.
constexpr double kCurvatureCap = 1e150;

void check_exponents(double a, double A) {
    if (!(a >= 1.0) || !(A >= 1.0)) {
        throw DomainError("kinetic exponents must satisfy a, A >= 1 (got a=" + std::to_string(a) +
                          ", A=" + std::to_string(A) + ")");
    }
}

void check_nonneg(double t, const char* what) {
    if (!(t >= 0.0)) throw DomainError(std::string(what) + " requires a nonnegative argument");
}

// log(1 + t^a) without overflow for large t.
double log1p_pow(double t, double a) {
    if (t <= 1.0) return std::log1p(std::pow(t, a));
    return a * std::log(t) + std::log1p(std::pow(t, -a));
}

// t^a / (t^a + 1)
double pow_fraction(double t, double a) {
    if (t <= 1.0) {
        const double ta = std::pow(t, a);
        return ta / (ta + 1.0);
    }
    return 1.0 / (1.0 + std::pow(t, -a));
}

bool is_zero(const Vector& v) { return (v.array() == 0.0).all(); }

bool is_identity_pairing(const PowerKinetic& K) {
    return K.a == 2.0 && K.A == 2.0 && K.norm.q == 2.0;
}

}  // namespace

// ---------------------------------------------------------------- Norms

void NormDescriptor::validate() const {
    if (!(q > 1.0) || !std::isfinite(q)) {
        throw DomainError("norm exponent q must lie in (1, inf), got " + std::to_string(q));
    }
}

double NormDescriptor::primal_exponent() const {
    validate();
    return q / (q - 1.0);
}

double NormDescriptor::hessian_constant() const {
    validate();
    if (q < 2.0) throw DomainError("norm Hessian constant N needs q >= 2");
    return q - 1.0;
}

void PowerKinetic::validate() const {
    check_exponents(a, A);
    if (a == 1.0 && A == 1.0) throw DomainError("power kinetic needs a > 1 or A > 1");
    norm.validate();
}

double PowerKinetic::b() const { return a == 1.0 ? kInf : a / (a - 1.0); }
double PowerKinetic::B() const { return A == 1.0 ? kInf : A / (A - 1.0); }

double lq_norm(const Vector& p, double q) {
    if (q == 2.0) return p.stableNorm();
    const double m = p.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    const double s = (p.cwiseAbs() / m).array().pow(q).sum();
    return m * std::pow(s, 1.0 / q);
}

Vector lq_norm_grad(const Vector& p, double q) {
    const double n = lq_norm(p, q);
    if (n == 0.0) throw DomainError("norm gradient undefined at p = 0");
    if (q == 2.0) return p / n;
    Vector g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double r = std::abs(p[i]) / n;
        g[i] = (p[i] > 0.0 ? 1.0 : (p[i] < 0.0 ? -1.0 : 0.0)) * std::pow(r, q - 1.0);
    }
    return g;
}

Matrix lq_norm_hess(const Vector& p, double q) {
    const double n = lq_norm(p, q);
    if (n == 0.0) throw DomainError("norm Hessian undefined at p = 0");
    const Vector g = lq_norm_grad(p, q);
    Matrix H = -g * g.transpose();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double r = std::abs(p[i]) / n;
        const double d = (q == 2.0) ? 1.0 : std::pow(r, q - 2.0);
        H(i, i) += std::min(d, kCurvatureCap);
    }
    return ((q - 1.0) / n) * H;
}

double norm_hess_maxeigen_bound(const NormDescriptor& norm, const Vector& p) {
    const double N = norm.hessian_constant();
    const double n = lq_norm(p, norm.q);
    if (n == 0.0) throw DomainError("norm Hessian bound undefined at p = 0");
    return N / n;
}

// ---------------------------------------------------------------- Profiles

double phi_eval(double a, double A, double t) {
    check_exponents(a, A);
    check_nonneg(t, "phi_eval");
    if (t == 0.0) return 0.0;
    if (a == A) return std::pow(t, a) / a;
    if (t > 1.0) {
        // t^A (1 + t^{-a})^{A/a} keeps full relative accuracy in the tail.
        return (std::pow(t, A) * std::exp((A / a) * std::log1p(std::pow(t, -a))) - 1.0) / A;
    }
    return std::expm1((A / a) * log1p_pow(t, a)) / A;
}

double phi_grad(double a, double A, double t) {
    check_exponents(a, A);
    check_nonneg(t, "phi_grad");
    if (t == 0.0) return a > 1.0 ? 0.0 : 1.0;
    if (a == A) return std::pow(t, a - 1.0);
    if (t > 1.0) return std::pow(t, A - 1.0) * std::exp(((A - a) / a) * std::log1p(std::pow(t, -a)));
    return std::exp(((A - a) / a) * log1p_pow(t, a) + (a - 1.0) * std::log(t));
}

double phi_hess(double a, double A, double t) {
    check_exponents(a, A);
    check_nonneg(t, "phi_hess");
    if (a == 1.0) return (A - 1.0) * std::pow(t + 1.0, A - 2.0);
    if (t == 0.0) {
        if (a > 2.0) return 0.0;
        if (a == 2.0) return 1.0;
        return kInf;
    }
    if (a == A) return (a - 1.0) * std::pow(t, a - 2.0);
    return phi_grad(a, A, t) / t * (a - 1.0 + (A - a) * pow_fraction(t, a));
}

double phi_grad_inverse(double a, double A, double s) {
    check_exponents(a, A);
    check_nonneg(s, "phi_grad_inverse");
    if (a == 1.0 && A == 1.0) {
        if (s > 1.0) throw RangeError("phi_grad_inverse: s exceeds the gradient range of phi_1^1");
        return 0.0;
    }
    if (a == 1.0) return s <= 1.0 ? 0.0 : std::pow(s, 1.0 / (A - 1.0)) - 1.0;
    if (s == 0.0) return 0.0;
    if (A == 1.0 && s >= 1.0) {
        throw RangeError("phi_grad_inverse: s = " + std::to_string(s) +
                         " is outside the gradient range [0, 1) for A = 1");
    }
    if (a == A) return std::pow(s, 1.0 / (a - 1.0));
    if (a == 2.0 && A == 1.0) return s / std::sqrt((1.0 - s) * (1.0 + s));

    double hi = std::max(1.0, 2.0 * std::pow(s, 1.0 / (a - 1.0)));
    while (phi_grad(a, A, hi) < s) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw RangeError("phi_grad_inverse: bracket overflow");
    }
    return solve_increasing([&](double t) { return phi_grad(a, A, t); },
                            [&](double t) { return phi_hess(a, A, t); }, s, 0.0, hi);
}

double phi_conj(double a, double A, double t) {
    check_exponents(a, A);
    check_nonneg(t, "phi_conj");
    if (a == 1.0 && A == 1.0) return t <= 1.0 ? 0.0 : kInf;
    if (a == A) {
        const double b = a / (a - 1.0);
        return std::pow(t, b) / b;
    }
    if (a == 1.0) {
        if (t <= 1.0) return 0.0;
        const double B = A / (A - 1.0);
        return std::pow(t, B) / B - t + 1.0 / A;
    }
    if (A == 1.0) {
        if (t > 1.0) return kInf;
        const double b = a / (a - 1.0);
        return 1.0 - std::pow(1.0 - std::pow(t, b), 1.0 / b);
    }
    if (t == 0.0) return 0.0;
    const double s = phi_grad_inverse(a, A, t);
    return t * s - phi_eval(a, A, s);
}

double rho_eval(double a, double A, double t) {
    if (!(a > 1.0) || !(A > 1.0) || a == A) {
        throw DomainError("rho_eval requires a, A > 1 and a != A");
    }
    if (!(t > 0.0)) throw DomainError("rho_eval requires t > 0");
    const double u = pow_fraction(t, a);
    const double w = std::exp(-((A - 1.0) / (a - 1.0)) * log1p_pow(t, a));
    return std::pow(u + w, (a - A) / (a * (A - 1.0)));
}

double c_const(double a, double A) {
    if (!(a > 1.0) || !(A > 1.0)) throw DomainError("c_const requires a, A > 1");
    if (std::abs(a - A) < 1e-12) return 1.0;
    const double r = (a - 1.0) / (A - 1.0);
    const double base = 1.0 - std::pow(r, (a - 1.0) / (A - a)) + std::pow(r, (A - 1.0) / (A - a));
    const double b = a / (a - 1.0);
    const double B = A / (A - 1.0);
    return std::pow(base, (B - b) / b);
}

ConjugateDiagnostics conjugate_diagnostics(double a, double A, const std::vector<double>& t_grid) {
    ConjugateDiagnostics d;
    d.rho_max = c_const(a, A);
    d.rho_samples.reserve(t_grid.size());
    for (double t : t_grid) d.rho_samples.emplace_back(t, rho_eval(a, A, t));
    return d;
}

// ---------------------------------------------------------------- PowerKinetic

double kinetic_eval(const PowerKinetic& K, const Vector& p) {
    return phi_eval(K.a, K.A, lq_norm(p, K.norm.q));
}

Vector kinetic_grad(const PowerKinetic& K, const Vector& p) {
    if (K.a == 1.0) throw DomainError("kinetic gradient needs a > 1 (non-differentiable at 0)");
    if (is_identity_pairing(K)) return p;
    if (is_zero(p)) return Vector::Zero(p.size());
    const double n = lq_norm(p, K.norm.q);
    return phi_grad(K.a, K.A, n) * lq_norm_grad(p, K.norm.q);
}

Matrix kinetic_hess(const PowerKinetic& K, const Vector& p) {
    const auto d = p.size();
    if (is_identity_pairing(K)) return Matrix::Identity(d, d);
    if (is_zero(p)) return std::min(phi_hess(K.a, K.A, 0.0), kCurvatureCap) * Matrix::Identity(d, d);
    const double n = lq_norm(p, K.norm.q);
    const Vector g = lq_norm_grad(p, K.norm.q);
    return std::min(phi_hess(K.a, K.A, n), kCurvatureCap) * g * g.transpose() +
           phi_grad(K.a, K.A, n) * lq_norm_hess(p, K.norm.q);
}

double kinetic_conj(const PowerKinetic& K, const Vector& v) {
    return phi_conj(K.a, K.A, lq_norm(v, K.norm.primal_exponent()));
}

Vector kinetic_conj_grad(const PowerKinetic& K, const Vector& v) {
    if (is_identity_pairing(K)) return v;
    const double qp = K.norm.primal_exponent();
    const double m = lq_norm(v, qp);
    const double s = phi_grad_inverse(K.a, K.A, m);
    if (m == 0.0 || s == 0.0) return Vector::Zero(v.size());
    return s * lq_norm_grad(v, qp);
}

Matrix kinetic_conj_hess(const PowerKinetic& K, const Vector& v) {
    const auto d = v.size();
    if (is_identity_pairing(K)) return Matrix::Identity(d, d);
    const double qp = K.norm.primal_exponent();
    const double m = lq_norm(v, qp);
    if (m == 0.0) {
        const double h0 = phi_hess(K.a, K.A, 0.0);
        const double c = h0 == 0.0 ? kCurvatureCap : std::min(1.0 / h0, kCurvatureCap);
        return c * Matrix::Identity(d, d);
    }
    const double s = phi_grad_inverse(K.a, K.A, m);
    const double h = phi_hess(K.a, K.A, s);
    const double curv = h == 0.0 ? kCurvatureCap : std::min(1.0 / h, kCurvatureCap);
    const Vector g = lq_norm_grad(v, qp);
    Matrix H = curv * g * g.transpose();
    if (s > 0.0) H += s * lq_norm_hess(v, qp);
    return H;
}

// ---------------------------------------------------------------- Quadratic

QuadraticKinetic::QuadraticKinetic(Matrix M) : M_(std::move(M)), llt_(M_) {
    if (M_.rows() != M_.cols() || llt_.info() != Eigen::Success) {
        throw DomainError("quadratic kinetic needs a symmetric positive definite matrix");
    }
}

double QuadraticKinetic::eval(const Vector& p) const { return 0.5 * p.dot(llt_.solve(p)); }
Vector QuadraticKinetic::grad(const Vector& p) const { return llt_.solve(p); }
Matrix QuadraticKinetic::hess() const { return llt_.solve(Matrix::Identity(M_.rows(), M_.cols())); }

// ---------------------------------------------------------------- Dispatch

double kinetic_eval(const KineticEnergy& K, const Vector& p) {
    return std::visit([&](const auto& k) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_eval(k, p);
        else return k.eval(p);
    }, K);
}

Vector kinetic_grad(const KineticEnergy& K, const Vector& p) {
    return std::visit([&](const auto& k) -> Vector {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_grad(k, p);
        else return k.grad(p);
    }, K);
}

Matrix kinetic_hess(const KineticEnergy& K, const Vector& p) {
    return std::visit([&](const auto& k) -> Matrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_hess(k, p);
        else return k.hess();
    }, K);
}

double kinetic_conj(const KineticEnergy& K, const Vector& v) {
    return std::visit([&](const auto& k) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_conj(k, v);
        else return k.conj(v);
    }, K);
}

Vector kinetic_conj_grad(const KineticEnergy& K, const Vector& v) {
    return std::visit([&](const auto& k) -> Vector {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_conj_grad(k, v);
        else return k.conj_grad(v);
    }, K);
}

Matrix kinetic_conj_hess(const KineticEnergy& K, const Vector& v) {
    return std::visit([&](const auto& k) -> Matrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(k)>, PowerKinetic>) return kinetic_conj_hess(k, v);
        else return k.conj_hess();
    }, K);
}

}  // namespace hamdesc
