#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "hamdesc/types.hpp"

namespace hamdesc {

/// Dual norm ||.||_* = l_q; the primal norm is l_{q'} with 1/q + 1/q' = 1.
struct NormDescriptor {
    double q = 2.0;

    void validate() const;
    /// q' = q / (q - 1).
    double primal_exponent() const;
    /// N = q - 1, defined for q >= 2.
    double hessian_constant() const;
};

/// k(p) = phi_a^A(||p||_q).
struct PowerKinetic {
    double a = 2.0;
    double A = 2.0;
    NormDescriptor norm{};

    static PowerKinetic relativistic(NormDescriptor n = {}) { return {2.0, 1.0, n}; }
    static PowerKinetic power(double a, NormDescriptor n = {}) { return {a, a, n}; }

    void validate() const;
    /// b = a / (a - 1); infinite for a = 1.
    double b() const;
    /// B = A / (A - 1); infinite for A = 1.
    double B() const;
    bool is_relativistic() const { return a == 2.0 && A == 1.0; }
};

/// k(p) = <p, M^{-1} p> / 2 for symmetric positive definite M.
class QuadraticKinetic {
public:
    explicit QuadraticKinetic(Matrix M);

    const Matrix& metric() const { return M_; }
    double eval(const Vector& p) const;
    Vector grad(const Vector& p) const;
    Vector conj_grad(const Vector& v) const { return M_ * v; }
    double conj(const Vector& v) const { return 0.5 * v.dot(M_ * v); }
    const Matrix& conj_hess() const { return M_; }
    Matrix hess() const;

private:
    Matrix M_;
    Eigen::LLT<Matrix> llt_;
};

using KineticEnergy = std::variant<PowerKinetic, QuadraticKinetic>;

struct ConjugateDiagnostics {
    double rho_max = 1.0;
    std::vector<std::pair<double, double>> rho_samples;
};

// Scalar profile phi_a^A(t) = ((t^a + 1)^{A/a} - 1) / A.
double phi_eval(double a, double A, double t);
double phi_grad(double a, double A, double t);
/// Second derivative; +inf at t = 0 when a < 2.
double phi_hess(double a, double A, double t);
double phi_grad_inverse(double a, double A, double s);
/// Convex conjugate; +inf outside the effective domain.
double phi_conj(double a, double A, double t);
double rho_eval(double a, double A, double t);
double c_const(double a, double A);
ConjugateDiagnostics conjugate_diagnostics(double a, double A, const std::vector<double>& t_grid);

// l_q norms. Gradient and Hessian require p != 0 (exact zero check only).
double lq_norm(const Vector& p, double q);
Vector lq_norm_grad(const Vector& p, double q);
Matrix lq_norm_hess(const Vector& p, double q);
double norm_hess_maxeigen_bound(const NormDescriptor& norm, const Vector& p);

double kinetic_eval(const PowerKinetic& K, const Vector& p);
Vector kinetic_grad(const PowerKinetic& K, const Vector& p);
/// Hessian of k, capped like kinetic_conj_hess. At p = 0 it returns
/// phi''(0) I, which is exact for the Euclidean norm only.
Matrix kinetic_hess(const PowerKinetic& K, const Vector& p);
double kinetic_conj(const PowerKinetic& K, const Vector& v);
Vector kinetic_conj_grad(const PowerKinetic& K, const Vector& v);
/// Hessian of k*; entries are capped at a large finite value where the
/// profile curvature blows up (v = 0 with b > 2).
Matrix kinetic_conj_hess(const PowerKinetic& K, const Vector& v);

double kinetic_eval(const KineticEnergy& K, const Vector& p);
Vector kinetic_grad(const KineticEnergy& K, const Vector& p);
Matrix kinetic_hess(const KineticEnergy& K, const Vector& p);
double kinetic_conj(const KineticEnergy& K, const Vector& v);
Vector kinetic_conj_grad(const KineticEnergy& K, const Vector& v);
Matrix kinetic_conj_hess(const KineticEnergy& K, const Vector& v);

}  // namespace hamdesc
