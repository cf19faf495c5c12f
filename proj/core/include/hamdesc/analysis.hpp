#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamdesc/integrators.hpp"
#include "hamdesc/kinetic.hpp"
#include "hamdesc/objective.hpp"

namespace hamdesc {

/// alpha(y) = scale * (y + 1)^{-exponent}; constant when exponent = 0.
class AlphaFunction {
public:
    AlphaFunction() = default;
    static AlphaFunction constant(double value);
    static AlphaFunction decaying(double scale, double exponent);

    double operator()(double y) const;
    double derivative(double y) const;
    bool is_constant() const { return exponent_ == 0.0; }
    double scale() const { return scale_; }
    double exponent() const { return exponent_; }

private:
    double scale_ = 1.0;
    double exponent_ = 0.0;
};

struct ConstantsBundle {
    Method method = Method::Implicit;
    AlphaFunction alpha;
    std::optional<double> alpha_star;  // alpha(3 H0) once H0 is known
    double C_alpha_gamma = 0.0;
    std::optional<double> C_fK;
    std::optional<double> C_K;
    std::optional<double> D_fK;
    std::optional<double> D_K;
    std::optional<double> E_k;
    std::optional<double> F_k;
};

/// Constants of the first explicit method without convexity.
struct NonconvexConstants {
    double b = 2.0;     // sigma(t) = t^b / b
    double D_f = 1.0;
    double D_K = 1.0;
};

struct RateCertificate {
    Method method = Method::Implicit;
    double epsilon_max = 0.0;
    std::string factor_form;  // "divide" or "multiply"
    double beta_star = 0.0;
    double lambda_star = 0.0;
};

double lambda_rate(double alpha, double beta, double gamma);
/// (beta*, lambda*) maximizing lambda_rate over beta in (0, min(alpha, gamma)].
std::pair<double, double> beta_lambda_star(double alpha, double gamma);

/// H + beta <x - x*, p>
double lyapunov_value(const State& s, const ObjectiveSpec& f, const KineticEnergy& K, double beta,
                      const Vector& x_star, double f_star);

AlphaFunction alpha_known_power(double mu, double a, double A);
AlphaFunction alpha_relativistic(double mu, double A);

/// Constants for the known-power pairing; method selects the extras
/// (explicit1: D_fK from L_f, D_f; explicit2: D_K, E_k, F_k, D_fK from N).
ConstantsBundle constants_known_power(const GrowthCertificate& cert, const PowerKinetic& K, double gamma,
                                      Method method = Method::Implicit);
/// Constants for the relativistic kinetic phi_2^1 paired with phi_2^B growth.
ConstantsBundle constants_relativistic(const GrowthCertificate& cert, const PowerKinetic& K, double gamma,
                                       Method method = Method::Implicit);
/// Dispatches on the certificate pairing.
ConstantsBundle constants_for(const GrowthCertificate& cert, const PowerKinetic& K, double gamma, Method method);

/// Sets alpha_star = alpha(3 H0).
ConstantsBundle with_initial_energy(ConstantsBundle bundle, double H0);

NonconvexConstants nonconvex_constants(const GrowthCertificate& cert, const PowerKinetic& K);

double psi_eval(double t);
double psi_conj(double t);

/// Exclusive upper bound on the step size for a convex method.
double step_bound(Method method, const ConstantsBundle& bundle, double gamma);
/// (gamma / (D_f D_K))^{1/(b-1)}; the bound itself is admissible.
double step_bound_nonconvex(const NonconvexConstants& c, double gamma);

RateCertificate rate_certificate(const ConstantsBundle& bundle, double gamma);

/// Guaranteed envelope W_0..W_n with f(x_i) - f(x*) <= 2 W_i.
std::vector<double> w_recursion(Method method, double W0, const ConstantsBundle& bundle, double gamma,
                                double epsilon, long n_steps);

/// Solution of W' = -lambda alpha(2W) W, lambda = (1 - gamma) C / 4, at the grid times.
std::vector<double> continuous_envelope(double W0, const AlphaFunction& alpha, double C_alpha_gamma, double gamma,
                                        const std::vector<double>& t_grid);

/// Unique v in [H/2, 3H/2] with v = H + (C alpha(2v) / 2) <x - x*, p>.
double adaptive_lyapunov_value(double H, double inner, const AlphaFunction& alpha, double C_alpha_gamma);

/// Largest violation of -C alpha'(y) y < alpha(y) over the grid (negative when it holds).
double alpha_condition_margin(const AlphaFunction& alpha, double C_alpha_gamma, const std::vector<double>& grid);

}  // namespace hamdesc
