#include "hamdesc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"
#include "hamdesc/ode.hpp"

namespace hamdesc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double u, double v) { return std::abs(u - v) <= 1e-12 * std::max(1.0, std::abs(v)); }

double require(const std::optional<double>& v, const char* name, const char* context) {
    if (!v) throw UnavailableError(std::string(context) + " needs " + name);
    return *v;
}

}  // namespace

// ---------------------------------------------------------------- alpha

AlphaFunction AlphaFunction::constant(double value) {
    if (!(value > 0.0 && value <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    AlphaFunction f;
    f.scale_ = value;
    return f;
}

AlphaFunction AlphaFunction::decaying(double scale, double exponent) {
    if (!(scale > 0.0 && scale <= 1.0) || !(exponent >= 0.0)) {
        throw DomainError("decaying alpha needs scale in (0, 1] and exponent >= 0");
    }
    AlphaFunction f;
    f.scale_ = scale;
    f.exponent_ = exponent;
    return f;
}

double AlphaFunction::operator()(double y) const {
    if (exponent_ == 0.0) return scale_;
    return scale_ * std::pow(y + 1.0, -exponent_);
}

double AlphaFunction::derivative(double y) const {
    if (exponent_ == 0.0) return 0.0;
    return -exponent_ * scale_ * std::pow(y + 1.0, -exponent_ - 1.0);
}

AlphaFunction alpha_known_power(double mu, double a, double A) {
    if (!(mu > 0.0)) throw DomainError("alpha_known_power needs mu > 0");
    if (!(a > 1.0) || !(A > 1.0)) throw DomainError("alpha_known_power needs a, A > 1");
    return AlphaFunction::constant(std::min({std::pow(mu, a - 1.0), std::pow(mu, A - 1.0), 1.0}));
}

AlphaFunction alpha_relativistic(double mu, double A) {
    if (!(mu > 0.0)) throw DomainError("alpha_relativistic needs mu > 0");
    if (!(A > 1.0 && A <= 2.0)) throw DomainError("alpha_relativistic needs A in (1, 2]");
    return AlphaFunction::decaying(std::min({std::pow(mu, A - 1.0), mu, 1.0}), A - 1.0);
}

// ---------------------------------------------------------------- rates

double lambda_rate(double alpha, double beta, double gamma) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("lambda_rate: alpha must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("lambda_rate: gamma must lie in (0, 1)");
    if (!(beta > 0.0 && beta <= std::min(alpha, gamma))) {
        throw DomainError("lambda_rate: beta must lie in (0, min(alpha, gamma)]");
    }
    const double second = beta * (1.0 - gamma) / (1.0 - beta);
    // At beta = alpha the first branch's numerator is -alpha^2 while the
    // denominator vanishes, so the minimum diverges to -inf.
    if (beta == alpha) return -kInf;
    // For beta <= alpha gamma / 2 the second branch is the minimum.
    if (beta <= alpha * gamma / 2.0) return second;
    const double first = (alpha * gamma - alpha * beta - beta * gamma) / (alpha - beta);
    return std::min(first, second);
}

std::pair<double, double> beta_lambda_star(double alpha, double gamma) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("beta_lambda_star: alpha must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("beta_lambda_star: gamma must lie in (0, 1)");
    if (alpha == 1.0) return {gamma / 2.0, gamma * (1.0 - gamma) / (2.0 - gamma)};
    const double root = std::sqrt((1.0 - gamma) * alpha * alpha + gamma * gamma / 4.0);
    const double beta = (alpha + gamma / 2.0 - root) / (1.0 + alpha);
    const double lambda = ((1.0 - gamma) * alpha + gamma / 2.0 - root) / (1.0 - alpha);
    return {beta, lambda};
}

double lyapunov_value(const State& s, const ObjectiveSpec& f, const KineticEnergy& K, double beta,
                      const Vector& x_star, double f_star) {
    const double H = kinetic_eval(K, s.p) + f.eval(s.x) - f_star;
    return H + beta * (s.x - x_star).dot(s.p);
}

// ---------------------------------------------------------------- bundles

ConstantsBundle constants_known_power(const GrowthCertificate& cert, const PowerKinetic& K, double gamma,
                                      Method method) {
    if (cert.pairing != Pairing::KnownPower) throw DomainError("certificate is not a known-power certificate");
    const double a = K.a, A = K.A;
    if (!(a > 1.0) || !(A > 1.0)) throw DomainError("known-power constants need a, A > 1");
    if (!close(a, cert.b / (cert.b - 1.0)) || !close(A, cert.B / (cert.B - 1.0))) {
        throw DomainError("kinetic exponents do not match the certificate: need a = b/(b-1), A = B/(B-1)");
    }
    ConstantsBundle c;
    c.method = method;
    c.alpha = alpha_known_power(cert.mu, a, A);
    c.C_alpha_gamma = gamma;
    c.C_fK = std::max({a - 1.0, A - 1.0, cert.L});
    const double m = std::max(a, A);
    c.C_K = m;
    const double alpha = c.alpha(0.0);
    if (method == Method::Explicit1) {
        if (cert.b < 2.0 - 1e-12 || cert.B < 2.0 - 1e-12) {
            throw DomainError("first explicit constants need b, B >= 2");
        }
        const double Lf = require(cert.L_f, "L_f", "first explicit constants");
        const double Df = require(cert.D_f, "D_f", "first explicit constants");
        c.D_fK = Lf / alpha * std::max(Df, 2.0 * c_const(a, A) * (m - 1.0));
    } else if (method == Method::Explicit2) {
        if (cert.b > 2.0 + 1e-12 || cert.B > 2.0 + 1e-12) {
            throw DomainError("second explicit constants need b, B <= 2");
        }
        double N;
        if (cert.N) N = *cert.N;
        else if (K.norm.q >= 2.0) N = K.norm.hessian_constant();
        else throw UnavailableError("second explicit constants need N (norm exponent q >= 2)");
        c.D_K = m * (m - 1.0);
        c.E_k = m - 1.0;
        c.F_k = 1.0;
        c.D_fK = (m - 1.0 + N) / alpha * std::max({2.0 * cert.L, a - 2.0, A - 2.0});
    }
    return c;
}

ConstantsBundle constants_relativistic(const GrowthCertificate& cert, const PowerKinetic& K, double gamma,
                                       Method method) {
    if (!K.is_relativistic()) throw DomainError("relativistic constants need k = phi_2^1");
    if (!(cert.B >= 2.0)) throw DomainError("relativistic constants need B >= 2");
    if (!close(cert.b, 2.0)) throw DomainError("relativistic constants need quadratic body growth b = 2");
    const double A = cert.B / (cert.B - 1.0);
    ConstantsBundle c;
    c.method = method;
    c.alpha = alpha_relativistic(cert.mu, A);
    c.C_alpha_gamma = gamma;
    c.C_fK = std::max(1.0, cert.L);
    c.C_K = 2.0;
    if (method == Method::Explicit1) {
        const double Lf = require(cert.L_f, "L_f", "relativistic first explicit constants");
        if (cert.B > 2.0) c.D_fK = 3.0 * Lf / std::min({std::pow(cert.mu, A - 1.0), cert.mu, 1.0});
        else c.D_fK = 6.0 * Lf / std::min(cert.mu, 1.0);
    } else if (method == Method::Explicit2) {
        throw UnavailableError("no second explicit analysis exists for the relativistic kinetic energy");
    }
    return c;
}

ConstantsBundle constants_for(const GrowthCertificate& cert, const PowerKinetic& K, double gamma, Method method) {
    if (cert.pairing == Pairing::Relativistic) return constants_relativistic(cert, K, gamma, method);
    return constants_known_power(cert, K, gamma, method);
}

ConstantsBundle with_initial_energy(ConstantsBundle bundle, double H0) {
    bundle.alpha_star = bundle.alpha(3.0 * H0);
    return bundle;
}

NonconvexConstants nonconvex_constants(const GrowthCertificate& cert, const PowerKinetic& K) {
    NonconvexConstants c;
    c.b = require(cert.sigma_power, "sigma_power", "non-convex constants");
    c.D_f = require(cert.D_f_smooth, "D_f_smooth", "non-convex constants");
    if (K.a == 1.0) throw DomainError("non-convex constants need a differentiable kinetic (a > 1)");
    const double s = c.b;
    if (K.a == K.A && close((K.a - 1.0) * s, K.a)) {
        c.D_K = K.a / s;  // sigma(phi'(t)) / phi(t) is constant for conjugate powers
    } else {
        c.D_K = sup_log_grid([&](double t) {
            return std::pow(phi_grad(K.a, K.A, t), s) / s / phi_eval(K.a, K.A, t);
        }, 1e-8, 1e8) * (1.0 + 1e-6);
    }
    return c;
}

// ---------------------------------------------------------------- psi

double psi_eval(double t) {
    if (!(t >= 0.0)) throw DomainError("psi needs t >= 0");
    return t < 1.0 ? 0.0 : t - 3.0 * std::cbrt(t) + 2.0;
}

double psi_conj(double t) {
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("psi* needs t in [0, 1)");
    return 2.0 / std::sqrt(1.0 - t) - 2.0;
}

// ---------------------------------------------------------------- bounds

double step_bound(Method method, const ConstantsBundle& b, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("step_bound: gamma must lie in (0, 1)");
    const double C = b.C_alpha_gamma;
    switch (method) {
        case Method::Implicit: {
            const double CfK = require(b.C_fK, "C_fK", "implicit step bound");
            return (1.0 - gamma) / (2.0 * std::max(CfK, 1.0));
        }
        case Method::Explicit1: {
            const double CfK = require(b.C_fK, "C_fK", "first explicit step bound");
            const double DfK = require(b.D_fK, "D_fK", "first explicit step bound");
            const double CK = require(b.C_K, "C_K", "first explicit step bound");
            return std::min((1.0 - gamma) / (2.0 * std::max(CfK + 6.0 * DfK / C, 1.0)),
                            C / (10.0 * CfK + 5.0 * gamma * CK));
        }
        case Method::Explicit2: {
            const double CfK = require(b.C_fK, "C_fK", "second explicit step bound");
            const double DfK = require(b.D_fK, "D_fK", "second explicit step bound");
            const double CK = require(b.C_K, "C_K", "second explicit step bound");
            const double DK = require(b.D_K, "D_K", "second explicit step bound");
            const double Ek = require(b.E_k, "E_k", "second explicit step bound");
            const double Fk = require(b.F_k, "F_k", "second explicit step bound");
            return std::min({(1.0 - gamma) / (2.0 * (CfK + 6.0 * DfK / C)),
                             (1.0 - gamma) / (8.0 * DK * (1.0 + Ek)),
                             C / (6.0 * (5.0 * CfK + 2.0 * gamma * CK) + 12.0 * gamma * C),
                             std::sqrt(1.0 / (6.0 * gamma * gamma * DK * Fk))});
        }
        default:
            throw DomainError("no step-size bound for method " + to_string(method));
    }
}

double step_bound_nonconvex(const NonconvexConstants& c, double gamma) {
    if (!(gamma > 0.0)) throw DomainError("non-convex step bound needs gamma > 0");
    if (!(c.b > 1.0) || !(c.D_f > 0.0) || !(c.D_K > 0.0)) throw DomainError("invalid non-convex constants");
    return std::pow(gamma / (c.D_f * c.D_K), 1.0 / (c.b - 1.0));
}

RateCertificate rate_certificate(const ConstantsBundle& bundle, double gamma) {
    RateCertificate r;
    r.method = bundle.method;
    r.epsilon_max = step_bound(bundle.method, bundle, gamma);
    r.factor_form = bundle.method == Method::Explicit2 ? "multiply" : "divide";
    const double alpha = bundle.alpha_star.value_or(bundle.alpha(0.0));
    std::tie(r.beta_star, r.lambda_star) = beta_lambda_star(alpha, gamma);
    return r;
}

std::vector<double> w_recursion(Method method, double W0, const ConstantsBundle& b, double gamma, double eps,
                                long n_steps) {
    const double bound = step_bound(method, b, gamma);
    if (!(eps > 0.0 && eps < bound)) {
        throw DomainError("w_recursion: epsilon = " + std::to_string(eps) + " is outside (0, " +
                          std::to_string(bound) + ")");
    }
    if (!(W0 >= 0.0) || n_steps < 0) throw DomainError("w_recursion needs W0 >= 0 and n_steps >= 0");
    const double C = b.C_alpha_gamma;
    const double CfK = *b.C_fK;
    double bracket;
    if (method == Method::Implicit) bracket = 1.0 - gamma - 2.0 * CfK * eps;
    else bracket = 1.0 - gamma - 2.0 * eps * (CfK + 6.0 * *b.D_fK / C);

    std::vector<double> W{W0};
    W.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (long i = 0; i < n_steps; ++i) {
        const double w = W.back();
        const double g = eps * C / 4.0 * bracket * b.alpha(2.0 * w);
        W.push_back(method == Method::Explicit2 ? w * (1.0 - g) : w / (1.0 + g));
    }
    return W;
}

std::vector<double> continuous_envelope(double W0, const AlphaFunction& alpha, double C, double gamma,
                                        const std::vector<double>& t_grid) {
    const double lambda = (1.0 - gamma) * C / 4.0;
    std::vector<double> out;
    out.reserve(t_grid.size());
    if (alpha.is_constant()) {
        for (double t : t_grid) out.push_back(W0 * std::exp(-lambda * alpha(0.0) * t));
        return out;
    }
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || (!t_grid.empty() && t_grid.front() < 0.0)) {
        throw DomainError("continuous_envelope needs a sorted nonnegative time grid");
    }
    OdeOptions o;
    o.rel_tol = 1e-12;
    o.abs_tol = 1e-300;
    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        dy[0] = -lambda * alpha(2.0 * std::max(y[0], 0.0)) * y[0];
    };
    std::size_t next = 0;
    while (next < t_grid.size() && t_grid[next] == 0.0) {
        out.push_back(W0);
        ++next;
    }
    if (next == t_grid.size()) return out;
    const StepObserver obs = [&](const DenseStep& ds) {
        while (next < t_grid.size() && t_grid[next] <= ds.t1) out.push_back(ds.at(t_grid[next++])[0]);
        return true;
    };
    DormandPrince(o).integrate(rhs, 0.0, Vector::Constant(1, W0), t_grid.back(), obs);
    return out;
}

double adaptive_lyapunov_value(double H, double inner, const AlphaFunction& alpha, double C) {
    if (!(H >= 0.0)) throw DomainError("adaptive Lyapunov value needs H >= 0");
    if (H == 0.0) return 0.0;
    const auto map = [&](double v) { return H + 0.5 * C * alpha(2.0 * v) * inner; };
    double lo = 0.5 * H, hi = 1.5 * H;
    // g(v) = v - map(v) is increasing in v since alpha is non-increasing.
    if (lo - map(lo) > 0.0 || hi - map(hi) < 0.0) {
        throw DomainError("adaptive Lyapunov value: no root in [H/2, 3H/2]; the alpha condition fails here");
    }
    double v = std::clamp(map(H), lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double g = v - map(v);
        if (std::abs(g) <= 1e-10 * H) return v;
        if (g < 0.0) lo = v; else hi = v;
        double next = 0.5 * (v + map(v));  // damped fixed-point update
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        v = next;
    }
    return v;
}

double alpha_condition_margin(const AlphaFunction& alpha, double C, const std::vector<double>& grid) {
    double worst = -kInf;
    for (double y : grid) {
        const double h = 1e-6 * std::max(1.0, y);
        const double deriv = (alpha(y + h) - alpha(std::max(0.0, y - h))) / (y + h - std::max(0.0, y - h));
        worst = std::max(worst, -C * deriv * y - alpha(y));
    }
    return worst;
}

}  // namespace hamdesc
