#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hamdesc/analysis.hpp"
#include "hamdesc/continuous.hpp"
#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"

using namespace hamdesc;

namespace {

ObjectiveParams scalars(std::map<std::string, double> m) { return ObjectiveParams{std::move(m), std::nullopt}; }

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Independent oracle: dense scan of lambda over beta, then local refinement.
double numeric_lambda_max(double alpha, double gamma) {
    const double hi = std::min(alpha, gamma);
    double best = -1.0, arg = 0.0;
    const int n = 20000;
    for (int i = 1; i < n; ++i) {
        const double b = hi * i / n;
        const double v = lambda_rate(alpha, b, gamma);
        if (v > best) { best = v; arg = b; }
    }
    double lo = std::max(1e-300, arg - hi / n), up = std::min(hi * (1 - 1e-15), arg + hi / n);
    for (int i = 0; i < 200; ++i) {
        const double m1 = lo + (up - lo) / 3, m2 = up - (up - lo) / 3;
        if (lambda_rate(alpha, m1, gamma) < lambda_rate(alpha, m2, gamma)) lo = m1; else up = m2;
    }
    return std::max(best, lambda_rate(alpha, 0.5 * (lo + up), gamma));
}

GrowthCertificate cert(double b, double B, double mu, double L) {
    GrowthCertificate c;
    c.b = b;
    c.B = B;
    c.mu = mu;
    c.L = L;
    return c;
}

}  // namespace

TEST(LambdaRate, Examples) {
    EXPECT_NEAR(lambda_rate(1.0, 0.25, 0.5), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(lambda_rate(1.0, 1e-9, 0.5), 0.0, 1e-9);
    const double first = (0.5 * 0.5 - 0.5 * 0.2 - 0.2 * 0.5) / (0.5 - 0.2);
    const double second = 0.2 * 0.5 / 0.8;
    EXPECT_DOUBLE_EQ(lambda_rate(0.5, 0.2, 0.5), std::min(first, second));
    EXPECT_NEAR(lambda_rate(0.5, 0.2, 0.5), 0.125, 1e-15);
    EXPECT_THROW(lambda_rate(0.5, 0.6, 0.7), DomainError);
    EXPECT_THROW(lambda_rate(1.5, 0.1, 0.5), DomainError);
}

TEST(LambdaRate, DivergesAtBetaEqualAlpha) {
    EXPECT_EQ(lambda_rate(0.3, 0.3, 0.5), -INFINITY);
    EXPECT_LT(lambda_rate(0.3, 0.3 - 1e-9, 0.5), -1e6);
}

TEST(LambdaRate, SecondBranchBelowHalfAlphaGamma) {
    for (double alpha : {0.1, 0.5, 1.0}) {
        for (double gamma : {0.1, 0.5, 0.9}) {
            for (double f : {0.1, 0.5, 1.0}) {
                const double beta = f * alpha * gamma / 2.0;
                EXPECT_EQ(lambda_rate(alpha, beta, gamma), beta * (1 - gamma) / (1 - beta));
            }
        }
    }
}

TEST(BetaLambdaStar, Examples) {
    auto [b1, l1] = beta_lambda_star(1.0, 0.5);
    EXPECT_DOUBLE_EQ(b1, 0.25);
    EXPECT_NEAR(l1, 1.0 / 6.0, 1e-15);
    auto [b2, l2] = beta_lambda_star(0.5, 0.5);
    EXPECT_NEAR(b2, 0.2113249, 1e-7);
    EXPECT_NEAR(l2, 0.1339746, 1e-7);
    EXPECT_NEAR(l2, numeric_lambda_max(0.5, 0.5), 1e-9);
}

TEST(BetaLambdaStar, LocalMaximumOnGrid) {
    for (double alpha : {0.05, 0.3, 0.7, 0.99, 1.0}) {
        for (double gamma : {0.05, 0.3, 0.6, 0.95}) {
            auto [b, l] = beta_lambda_star(alpha, gamma);
            EXPECT_NEAR(lambda_rate(alpha, b, gamma), l, 1e-12);
            EXPECT_GT(l, 0.0);
            EXPECT_LT(l, gamma);
            for (double d : {-1e-4, 1e-4}) {
                if (b + d > 0 && b + d <= std::min(alpha, gamma)) EXPECT_LE(lambda_rate(alpha, b + d, gamma), l + 1e-15);
            }
        }
    }
}

TEST(Lyapunov, ReducesToHamiltonian) {
    const ObjectiveSpec f = builtin("power1d", scalars({{"b", 2}}));
    const KineticEnergy K = PowerKinetic::power(2);
    EXPECT_DOUBLE_EQ(lyapunov_value({vec({2}), vec({0})}, f, K, 0.3, vec({0}), 0.0), 2.0);
    EXPECT_DOUBLE_EQ(lyapunov_value({vec({2}), vec({1})}, f, K, 0.0, vec({0}), 0.0), 2.5);
    EXPECT_DOUBLE_EQ(lyapunov_value({vec({2}), vec({1})}, f, K, 0.5, vec({0}), 0.0), 3.5);
}

TEST(Lyapunov, SandwichOnSamples) {
    // power1d(4) with matched kinetic satisfies k(p) >= alpha f_c*(+-p) with alpha = 1.
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n;
    const ObjectiveSpec f = builtin("power1d", scalars({{"b", 4}}));
    const KineticEnergy K = PowerKinetic::power(4.0 / 3.0);
    const double alpha = 1.0;
    for (double beta : {0.1, 0.5, 0.9}) {
        for (int k = 0; k < 200; ++k) {
            const State s{vec({2 * n(rng)}), vec({2 * n(rng)})};
            const double H = hamiltonian(K, f, s);
            const double V = lyapunov_value(s, f, K, beta, vec({0}), 0.0);
            EXPECT_GE(V, (alpha - beta) / alpha * H - 1e-12);
            EXPECT_LE(V, (alpha + beta) / alpha * H + 1e-12);
        }
    }
}

TEST(Alpha, KnownPower) {
    EXPECT_EQ(alpha_known_power(1, 2, 2)(0), 1.0);
    EXPECT_EQ(alpha_known_power(0.25, 2, 2)(7), 0.25);
    EXPECT_EQ(alpha_known_power(4, 4.0 / 3.0, 2)(0), 1.0);
    EXPECT_TRUE(alpha_known_power(0.5, 3, 1.5).is_constant());
}

TEST(Alpha, Relativistic) {
    const AlphaFunction a = alpha_relativistic(1, 2);
    EXPECT_EQ(a(0), 1.0);
    EXPECT_DOUBLE_EQ(a(3), 0.25);
    double prev = a(0), prev_slope = -INFINITY;
    for (double y = 0.1; y < 50; y += 0.1) {
        EXPECT_LE(a(y), prev);
        const double slope = (a(y) - prev) / 0.1;
        EXPECT_GE(slope, prev_slope - 1e-12);
        prev = a(y);
        prev_slope = slope;
    }
    const auto grid = log_space(1e-6, 1e6, 200);
    EXPECT_LT(alpha_condition_margin(a, 0.5, grid), 0.0);
    EXPECT_LT(alpha_condition_margin(alpha_relativistic(0.3, 8.0 / 7.0), 0.7, grid), 0.0);
    EXPECT_DOUBLE_EQ(alpha_relativistic(0.3, 8.0 / 7.0)(0.0), std::min({std::pow(0.3, 1.0 / 7.0), 0.3, 1.0}));
}

TEST(ConstantsKnownPower, Examples) {
    const ConstantsBundle c = constants_known_power(cert(2, 2, 1, 1), PowerKinetic::power(2), 0.5);
    EXPECT_EQ(c.alpha(0), 1.0);
    EXPECT_EQ(*c.C_fK, 1.0);
    EXPECT_EQ(*c.C_K, 2.0);
    EXPECT_EQ(c.C_alpha_gamma, 0.5);

    const ConstantsBundle q = constants_known_power(cert(4, 4, 1, 3), PowerKinetic::power(4.0 / 3.0), 0.5);
    EXPECT_DOUBLE_EQ(*q.C_fK, 3.0);
    EXPECT_DOUBLE_EQ(*q.C_K, 4.0 / 3.0);

    GrowthCertificate c2 = cert(2, 2, 1, 1);
    c2.N = 1.0;
    const ConstantsBundle e2 = constants_known_power(c2, PowerKinetic::power(2), 0.5, Method::Explicit2);
    EXPECT_EQ(*e2.D_K, 2.0);
    EXPECT_EQ(*e2.E_k, 1.0);
    EXPECT_EQ(*e2.F_k, 1.0);
    EXPECT_EQ(*e2.D_fK, 4.0);
}

TEST(ConstantsKnownPower, Explicit1Formula) {
    GrowthCertificate c = cert(4, 4, 0.5, 3);
    c.L_f = 3.0;
    c.D_f = 2.0;
    const PowerKinetic K = PowerKinetic::power(4.0 / 3.0);
    const ConstantsBundle b = constants_known_power(c, K, 0.5, Method::Explicit1);
    const double alpha = std::pow(0.5, 1.0 / 3.0);
    // a = A, so C_{a,A} reduces to 1 and the max is over {D_f, 2 (a - 1)}.
    EXPECT_NEAR(*b.D_fK, 3.0 / alpha * std::max(2.0, 2.0 / 3.0), 1e-12);
}

TEST(ConstantsKnownPower, Errors) {
    EXPECT_THROW(constants_known_power(cert(4, 4, 1, 3), PowerKinetic::power(2), 0.5), DomainError);
    EXPECT_THROW(constants_known_power(cert(4, 4, 1, 3), PowerKinetic::power(4.0 / 3.0), 0.5, Method::Explicit1),
                 UnavailableError);
    EXPECT_THROW(constants_known_power(cert(4, 4, 1, 3), PowerKinetic::power(4.0 / 3.0), 0.5, Method::Explicit2),
                 DomainError);
}

TEST(ConstantsRelativistic, Examples) {
    GrowthCertificate c = cert(2, 2, 1, 1);
    c.pairing = Pairing::Relativistic;
    c.L_f = 1.0;
    const ConstantsBundle b = constants_relativistic(c, PowerKinetic::relativistic(), 0.5, Method::Explicit1);
    EXPECT_EQ(*b.C_fK, 1.0);
    EXPECT_EQ(*b.D_fK, 6.0);
    EXPECT_EQ(*b.C_K, 2.0);

    GrowthCertificate c8 = cert(2, 8, 1, 2);
    c8.pairing = Pairing::Relativistic;
    c8.L_f = 1.0;
    const ConstantsBundle b8 = constants_relativistic(c8, PowerKinetic::relativistic(), 0.5, Method::Explicit1);
    EXPECT_EQ(*b8.C_fK, 2.0);
    EXPECT_EQ(*b8.D_fK, 3.0);
    EXPECT_DOUBLE_EQ(b8.alpha.exponent(), 1.0 / 7.0);
    EXPECT_EQ(b8.alpha(0.0), 1.0);

    EXPECT_THROW(constants_relativistic(c8, PowerKinetic::relativistic(), 0.5, Method::Explicit2), UnavailableError);
    c8.L_f.reset();
    EXPECT_THROW(constants_relativistic(c8, PowerKinetic::relativistic(), 0.5, Method::Explicit1), UnavailableError);
}

TEST(Psi, ClosedForms) {
    EXPECT_EQ(psi_eval(1), 0.0);
    EXPECT_DOUBLE_EQ(psi_eval(8), 4.0);
    EXPECT_DOUBLE_EQ(psi_conj(0.75), 2.0);
    // 1 - g^2 cancels for large t, so the grid stays where it is well conditioned.
    for (double t : log_space(1e-4, 1e1, 200)) {
        const double g = phi_grad(2, 1, t);
        EXPECT_NEAR(psi_conj(g * g), 2.0 * phi_eval(2, 1, t), 1e-12 * std::max(1.0, phi_eval(2, 1, t)));
    }
    EXPECT_THROW(psi_conj(1.0), DomainError);
}

TEST(StepBound, Examples) {
    ConstantsBundle b;
    b.C_alpha_gamma = 0.5;
    b.C_fK = 1.0;
    EXPECT_DOUBLE_EQ(step_bound(Method::Implicit, b, 0.5), 0.25);
    b.D_fK = 1.0;
    b.C_K = 2.0;
    EXPECT_NEAR(step_bound(Method::Explicit1, b, 0.5), 0.5 / 26.0, 1e-15);
    EXPECT_NEAR(step_bound(Method::Explicit1, b, 0.5), 0.0192308, 1e-7);
    EXPECT_THROW(step_bound(Method::Explicit2, b, 0.5), UnavailableError);
    EXPECT_THROW(step_bound(Method::GradientDescent, b, 0.5), DomainError);
    EXPECT_DOUBLE_EQ(step_bound_nonconvex({2.0, 2.0, 1.0}, 0.5), 0.25);
    EXPECT_NEAR(step_bound_nonconvex({3.0, 2.0, 1.0}, 0.5), 0.5, 1e-15);
}

TEST(StepBound, Explicit2FourTermMinimum) {
    GrowthCertificate c = cert(2, 2, 1, 1);
    c.N = 1.0;
    const ConstantsBundle b = constants_known_power(c, PowerKinetic::power(2), 0.5, Method::Explicit2);
    const double expected = std::min({0.5 / (2 * (1 + 6 * 4 / 0.5)), 0.5 / (8 * 2 * 2),
                                      0.5 / (6 * (5 + 2 * 0.5 * 2) + 12 * 0.5 * 0.5), std::sqrt(1 / (6 * 0.25 * 2))});
    EXPECT_DOUBLE_EQ(step_bound(Method::Explicit2, b, 0.5), expected);
}

TEST(RateCertificate, Fields) {
    const ConstantsBundle b = constants_known_power(cert(2, 2, 1, 1), PowerKinetic::power(2), 0.5);
    const RateCertificate r = rate_certificate(b, 0.5);
    EXPECT_EQ(r.factor_form, "divide");
    EXPECT_DOUBLE_EQ(r.epsilon_max, 0.25);
    EXPECT_DOUBLE_EQ(r.beta_star, 0.25);
    EXPECT_GT(r.lambda_star, 0.0);
    EXPECT_LT(r.lambda_star, 0.5);
}

TEST(WRecursion, Examples) {
    ConstantsBundle b;
    b.alpha = AlphaFunction::constant(1.0);
    b.C_alpha_gamma = 0.5;
    b.C_fK = 1.0;
    const auto W = w_recursion(Method::Implicit, 1.0, b, 0.5, 0.1, 5);
    EXPECT_NEAR(W[1], 1.0 / 1.00375, 1e-15);
    EXPECT_NEAR(W[1], 0.9962640, 1e-7);
    for (int i = 0; i <= 5; ++i) EXPECT_NEAR(W[i], std::pow(1.0 / 1.00375, i), 1e-14);
    EXPECT_THROW(w_recursion(Method::Implicit, 1.0, b, 0.5, 0.25, 5), DomainError);
}

TEST(WRecursion, EnvelopeHoldsForImplicitOnPower) {
    const ObjectiveSpec f = builtin("power1d", scalars({{"b", 4}}));
    const PowerKinetic K = matched_kinetic(*f.certificate);
    const double gamma = 0.5;
    const ConstantsBundle b = constants_known_power(*f.certificate, K, gamma, Method::Implicit);
    const double eps = 0.9 * step_bound(Method::Implicit, b, gamma);
    IntegratorConfig cfg;
    cfg.method = Method::Implicit;
    cfg.epsilon = eps;
    cfg.gamma = gamma;
    StopCriteria stop;
    stop.max_iters = 500;
    const RunResult r = run(cfg, K, f, vec({1.5}), std::nullopt, stop);
    const auto W = w_recursion(Method::Implicit, r.records[0].H, b, gamma, eps, 500);
    for (const auto& rec : r.records) EXPECT_LE(rec.subopt, 2.0 * W[rec.iter] * (1 + 1e-12));
}

TEST(ContinuousEnvelope, ConstantAlphaIsExponential) {
    const std::vector<double> t = {0.0, 1.0, 5.0, 20.0};
    const auto W = continuous_envelope(2.0, AlphaFunction::constant(1.0), 0.5, 0.5, t);
    for (size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(W[i], 2.0 * std::exp(-0.0625 * t[i]), 1e-15);
}

TEST(ContinuousEnvelope, RelativisticDominatesAlphaStar) {
    const AlphaFunction a = alpha_relativistic(1.0, 8.0 / 7.0);
    const double W0 = 5.0, gamma = 0.5, lam = (1 - gamma) * gamma / 4;
    std::vector<double> t;
    for (double s = 0; s <= 200; s += 2) t.push_back(s);
    const auto W = continuous_envelope(W0, a, gamma, gamma, t);
    const double astar = a(2.0 * W0);
    for (size_t i = 1; i < t.size(); ++i) {
        EXPECT_LT(W[i], W[i - 1]);
        EXPECT_LE(W[i], W0 * std::exp(-lam * astar * t[i]) * (1 + 1e-9));
    }
}

TEST(ContinuousEnvelope, BoundsSimulatedSuboptimality) {
    const ObjectiveSpec f = builtin("power1d", scalars({{"b", 2}}));
    const double gamma = 0.5;
    const ConstantsBundle b = constants_known_power(*f.certificate, PowerKinetic::power(2), gamma);
    OdeConfig cfg;
    cfg.t_end = 40.0;
    cfg.sample_dt = 0.5;
    const auto tr = simulate(PowerKinetic::power(2), f, gamma, {vec({1}), vec({0})}, cfg);
    const auto W = continuous_envelope(tr.H[0], b.alpha, b.C_alpha_gamma, gamma, tr.t);
    for (size_t i = 0; i < tr.t.size(); ++i) EXPECT_LE(tr.subopt[i], 2.0 * W[i] + 1e-9);
}

TEST(AdaptiveLyapunov, FixedPointInBracket) {
    const AlphaFunction a = alpha_relativistic(1.0, 2.0);
    for (double H : {1e-6, 0.5, 3.0, 100.0}) {
        for (double inner : {-H, -0.3 * H, 0.0, 0.7 * H, 1.5 * H}) {
            const double v = adaptive_lyapunov_value(H, inner, a, 0.5);
            EXPECT_GE(v, H / 2);
            EXPECT_LE(v, 1.5 * H);
            EXPECT_NEAR(v, H + 0.25 * a(2 * v) * inner, 1e-10 * H);
        }
    }
    EXPECT_EQ(adaptive_lyapunov_value(0.0, 0.0, a, 0.5), 0.0);
}

TEST(NonconvexConstants, Analytic) {
    GrowthCertificate c = cert(2, 2, 1, 1);
    c.sigma_power = 2.0;
    c.D_f_smooth = 1.5;
    const NonconvexConstants n = nonconvex_constants(c, PowerKinetic::power(2));
    EXPECT_DOUBLE_EQ(n.D_K, 1.0);
    EXPECT_DOUBLE_EQ(step_bound_nonconvex(n, 0.5), 0.5 / 1.5);
    const NonconvexConstants r = nonconvex_constants(c, PowerKinetic::relativistic());
    // sup_t phi'(t)^2 / (2 phi(t)) for the relativistic profile, attained as t -> 0.
    EXPECT_NEAR(r.D_K, 1.0, 1e-5);
}
