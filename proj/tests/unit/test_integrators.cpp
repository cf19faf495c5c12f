#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hamdesc/analysis.hpp"
#include "hamdesc/errors.hpp"
#include "hamdesc/integrators.hpp"

using namespace hamdesc;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ObjectiveParams scalars(std::map<std::string, double> m) { return ObjectiveParams{std::move(m), std::nullopt}; }

IntegratorConfig config(Method m, double eps, double gamma = 0.5) {
    IntegratorConfig c;
    c.method = m;
    c.epsilon = eps;
    c.gamma = gamma;
    return c;
}

const ObjectiveSpec& half_square() {
    static const ObjectiveSpec f = builtin("power1d", scalars({{"b", 2}}));
    return f;
}

}  // namespace

TEST(MethodNames, RoundTrip) {
    for (Method m : {Method::Implicit, Method::Explicit1, Method::Explicit2, Method::ClassicalMomentum,
                     Method::GradientDescent}) {
        EXPECT_EQ(method_from_string(to_string(m)), m);
    }
    EXPECT_THROW(method_from_string("leapfrog"), DomainError);
}

TEST(Config, Validation) {
    EXPECT_THROW(config(Method::Explicit1, 0.0).validate(), DomainError);
    EXPECT_THROW(config(Method::Explicit1, 0.1, 1.0).validate(), DomainError);
    EXPECT_NO_THROW(config(Method::GradientDescent, 0.1, 0.0).validate());
    EXPECT_DOUBLE_EQ(config(Method::Explicit1, 0.1).delta(), 1.0 / 1.05);
}

TEST(Explicit1, QuadraticExample) {
    const State s = step_explicit1({vec({1}), vec({0})}, config(Method::Explicit1, 0.1), PowerKinetic::power(2),
                                   half_square());
    EXPECT_NEAR(s.p[0], -0.1 / 1.05, 1e-15);
    EXPECT_NEAR(s.x[0], 1.0 - 0.01 / 1.05, 1e-15);
}

TEST(Explicit1, FixedPointAtMinimizer) {
    const ObjectiveSpec f = builtin("quartic2d");
    const State s = step_explicit1({Vector::Zero(2), Vector::Zero(2)}, config(Method::Explicit1, 0.1),
                                   PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {4.0 / 3.0}}, f);
    EXPECT_EQ(s.x, Vector::Zero(2));
    EXPECT_EQ(s.p, Vector::Zero(2));
}

TEST(Explicit1, QuarticHandComputation) {
    // k(p) = (3/4) sum |p_n|^{4/3} is phi_{4/3}^{4/3} of the l_{4/3} norm.
    const double eps = 0.01, gamma = 0.5, delta = 1.0 / (1.0 + gamma * eps);
    const State s = step_explicit1({vec({1, 1}), vec({0, 0})}, config(Method::Explicit1, eps, gamma),
                                   PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {4.0 / 3.0}}, builtin("quartic2d"));
    const double pn = -eps * delta * 32.0;
    EXPECT_NEAR(s.p[0], pn, 1e-14);
    EXPECT_NEAR(s.p[1], pn, 1e-14);
    // d/dp (3/4)|p|^{4/3} = |p|^{1/3} sgn(p)
    const double xn = 1.0 - eps * std::cbrt(-pn);
    EXPECT_NEAR(s.x[0], xn, 1e-13);
    EXPECT_NEAR(s.x[1], xn, 1e-13);
}

TEST(Explicit2, Examples) {
    const State s = step_explicit2({vec({1}), vec({0})}, config(Method::Explicit2, 0.1), PowerKinetic::power(2),
                                   half_square());
    EXPECT_DOUBLE_EQ(s.x[0], 1.0);
    EXPECT_NEAR(s.p[0], -0.1, 1e-15);
    const State z = step_explicit2({vec({0}), vec({0})}, config(Method::Explicit2, 0.1), PowerKinetic::power(2),
                                   half_square());
    EXPECT_EQ(z.x[0], 0.0);
    EXPECT_EQ(z.p[0], 0.0);
}

TEST(Explicit2, SharpHandComputation) {
    // f = phi_{8/7}^2, k = phi_8^2; from (1, 0): x+ = 1, p+ = -eps phi'_{8/7,2}(1).
    const ObjectiveSpec f = builtin("phiPower", scalars({{"b", 8.0 / 7.0}, {"B", 2}}));
    const double eps = 0.05;
    const State s1 = step_explicit2({vec({1}), vec({0})}, config(Method::Explicit2, eps), PowerKinetic{8, 2, {2}}, f);
    const double fp = std::pow(2.0, 2.0 / (8.0 / 7.0) - 1.0);  // ((t^b+1)^{B/b-1} t^{b-1}) at t=1
    EXPECT_DOUBLE_EQ(s1.x[0], 1.0);
    EXPECT_NEAR(s1.p[0], -eps * fp, 1e-15);
    // Second step uses k'(p) = (p^8+1)^{2/8-1} p^7 sgn(p).
    const State s2 = step_explicit2(s1, config(Method::Explicit2, eps), PowerKinetic{8, 2, {2}}, f);
    const double p = s1.p[0];
    const double kp = -std::pow(std::pow(-p, 8) + 1.0, 0.25 - 1.0) * std::pow(-p, 7);
    EXPECT_NEAR(s2.x[0], 1.0 + eps * kp, 1e-15);
}

TEST(Explicit2, WarnsOutsideTheory) {
    int warnings = 0;
    step_explicit2({vec({1}), vec({0})}, config(Method::Explicit2, 2.5), PowerKinetic::power(2), half_square(),
                   [&](const std::string&) { ++warnings; });
    EXPECT_EQ(warnings, 1);
}

TEST(Implicit, QuadraticExactSolve) {
    const double eps = 0.1, gamma = 0.5, delta = 1.0 / (1.0 + gamma * eps);
    const State s = step_implicit({vec({1}), vec({0})}, config(Method::Implicit, eps, gamma), PowerKinetic::power(2),
                                  half_square());
    // p+ (1 + delta eps^2) = delta (p - eps x), x+ = x + eps p+.
    const double pn = delta * (0.0 - eps * 1.0) / (1.0 + delta * eps * eps);
    EXPECT_NEAR(s.p[0], pn, 1e-12);
    EXPECT_NEAR(s.p[0], -0.0943396, 1e-7);
    EXPECT_NEAR(s.x[0], 1.0 + eps * pn, 1e-12);
    EXPECT_NEAR(s.x[0], 0.99056604, 1e-8);
}

TEST(Implicit, FixedPointAtMinimizer) {
    const State s = step_implicit({Vector::Zero(2), Vector::Zero(2)}, config(Method::Implicit, 0.1),
                                  PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {2.0}}, builtin("quartic2d"));
    EXPECT_LE(s.x.norm(), 1e-14);
    EXPECT_LE(s.p.norm(), 1e-14);
}

TEST(Implicit, StationarityOnRandomConvexInstances) {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> n;
    const std::vector<std::pair<ObjectiveSpec, PowerKinetic>> cases = {
        {builtin("quartic2d"), PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {2.0}}},
        {builtin("power1d", scalars({{"b", 4}})), PowerKinetic::power(4.0 / 3.0)},
        {builtin("phiPower", scalars({{"b", 2}, {"B", 8}, {"d", 3}})), PowerKinetic::relativistic()},
        {builtin("normFour", scalars({{"d", 3}})), PowerKinetic{2, 2, {4.0 / 3.0}}},
        {builtin("phiPower", scalars({{"b", 8.0 / 7.0}, {"B", 2}, {"d", 2}})), PowerKinetic{8, 2, {2.0}}},
    };
    for (const auto& [f, K] : cases) {
        for (int k = 0; k < 10; ++k) {
            State s{Vector(f.dim), Vector(f.dim)};
            for (int i = 0; i < f.dim; ++i) { s.x[i] = n(rng); s.p[i] = 0.3 * n(rng); }
            if (K.is_relativistic()) s.p *= 0.5 / std::max(1.0, s.p.norm());
            const IntegratorConfig cfg = config(Method::Implicit, 0.05);
            const State t = step_implicit(s, cfg, K, f);
            const double delta = cfg.delta();
            EXPECT_LE((t.x - s.x - cfg.epsilon * kinetic_grad(K, t.p)).norm(), 1e-8) << f.name;
            EXPECT_LE((t.p - delta * s.p + cfg.epsilon * delta * f.grad(t.x)).norm(), 1e-12) << f.name;
        }
    }
}

TEST(Implicit, RelativisticFarFromMinimizer) {
    // The velocity saturates near |v| = 1, where the position-space
    // subproblem is too ill conditioned to reach the tolerance.
    const ObjectiveSpec f = builtin("phiPower", scalars({{"b", 2}, {"B", 8}, {"d", 1}}));
    const PowerKinetic K = PowerKinetic::relativistic();
    const IntegratorConfig cfg = config(Method::Implicit, 0.0588);
    State s{vec({5}), vec({0})};
    for (int k = 0; k < 20; ++k) {
        const State t = step_implicit(s, cfg, K, f);
        EXPECT_LE((t.p - cfg.delta() * s.p + cfg.epsilon * cfg.delta() * f.grad(t.x)).norm(), 1e-10);
        EXPECT_LE(hamiltonian(K, f, t), hamiltonian(K, f, s) * (1 + 1e-12));
        s = t;
    }
    EXPECT_LT(s.x[0], 5.0);
}

TEST(ClassicalMomentum, MatchesExplicit1WithQuadraticKinetic) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    const ObjectiveSpec f = builtin("quartic2d");
    for (int k = 0; k < 20; ++k) {
        const State s{vec({n(rng), n(rng)}), vec({n(rng), n(rng)})};
        const State a = step_classical_momentum(s, config(Method::ClassicalMomentum, 0.01), f);
        const State b = step_explicit1(s, config(Method::Explicit1, 0.01), PowerKinetic::power(2), f);
        EXPECT_LE((a.x - b.x).norm(), 1e-14);
        EXPECT_LE((a.p - b.p).norm(), 1e-14);
    }
    const State a = step_classical_momentum({vec({1, 1}), Vector::Zero(2)}, config(Method::ClassicalMomentum, 0.01), f);
    EXPECT_LT(a.p.dot(f.grad(vec({1, 1}))), 0.0);
}

TEST(GradientDescent, Examples) {
    const IntegratorConfig cfg = config(Method::GradientDescent, 0.1);
    const State s = step_gradient_descent({vec({1}), vec({5})}, cfg, half_square());
    EXPECT_DOUBLE_EQ(s.x[0], 0.9);
    const State t = step_gradient_descent(s, cfg, half_square());
    EXPECT_DOUBLE_EQ(t.x[0], 0.81);
    EXPECT_EQ(step_gradient_descent({vec({0}), vec({0})}, cfg, half_square()).x[0], 0.0);
}

TEST(Run, ZeroIterationsReturnsInitialRecord) {
    StopCriteria stop;
    stop.max_iters = 0;
    const RunResult r = run(config(Method::Implicit, 0.1), PowerKinetic::power(2), half_square(), vec({1}),
                            std::nullopt, stop);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].iter, 0);
    EXPECT_DOUBLE_EQ(r.records[0].H, 0.5);
    EXPECT_EQ(r.iterations, 0);
}

TEST(Run, ImplicitStrictlyDecreasesEnergy) {
    StopCriteria stop;
    stop.max_iters = 200;
    const RunResult r = run(config(Method::Implicit, 0.2), PowerKinetic::power(2), half_square(), vec({1}),
                            std::nullopt, stop);
    ASSERT_EQ(r.records.size(), 201u);
    for (size_t i = 1; i < r.records.size(); ++i) EXPECT_LT(r.records[i].H, r.records[i - 1].H);
    EXPECT_TRUE(r.h_monotone);
}

TEST(Run, Explicit1NonconvexDescent) {
    const ObjectiveSpec f = builtin("nonconvex1d");
    const PowerKinetic K = PowerKinetic::power(2);
    const double gamma = 0.5;
    const double eps = step_bound_nonconvex(nonconvex_constants(*f.certificate, K), gamma);
    StopCriteria stop;
    stop.max_iters = 100000;
    stop.grad_tol = 1e-7;
    const RunResult r = run(config(Method::Explicit1, eps, gamma), K, f, vec({3}), std::nullopt, stop);
    EXPECT_TRUE(r.h_monotone);
    EXPECT_EQ(r.stop_reason, "grad_tol");
    EXPECT_LE(std::abs(f.grad(r.final.x)[0]), 1e-6);
}

TEST(Run, StridedRecordsAndLyapunov) {
    StopCriteria stop;
    stop.max_iters = 10;
    RunOptions opts;
    opts.record_stride = 5;
    opts.beta = 0.1;
    const RunResult r = run(config(Method::Explicit1, 0.1), PowerKinetic::power(2), half_square(), vec({1}),
                            std::nullopt, stop, opts);
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.records[1].iter, 5);
    ASSERT_TRUE(r.records[0].V.has_value());
    EXPECT_DOUBLE_EQ(*r.records[0].V, r.records[0].H);
}

TEST(Run, SubsolverFailurePropagates) {
    IntegratorConfig cfg = config(Method::Implicit, 0.1);
    cfg.subsolver_max_iters = 1;
    cfg.subsolver_tol = 1e-300;
    StopCriteria stop;
    stop.max_iters = 3;
    EXPECT_THROW(run(cfg, PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {2.0}}, builtin("quartic2d"), vec({1, 1}), std::nullopt,
                     stop),
                 SubsolverError);
}

TEST(Run, Deterministic) {
    StopCriteria stop;
    stop.max_iters = 300;
    const auto K = PowerKinetic{4.0 / 3.0, 4.0 / 3.0, {2.0}};
    const RunResult a = run(config(Method::Implicit, 0.02), K, builtin("quartic2d"), vec({1, 1}), std::nullopt, stop);
    const RunResult b = run(config(Method::Implicit, 0.02), K, builtin("quartic2d"), vec({1, 1}), std::nullopt, stop);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].x, b.records[i].x);
        EXPECT_EQ(a.records[i].p, b.records[i].p);
    }
}

TEST(Run, ImplicitQuadraticPreconditioningInvariance) {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> n;
    const int d = 4;
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = n(rng);
    const Matrix A = G * G.transpose() + 0.5 * Matrix::Identity(d, d);
    const ObjectiveSpec fA = builtin("quadratic", ObjectiveParams{{}, A});
    const ObjectiveSpec fI = builtin("quadratic", ObjectiveParams{{}, Matrix::Identity(d, d)});
    const Vector x0 = Vector::Ones(d);
    StopCriteria stop;
    stop.max_iters = 50;
    const IntegratorConfig cfg = config(Method::Implicit, 0.1);
    const RunResult ra = run(cfg, QuadraticKinetic(A), fA, x0, std::nullopt, stop);
    const RunResult ri = run(cfg, PowerKinetic::power(2), fI, x0, std::nullopt, stop);
    const Eigen::LLT<Matrix> llt(A);
    for (size_t i = 0; i < ra.records.size(); ++i) {
        EXPECT_LE((ra.records[i].x - ri.records[i].x).norm(), 1e-9);
        EXPECT_LE((llt.solve(ra.records[i].p) - ri.records[i].p).norm(), 1e-9);
    }
}
