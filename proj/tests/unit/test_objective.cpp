#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"
#include "hamdesc/objective.hpp"

using namespace hamdesc;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ObjectiveParams scalars(std::map<std::string, double> m) { return ObjectiveParams{std::move(m), std::nullopt}; }

std::vector<ObjectiveSpec> catalogue() {
    Matrix A(3, 3);
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 1;
    return {builtin("quartic2d"),
            builtin("power1d", scalars({{"b", 4}})),
            builtin("power1d", scalars({{"b", 2}})),
            builtin("phiPower", scalars({{"b", 8.0 / 7.0}, {"B", 2}, {"d", 3}})),
            builtin("phiPower", scalars({{"b", 2}, {"B", 8}, {"d", 2}, {"relativistic", 1}})),
            builtin("normFour", scalars({{"d", 4}})),
            builtin("quadratic", ObjectiveParams{{}, A}),
            builtin("nonconvex1d")};
}

}  // namespace

TEST(Suboptimality, Examples) {
    EXPECT_EQ(suboptimality(builtin("quartic2d"), Vector::Zero(2)), 0.0);
    EXPECT_DOUBLE_EQ(suboptimality(builtin("power1d", scalars({{"b", 4}})), vec({1})), 0.25);
    EXPECT_NEAR(suboptimality(builtin("normFour"), vec({1, 1})), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Suboptimality, UnavailableWithoutOptimalValue) {
    ObjectiveSpec f = builtin("quartic2d");
    f.f_star.reset();
    EXPECT_THROW(suboptimality(f, vec({1, 1})), UnavailableError);
}

TEST(Builtin, Examples) {
    EXPECT_DOUBLE_EQ(builtin("quartic2d").eval(vec({1, 1})), 16.0);
    EXPECT_DOUBLE_EQ(builtin("power1d", scalars({{"b", 4}})).grad(vec({2}))[0], 8.0);
    Matrix A = Vector(vec({1, 4})).asDiagonal();
    EXPECT_DOUBLE_EQ(builtin("quadratic", ObjectiveParams{{}, A}).eval(vec({1, 1})), 2.5);
    EXPECT_THROW(builtin("rosenbrock"), DomainError);
    EXPECT_EQ(builtin_names().size(), 6u);
}

TEST(Builtin, GradientVanishesAtMinimizer) {
    for (const auto& f : catalogue()) {
        ASSERT_TRUE(f.x_star.has_value()) << f.name;
        EXPECT_LE(f.grad(*f.x_star).norm(), 1e-10) << f.name;
        EXPECT_NEAR(f.eval(*f.x_star), *f.f_star, 1e-14) << f.name;
    }
}

TEST(Builtin, GradientAndHvpMatchFiniteDifferences) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    for (const auto& f : catalogue()) {
        for (int k = 0; k < 10; ++k) {
            Vector x(f.dim), v(f.dim);
            for (int i = 0; i < f.dim; ++i) { x[i] = n(rng); v[i] = n(rng); }
            const Vector g = f.grad(x);
            const Vector Hv = f.hvp(x, v);
            for (int i = 0; i < f.dim; ++i) {
                Vector e = Vector::Zero(f.dim);
                const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
                e[i] = h;
                const double fd = (f.eval(x + e) - f.eval(x - e)) / (2 * h);
                EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << f.name;
            }
            const double h = 1e-6;
            const Vector fd = (f.grad(x + h * v) - f.grad(x - h * v)) / (2 * h);
            EXPECT_LE((Hv - fd).norm(), 1e-6 * std::max(1.0, fd.norm())) << f.name;
        }
    }
}

TEST(Builtin, ConvexBuiltinsHavePsdHessians) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n;
    for (const auto& f : catalogue()) {
        if (!f.convex) continue;
        for (int k = 0; k < 50; ++k) {
            Vector x(f.dim), v(f.dim);
            for (int i = 0; i < f.dim; ++i) { x[i] = 2 * n(rng); v[i] = n(rng); }
            EXPECT_GE(v.dot(f.hvp(x, v)), -1e-10) << f.name;
        }
    }
}

TEST(Builtin, NonconvexIsGenuinelyNonconvexAndSmooth) {
    const ObjectiveSpec f = builtin("nonconvex1d");
    EXPECT_FALSE(f.convex);
    EXPECT_LT(f.hvp(vec({M_PI / 2}), vec({1}))[0], 0.0);
    for (double x = -20; x <= 20; x += 0.01) EXPECT_LE(std::abs(f.hvp(vec({x}), vec({1}))[0]), 1.5);
    EXPECT_GT((*f.x_star)[0], -2.0);
    EXPECT_LT((*f.x_star)[0], -1.0);
    for (double x = -20; x <= 20; x += 0.01) EXPECT_GE(suboptimality(f, vec({x})), -1e-12);
}

TEST(Builtin, PowerConjugateMatchesKineticPower) {
    // Centered conjugate of |x|^b / b is |s|^{b'} / b'; oracle: dense grid sup.
    for (double b : {4.0, 1.5, 8.0 / 7.0}) {
        const ObjectiveSpec f = builtin("power1d", scalars({{"b", b}}));
        const double bp = b / (b - 1);
        for (double s : {0.3, 1.0, 1.7}) {
            const double xmax = 3.0 * std::pow(s, 1.0 / (b - 1)) + 1.0;
            double best = 0.0;
            for (int i = 0; i <= 400000; ++i) {
                const double x = xmax * i / 400000.0;
                best = std::max(best, s * x - f.eval(vec({x})));
            }
            EXPECT_NEAR(best, std::pow(s, bp) / bp, 1e-6);
        }
    }
}

TEST(CertifyGrowth, Examples) {
    const auto radii = log_space(1e-3, 1e3, 25);
    const ObjectiveSpec p4 = builtin("power1d", scalars({{"b", 4}}));
    EXPECT_DOUBLE_EQ(p4.certificate->L, 3.0);
    EXPECT_TRUE(certify_growth(p4, 200, radii).pass);
    EXPECT_TRUE(certify_growth(builtin("phiPower", scalars({{"b", 2}, {"B", 8}})), 200, radii).pass);

    GrowthCertificate wrong = *builtin("quartic2d").certificate;
    wrong.mu = 100.0;
    const auto rep = certify_growth(builtin("quartic2d"), wrong, 200, radii);
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.max_lower_violation, 0.0);
}

TEST(CertifyGrowth, AllBuiltinCertificatesPass) {
    const auto radii = log_space(1e-3, 1e3, 25);
    for (const auto& f : catalogue()) {
        const auto rep = certify_growth(f, 300, radii);
        EXPECT_TRUE(rep.pass) << f.name << " lower " << rep.max_lower_violation << " upper "
                              << rep.max_upper_violation;
    }
}

TEST(CertifyGrowth, RequiresCertificate) {
    ObjectiveSpec f = builtin("quartic2d");
    f.certificate.reset();
    EXPECT_THROW(certify_growth(f, 10, {1.0}), UnavailableError);
}

TEST(Smoothness, QuarticAtStart) {
    // Hessian at (1,1): 12 (s^2 u u^T + d^2 w w^T) with s = 2, d = 0, u = (1,1).
    EXPECT_NEAR(local_smoothness(builtin("quartic2d"), vec({1, 1})), 96.0, 1e-10);
    const Matrix H = dense_hessian(builtin("normFour"), vec({1, 1}));
    EXPECT_NEAR(H.selfadjointView<Eigen::Upper>().eigenvalues().maxCoeff(), 3.0 / std::sqrt(2.0), 1e-10);
}

TEST(MatchedKinetic, ConjugateExponents) {
    const PowerKinetic K = matched_kinetic(*builtin("power1d", scalars({{"b", 4}})).certificate);
    EXPECT_NEAR(K.a, 4.0 / 3.0, 1e-15);
    EXPECT_NEAR(K.A, 4.0 / 3.0, 1e-15);
}
