#include "hamdesc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"

namespace hamdesc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Numeric certificates get this relative safety margin so that sampling at
// 1e-9 relative tolerance never trips on the grid maximizer's residual.
constexpr double kMargin = 1e-6;

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_dim(const Vector& x, int dim, const char* name) {
    if (x.size() != dim) {
        throw DomainError(std::string(name) + ": expected dimension " + std::to_string(dim) +
                          ", got " + std::to_string(x.size()));
    }
}

// Gradient-side kinetic profile for a certificate.
double kinetic_profile(const GrowthCertificate& c, double t) {
    if (c.pairing == Pairing::Relativistic) return phi_eval(2.0, 1.0, t);
    return phi_eval(c.b / (c.b - 1.0), c.B / (c.B - 1.0), t);
}

// ---------------------------------------------------------------- quartic2d

ObjectiveSpec make_quartic2d() {
    ObjectiveSpec f;
    f.name = "quartic2d";
    f.dim = 2;
    f.eval = [](const Vector& x) {
        check_dim(x, 2, "quartic2d");
        const double u = x[0] + x[1], w = 0.5 * (x[0] - x[1]);
        return std::pow(u, 4) + std::pow(w, 4);
    };
    f.grad = [](const Vector& x) {
        check_dim(x, 2, "quartic2d");
        const double u = x[0] + x[1], w = 0.5 * (x[0] - x[1]);
        Vector g(2);
        g << 4.0 * u * u * u + 2.0 * w * w * w, 4.0 * u * u * u - 2.0 * w * w * w;
        return g;
    };
    f.hvp = [](const Vector& x, const Vector& v) {
        check_dim(x, 2, "quartic2d");
        const double u = x[0] + x[1], w = 0.5 * (x[0] - x[1]);
        const double su = 12.0 * u * u * (v[0] + v[1]);
        const double sw = 12.0 * w * w * 0.5 * (v[0] - v[1]);
        Vector r(2);
        r << su + 0.5 * sw, su - 0.5 * sw;
        return r;
    };
    f.x_star = Vector::Zero(2);
    f.f_star = 0.0;

    // Degree-4 homogeneity reduces both certificate ratios to functions of
    // the direction on the l4 unit circle, so an angular search is exact up
    // to the search resolution.
    const double pi = std::numbers::pi;
    auto dir = [](double t) {
        Vector d(2);
        d << std::cos(t), std::sin(t);
        return Vector(d / lq_norm(d, 4.0));
    };
    auto lower_ratio = [&](double t) { return f.eval(dir(t)) / 0.25; };  // f / phi_4^4(1)
    auto upper_ratio = [&](double t) {
        const Vector d = dir(t);
        return phi_eval(4.0 / 3.0, 4.0 / 3.0, lq_norm(f.grad(d), 4.0 / 3.0)) / f.eval(d);
    };
    auto angular_sup = [&](const std::function<double(double)>& h) {
        const int n = 4096;
        int best = 0;
        double bv = -kInf;
        for (int i = 0; i < n; ++i) {
            const double v = h(pi * i / n);
            if (v > bv) { bv = v; best = i; }
        }
        double refined = bv;
        golden_max(h, pi * (best - 1) / n, pi * (best + 1) / n, 1e-15, &refined);
        return std::max(bv, refined);
    };
    GrowthCertificate c;
    c.b = c.B = 4.0;
    c.norm = NormDescriptor{4.0 / 3.0};
    c.mu = -angular_sup([&](double t) { return -lower_ratio(t); }) * (1.0 - kMargin);
    c.L = angular_sup(upper_ratio) * (1.0 + kMargin);

    // (phi_2^2)^*(t) = t^2/2 and the l4 Hessian eigenvalue is degree-2
    // homogeneous, so with L_f = 1 the ratio is again angular.
    auto hess_l4 = [&](const Vector& x) {
        const int n = 720;
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vector v = dir(pi * i / n);
            best = std::max(best, v.dot(f.hvp(x, v)));
        }
        return best;
    };
    double d_sup = 0.0;
    for (int i = 0; i < 720; ++i) {
        const Vector x = dir(pi * i / 720);
        const double lam = hess_l4(x);
        d_sup = std::max(d_sup, 0.5 * lam * lam / f.eval(x));
    }
    c.L_f = 1.0;
    c.D_f = d_sup * 1.01;  // coarse nested search, wider margin
    f.certificate = c;
    return f;
}

// ---------------------------------------------------------------- power1d

ObjectiveSpec make_power1d(double b) {
    if (!(b > 1.0)) throw DomainError("power1d needs b > 1");
    ObjectiveSpec f;
    f.name = "power1d";
    f.dim = 1;
    f.eval = [b](const Vector& x) {
        check_dim(x, 1, "power1d");
        return std::pow(std::abs(x[0]), b) / b;
    };
    f.grad = [b](const Vector& x) {
        check_dim(x, 1, "power1d");
        Vector g(1);
        g[0] = sgn(x[0]) * std::pow(std::abs(x[0]), b - 1.0);
        return g;
    };
    f.hvp = [b](const Vector& x, const Vector& v) {
        check_dim(x, 1, "power1d");
        const double r = std::abs(x[0]);
        double h;
        if (r == 0.0) h = b > 2.0 ? 0.0 : (b == 2.0 ? 1.0 : kInf);
        else h = (b - 1.0) * std::pow(r, b - 2.0);
        return Vector(h * v);
    };
    f.x_star = Vector::Zero(1);
    f.f_star = 0.0;
    GrowthCertificate c;
    c.b = c.B = b;
    c.mu = 1.0;
    c.L = b - 1.0;
    c.N = 1.0;
    if (b >= 2.0) {
        c.L_f = b - 1.0;
        c.D_f = b > 2.0 ? b - 2.0 : 1.0;
    }
    f.certificate = c;
    return f;
}

// ---------------------------------------------------------------- phiPower

ObjectiveSpec make_phi_power(double b, double B, int d, bool relativistic) {
    if (!(b > 1.0) || !(B > 1.0)) throw DomainError("phiPower needs b, B > 1");
    if (d < 1) throw DomainError("phiPower needs d >= 1");
    ObjectiveSpec f;
    f.name = "phiPower";
    f.dim = d;
    f.eval = [b, B, d](const Vector& x) {
        check_dim(x, d, "phiPower");
        return phi_eval(b, B, x.stableNorm());
    };
    f.grad = [b, B, d](const Vector& x) {
        check_dim(x, d, "phiPower");
        const double r = x.stableNorm();
        if (r == 0.0) return Vector(Vector::Zero(d));
        return Vector(phi_grad(b, B, r) / r * x);
    };
    f.hvp = [b, B, d](const Vector& x, const Vector& v) {
        check_dim(x, d, "phiPower");
        const double r = x.stableNorm();
        if (r == 0.0) return Vector(phi_hess(b, B, 0.0) * v);
        const Vector u = x / r;
        const double uv = u.dot(v);
        return Vector(phi_hess(b, B, r) * uv * u + phi_grad(b, B, r) / r * (v - uv * u));
    };
    f.x_star = Vector::Zero(d);
    f.f_star = 0.0;

    // Radial objective: the largest Euclidean Hessian eigenvalue at radius r.
    auto lam = [b, B](double r) { return std::max(phi_hess(b, B, r), phi_grad(b, B, r) / r); };
    const double rlo = 1e-8, rhi = 1e8;

    GrowthCertificate c;
    c.b = b;
    c.B = B;
    c.mu = 1.0;
    c.norm = NormDescriptor{2.0};
    if (relativistic) {
        if (b != 2.0 || B < 2.0) throw DomainError("relativistic phiPower needs b = 2 and B >= 2");
        c.pairing = Pairing::Relativistic;
        c.L = sup_log_grid([&](double r) { return phi_eval(2.0, 1.0, phi_grad(b, B, r)) / phi_eval(b, B, r); },
                           rlo, rhi) * (1.0 + kMargin);
        if (B == 2.0) {
            c.L_f = sup_log_grid(lam, rlo, rhi) * (1.0 + kMargin);
        } else {
            const double e = (B - 1.0) / (B - 2.0);
            auto psi = [](double t) { return t < 1.0 ? 0.0 : t - 3.0 * std::cbrt(t) + 2.0; };
            auto excess = [&](double Lf) {
                return sup_log_grid([&](double r) {
                    return psi(e * phi_eval(1.0, e, lam(r) / Lf)) - 3.0 * phi_eval(b, B, r);
                }, rlo, rhi);
            };
            double lo = 1e-3, hi = 1.0;
            while (excess(hi) > 0.0) hi *= 2.0;
            for (int i = 0; i < 60; ++i) {
                const double mid = std::sqrt(lo * hi);
                if (excess(mid) > 0.0) lo = mid; else hi = mid;
            }
            c.L_f = hi * 1.01;
        }
    } else {
        const double a = b / (b - 1.0), A = B / (B - 1.0);
        c.L = sup_log_grid([&](double r) { return phi_eval(a, A, phi_grad(b, B, r)) / phi_eval(b, B, r); },
                           rlo, rhi) * (1.0 + kMargin);
        if (b <= 2.0 && B <= 2.0) c.N = 1.0;
        if (b >= 2.0 && B >= 2.0) {
            const double Lf = std::max(1.0, phi_hess(b, B, 0.0));
            const double ds = sup_log_grid([&](double r) {
                return phi_conj(b / 2.0, B / 2.0, lam(r) / Lf) / phi_eval(b, B, r);
            }, rlo, rhi);
            c.L_f = Lf;
            c.D_f = std::max(ds * 1.01, 1e-12);
        }
    }
    f.certificate = c;
    return f;
}

// ---------------------------------------------------------------- normFour

ObjectiveSpec make_norm_four(int d) {
    if (d < 1) throw DomainError("normFour needs d >= 1");
    ObjectiveSpec f;
    f.name = "normFour";
    f.dim = d;
    f.eval = [d](const Vector& x) {
        check_dim(x, d, "normFour");
        const double n = lq_norm(x, 4.0);
        return 0.5 * n * n;
    };
    f.grad = [d](const Vector& x) {
        check_dim(x, d, "normFour");
        const double n = lq_norm(x, 4.0);
        if (n == 0.0) return Vector(Vector::Zero(d));
        return Vector(n * lq_norm_grad(x, 4.0));
    };
    f.hvp = [d](const Vector& x, const Vector& v) {
        check_dim(x, d, "normFour");
        const double n = lq_norm(x, 4.0);
        if (n == 0.0) return Vector(Vector::Zero(d));
        const Vector g = lq_norm_grad(x, 4.0);
        return Vector(g * g.dot(v) + n * (lq_norm_hess(x, 4.0) * v));
    };
    f.x_star = Vector::Zero(d);
    f.f_star = 0.0;
    GrowthCertificate c;
    c.b = c.B = 2.0;
    c.norm = NormDescriptor{4.0 / 3.0};
    c.mu = 1.0;
    c.L = 3.0;
    c.L_f = 3.0;
    c.D_f = 1.0;
    f.certificate = c;
    return f;
}

// ---------------------------------------------------------------- quadratic

ObjectiveSpec make_quadratic(const Matrix& A) {
    if (A.rows() != A.cols() || A.rows() == 0) throw DomainError("quadratic needs a square matrix");
    if (!A.isApprox(A.transpose(), 1e-12)) throw DomainError("quadratic needs a symmetric matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0)) throw DomainError("quadratic needs a positive definite matrix");
    const int d = static_cast<int>(A.rows());
    ObjectiveSpec f;
    f.name = "quadratic";
    f.dim = d;
    f.eval = [A, d](const Vector& x) {
        check_dim(x, d, "quadratic");
        return 0.5 * x.dot(A * x);
    };
    f.grad = [A, d](const Vector& x) {
        check_dim(x, d, "quadratic");
        return Vector(A * x);
    };
    f.hvp = [A](const Vector&, const Vector& v) { return Vector(A * v); };
    f.x_star = Vector::Zero(d);
    f.f_star = 0.0;
    GrowthCertificate c;
    c.b = c.B = 2.0;
    c.mu = lmin;
    c.L = lmax;
    c.L_f = lmax;
    c.D_f = 1.0;
    c.N = 1.0;
    f.certificate = c;
    return f;
}

// ---------------------------------------------------------------- nonconvex1d

ObjectiveSpec make_nonconvex1d() {
    auto raw = [](double x) { return 0.25 * x * x + std::sin(x) + 1.0; };
    auto raw_d = [](double x) { return 0.5 * x + std::cos(x); };
    // The only critical point lies in (-2, -1); raw_d is increasing there.
    const double xs = solve_increasing(raw_d, [](double x) { return 0.5 - std::sin(x); }, 0.0, -2.0, -1.0);
    const double shift = raw(xs);

    ObjectiveSpec f;
    f.name = "nonconvex1d";
    f.dim = 1;
    f.convex = false;
    f.eval = [raw, shift](const Vector& x) {
        check_dim(x, 1, "nonconvex1d");
        return raw(x[0]) - shift;
    };
    f.grad = [raw_d](const Vector& x) {
        check_dim(x, 1, "nonconvex1d");
        Vector g(1);
        g[0] = raw_d(x[0]);
        return g;
    };
    f.hvp = [](const Vector& x, const Vector& v) {
        check_dim(x, 1, "nonconvex1d");
        return Vector((0.5 - std::sin(x[0])) * v);
    };
    f.x_star = Vector::Constant(1, xs);
    f.f_star = 0.0;

    GrowthCertificate c;
    c.b = c.B = 2.0;
    auto gap = [&](double x) { return raw(x) - shift; };
    double mu = kInf, L = 0.0;
    for (double side : {-1.0, 1.0}) {
        for (double r : log_space(1e-4, 1e4, 20001)) {
            const double x = xs + side * r;
            const double g = gap(x);
            mu = std::min(mu, g / (0.5 * r * r));
            L = std::max(L, 0.5 * raw_d(x) * raw_d(x) / g);
        }
    }
    c.mu = mu * (1.0 - 1e-3);
    c.L = L * (1.0 + 1e-3);
    c.sigma_power = 2.0;
    c.D_f_smooth = 1.5;
    f.certificate = c;
    return f;
}

double vec_primal_norm(const Vector& v, const GrowthCertificate& c) {
    return lq_norm(v, c.norm.primal_exponent());
}

}  // namespace

double ObjectiveParams::get(const std::string& key, double fallback) const {
    const auto it = scalars.find(key);
    return it == scalars.end() ? fallback : it->second;
}

double suboptimality(const ObjectiveSpec& f, const Vector& x) {
    if (!f.f_star) throw UnavailableError("suboptimality needs a known f(x*) for " + f.name);
    return f.eval(x) - *f.f_star;
}

std::vector<std::string> builtin_names() {
    return {"quartic2d", "power1d", "phiPower", "normFour", "quadratic", "nonconvex1d"};
}

ObjectiveSpec builtin(const std::string& name, const ObjectiveParams& params) {
    if (name == "quartic2d") return make_quartic2d();
    if (name == "power1d") return make_power1d(params.get("b", 2.0));
    if (name == "phiPower") {
        return make_phi_power(params.get("b", 2.0), params.get("B", 2.0),
                              static_cast<int>(params.get("d", 1.0)), params.get("relativistic", 0.0) != 0.0);
    }
    if (name == "normFour") return make_norm_four(static_cast<int>(params.get("d", 2.0)));
    if (name == "quadratic") {
        if (params.matrix) return make_quadratic(*params.matrix);
        const int d = static_cast<int>(params.get("d", 2.0));
        return make_quadratic(Matrix::Identity(d, d));
    }
    if (name == "nonconvex1d") return make_nonconvex1d();
    throw DomainError("unknown builtin objective '" + name + "'");
}

CertificateReport certify_growth(const ObjectiveSpec& f, int sample_count,
                                 const std::vector<double>& radius_grid, std::uint64_t seed) {
    if (!f.certificate) throw UnavailableError("objective " + f.name + " has no growth certificate");
    return certify_growth(f, *f.certificate, sample_count, radius_grid, seed);
}

CertificateReport certify_growth(const ObjectiveSpec& f, const GrowthCertificate& c, int sample_count,
                                 const std::vector<double>& radius_grid, std::uint64_t seed) {
    if (!f.x_star || !f.f_star) throw UnavailableError("certify_growth needs x* and f(x*)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    CertificateReport rep;
    rep.max_lower_violation = -kInf;
    rep.max_upper_violation = -kInf;
    for (int s = 0; s < sample_count; ++s) {
        Vector u(f.dim);
        for (int i = 0; i < f.dim; ++i) u[i] = normal(rng);
        u /= vec_primal_norm(u, c);
        for (double r : radius_grid) {
            const Vector x = *f.x_star + r * u;
            const double gap = f.eval(x) - *f.f_star;
            if (!(gap > 0.0)) continue;
            const double dist = vec_primal_norm(x - *f.x_star, c);
            const double lower = c.mu * phi_eval(c.b, c.B, dist);
            const double upper = kinetic_profile(c, lq_norm(f.grad(x), c.norm.q));
            rep.max_lower_violation = std::max(rep.max_lower_violation, (lower - gap) / gap);
            rep.max_upper_violation = std::max(rep.max_upper_violation, (upper - c.L * gap) / (c.L * gap));
            ++rep.samples;
        }
    }
    rep.pass = rep.samples > 0 && rep.max_lower_violation <= 1e-9 && rep.max_upper_violation <= 1e-9;
    return rep;
}

Matrix dense_hessian(const ObjectiveSpec& f, const Vector& x) {
    if (!f.hvp) throw UnavailableError("objective " + f.name + " has no Hessian-vector product");
    Matrix H(f.dim, f.dim);
    for (int j = 0; j < f.dim; ++j) H.col(j) = f.hvp(x, Vector::Unit(f.dim, j));
    return 0.5 * (H + H.transpose());
}

double local_smoothness(const ObjectiveSpec& f, const Vector& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(dense_hessian(f, x), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

PowerKinetic matched_kinetic(const GrowthCertificate& c) {
    if (c.pairing == Pairing::Relativistic) return PowerKinetic::relativistic(c.norm);
    return PowerKinetic{c.b / (c.b - 1.0), c.B / (c.B - 1.0), c.norm};
}

}  // namespace hamdesc
