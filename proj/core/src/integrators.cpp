#include "hamdesc/integrators.hpp"

#include <cmath>
#include <limits>

#include "hamdesc/errors.hpp"

namespace hamdesc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const PowerKinetic& euclidean_quadratic() {
    static const PowerKinetic k{2.0, 2.0, NormDescriptor{2.0}};
    return k;
}

void check_state(const State& s, const ObjectiveSpec& f) {
    if (s.x.size() != f.dim || s.p.size() != f.dim) {
        throw DomainError("state dimension does not match objective " + f.name + " (d=" +
                          std::to_string(f.dim) + ")");
    }
}

// Subproblem of the implicit step:
//   F(x) = eps k*((x - x_i)/eps) + eps delta f(x) - delta <p_i, x>.
struct ImplicitSubproblem {
    const State& s;
    const KineticEnergy& K;
    const ObjectiveSpec& f;
    double eps;
    double delta;

    Vector v(const Vector& x) const { return (x - s.x) / eps; }

    double value(const Vector& x) const {
        double kc;
        try {
            kc = kinetic_conj(K, v(x));
        } catch (const RangeError&) {
            return std::numeric_limits<double>::infinity();
        }
        return eps * kc + eps * delta * f.eval(x) - delta * s.p.dot(x);
    }

    Vector gradient(const Vector& x) const {
        return kinetic_conj_grad(K, v(x)) + eps * delta * f.grad(x) - delta * s.p;
    }

    Matrix hessian(const Vector& x) const {
        return kinetic_conj_hess(K, v(x)) / eps + eps * delta * dense_hessian(f, x);
    }

    // x <- x_i + eps grad k(delta p_i - eps delta grad f(x))
    Vector fixed_point_map(const Vector& x) const {
        return s.x + eps * kinetic_grad(K, Vector(delta * s.p - eps * delta * f.grad(x)));
    }
};

bool newton_solve(const ImplicitSubproblem& P, Vector& x, const IntegratorConfig& cfg, ImplicitStepInfo& info) {
    const auto d = x.size();
    double Fx = P.value(x);
    if (!std::isfinite(Fx)) return false;
    for (int it = 0; it < cfg.subsolver_max_iters; ++it) {
        const Vector g = P.gradient(x);
        info.iterations = it;
        info.residual = g.norm();
        if (info.residual <= cfg.subsolver_tol) return true;

        const Matrix H = P.hessian(x);
        Vector dir;
        double tau = 0.0;
        const double scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::LDLT<Matrix> ldlt(H + tau * Matrix::Identity(d, d));
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                dir = -ldlt.solve(g);
                if (dir.allFinite() && g.dot(dir) < 0.0) break;
            }
            tau = tau == 0.0 ? 1e-12 * scale : 10.0 * tau;
            dir.resize(0);
        }
        if (dir.size() == 0) return false;

        double t = 1.0;
        bool accepted = false;
        const double slope = g.dot(dir);
        for (int ls = 0; ls < 60; ++ls) {
            const Vector xn = x + t * dir;
            const double Fn = P.value(xn);
            if (std::isfinite(Fn)) {
                // Near the solution F stalls at rounding level; a smaller
                // gradient is then the better acceptance test.
                if (Fn <= Fx + 1e-4 * t * slope || P.gradient(xn).norm() < info.residual) {
                    x = xn;
                    Fx = Fn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) return false;
    }
    info.residual = P.gradient(x).norm();
    info.iterations = cfg.subsolver_max_iters;
    return info.residual <= cfg.subsolver_tol;
}

// Same stationarity condition with p as the unknown:
//   r(p) = p - delta p_i + eps delta grad f(x_i + eps grad k(p)) = 0.
// Well conditioned where grad k* is steep (relativistic k near |v| = 1).
bool momentum_newton_solve(const ImplicitSubproblem& P, Vector& x, const IntegratorConfig& cfg,
                           ImplicitStepInfo& info) {
    const auto d = x.size();
    const double c = P.eps * P.delta;
    auto position = [&](const Vector& p) { return Vector(P.s.x + P.eps * kinetic_grad(P.K, p)); };
    auto residual = [&](const Vector& p) { return Vector(p - P.delta * P.s.p + c * P.f.grad(position(p))); };

    Vector p = P.delta * (P.s.p - P.eps * P.f.grad(P.s.x));
    Vector r = residual(p);
    double rn = r.norm();
    for (int it = 0; it < cfg.subsolver_max_iters; ++it) {
        info.iterations = it;
        info.residual = rn;
        if (!std::isfinite(rn)) return false;
        if (rn <= cfg.subsolver_tol) {
            x = position(p);
            return true;
        }
        const Matrix J =
            Matrix::Identity(d, d) + c * P.eps * dense_hessian(P.f, position(p)) * kinetic_hess(P.K, p);
        const Vector dir = -J.partialPivLu().solve(r);
        if (!dir.allFinite()) return false;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vector pn = p + t * dir;
            const Vector rn_vec = residual(pn);
            const double n = rn_vec.norm();
            if (std::isfinite(n) && n < rn) {
                p = pn;
                r = rn_vec;
                rn = n;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) return false;
    }
    info.residual = rn;
    info.iterations = cfg.subsolver_max_iters;
    if (rn > cfg.subsolver_tol) return false;
    x = position(p);
    return true;
}

bool fixed_point_solve(const ImplicitSubproblem& P, Vector& x, const IntegratorConfig& cfg, ImplicitStepInfo& info) {
    info.used_fallback = true;
    double Fx = P.value(x);
    for (int it = 0; it < cfg.subsolver_max_iters; ++it) {
        info.iterations = it;
        info.residual = P.gradient(x).norm();
        if (info.residual <= cfg.subsolver_tol) return true;
        const Vector target = P.fixed_point_map(x);
        double theta = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vector xn = x + theta * (target - x);
            const double Fn = P.value(xn);
            if (std::isfinite(Fn) && (Fn <= Fx || !std::isfinite(Fx))) {
                x = xn;
                Fx = Fn;
                moved = true;
                break;
            }
            theta *= 0.5;
        }
        if (!moved) break;
    }
    info.residual = P.gradient(x).norm();
    return info.residual <= cfg.subsolver_tol;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Implicit: return "implicit";
        case Method::Explicit1: return "explicit1";
        case Method::Explicit2: return "explicit2";
        case Method::ClassicalMomentum: return "classical_momentum";
        case Method::GradientDescent: return "gradient_descent";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    if (s == "implicit") return Method::Implicit;
    if (s == "explicit1") return Method::Explicit1;
    if (s == "explicit2") return Method::Explicit2;
    if (s == "classical_momentum") return Method::ClassicalMomentum;
    if (s == "gradient_descent") return Method::GradientDescent;
    throw DomainError("unknown method '" + s + "'");
}

void IntegratorConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("step size epsilon must be positive");
    if (method != Method::GradientDescent && !(gamma > 0.0 && gamma < 1.0)) {
        throw DomainError("friction gamma must lie in (0, 1)");
    }
    if (max_iters < 0) throw DomainError("max_iters must be nonnegative");
    if (!(subsolver_tol > 0.0) || subsolver_max_iters <= 0) throw DomainError("invalid subsolver budget");
}

State step_explicit1(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f) {
    check_state(s, f);
    const double delta = cfg.delta();
    State out;
    out.p = delta * (s.p - cfg.epsilon * f.grad(s.x));
    out.x = s.x + cfg.epsilon * kinetic_grad(K, out.p);
    return out;
}

State step_explicit2(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
                     const WarningSink& warn) {
    check_state(s, f);
    if (cfg.epsilon * cfg.gamma >= 1.0 && warn) {
        warn("explicit2: epsilon*gamma >= 1 flips the momentum sign; outside the convergence theory");
    }
    State out;
    out.x = s.x + cfg.epsilon * kinetic_grad(K, s.p);
    out.p = (1.0 - cfg.epsilon * cfg.gamma) * s.p - cfg.epsilon * f.grad(out.x);
    return out;
}

State step_implicit(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
                    ImplicitStepInfo* info_out) {
    check_state(s, f);
    const double eps = cfg.epsilon, delta = cfg.delta();
    ImplicitSubproblem P{s, K, f, eps, delta};
    ImplicitStepInfo info;

    Vector x0 = s.x;
    try {
        x0 = s.x + eps * kinetic_grad(K, Vector(delta * (s.p - eps * f.grad(s.x))));
        if (!std::isfinite(P.value(x0))) x0 = s.x;
    } catch (const DomainError&) {
        x0 = s.x;
    }

    Vector x = x0;
    bool ok = false;
    if (f.hvp) {
        try {
            ok = newton_solve(P, x, cfg, info);
        } catch (const RangeError&) {
            ok = false;
        }
    }
    if (!ok && f.hvp) {
        Vector xp = x;
        ImplicitStepInfo pinfo;
        try {
            if (momentum_newton_solve(P, xp, cfg, pinfo)) {
                x = xp;
                info = pinfo;
                ok = true;
            }
        } catch (const DomainError&) {
        } catch (const RangeError&) {
        }
    }
    if (!ok) {
        if (!f.hvp || !std::isfinite(P.value(x))) x = x0;
        ok = fixed_point_solve(P, x, cfg, info);
    }
    if (info_out) *info_out = info;
    if (!ok) {
        throw SubsolverError("implicit step: stationarity residual " + std::to_string(info.residual) +
                             " exceeds tolerance " + std::to_string(cfg.subsolver_tol) + " after " +
                             std::to_string(cfg.subsolver_max_iters) + " iterations");
    }
    State out;
    out.x = x;
    out.p = delta * s.p - eps * delta * f.grad(x);
    return out;
}

State step_classical_momentum(const State& s, const IntegratorConfig& cfg, const ObjectiveSpec& f) {
    check_state(s, f);
    State out;
    out.p = cfg.delta() * (s.p - cfg.epsilon * f.grad(s.x));
    out.x = s.x + cfg.epsilon * out.p;
    return out;
}

State step_gradient_descent(const State& s, const IntegratorConfig& cfg, const ObjectiveSpec& f) {
    if (s.x.size() != f.dim) throw DomainError("state dimension does not match objective " + f.name);
    State out;
    out.x = s.x - cfg.epsilon * f.grad(s.x);
    out.p = Vector::Zero(s.x.size());
    return out;
}

State step(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
           const WarningSink& warn) {
    switch (cfg.method) {
        case Method::Implicit: return step_implicit(s, cfg, K, f);
        case Method::Explicit1: return step_explicit1(s, cfg, K, f);
        case Method::Explicit2: return step_explicit2(s, cfg, K, f, warn);
        case Method::ClassicalMomentum: return step_classical_momentum(s, cfg, f);
        case Method::GradientDescent: return step_gradient_descent(s, cfg, f);
    }
    throw DomainError("unknown method");
}

KineticEnergy effective_kinetic(Method m, const KineticEnergy& K) {
    if (m == Method::ClassicalMomentum || m == Method::GradientDescent) return euclidean_quadratic();
    return K;
}

double hamiltonian(const KineticEnergy& K, const ObjectiveSpec& f, const State& s) {
    return kinetic_eval(K, s.p) + f.eval(s.x) - f.f_star.value_or(0.0);
}

RunResult run(const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f, const Vector& x0,
              const std::optional<Vector>& p0, const StopCriteria& stop, const RunOptions& opts,
              const WarningSink& warn) {
    cfg.validate();
    if (opts.record_stride < 1) throw DomainError("record stride must be >= 1");
    const KineticEnergy Keff = effective_kinetic(cfg.method, K);
    State s{x0, p0 ? *p0 : Vector(Vector::Zero(x0.size()))};
    check_state(s, f);

    bool warned = false;
    const WarningSink warn_once = [&](const std::string& msg) {
        if (!warned && warn) warn(msg);
        warned = true;
    };

    auto make_record = [&](long i, const State& st) {
        TrajectoryRecord r;
        r.iter = i;
        r.x = st.x;
        r.p = st.p;
        r.H = hamiltonian(Keff, f, st);
        r.subopt = f.f_star ? f.eval(st.x) - *f.f_star : kNaN;
        if (opts.beta && f.x_star) r.V = r.H + *opts.beta * (st.x - *f.x_star).dot(st.p);
        return r;
    };

    RunResult res;
    TrajectoryRecord cur = make_record(0, s);
    res.records.push_back(cur);
    const long budget = std::min(stop.max_iters, cfg.max_iters);
    res.stop_reason = "max_iters";

    auto converged = [&](const TrajectoryRecord& r) -> const char* {
        if (stop.subopt_tol && f.f_star && r.subopt <= *stop.subopt_tol) return "subopt_tol";
        if (stop.grad_tol && f.grad(r.x).norm() <= *stop.grad_tol) return "grad_tol";
        return nullptr;
    };

    if (const char* why = converged(cur)) {
        res.stop_reason = why;
    } else {
        for (long i = 1; i <= budget; ++i) {
            s = step(s, cfg, Keff, f, warn_once);
            TrajectoryRecord next = make_record(i, s);
            res.iterations = i;
            if (!next.x.allFinite() || !next.p.allFinite() || !std::isfinite(next.H)) {
                res.records.push_back(next);
                res.stop_reason = "diverged";
                res.h_monotone = false;
                cur = next;
                break;
            }
            const double rise = next.H - cur.H;
            if (rise > opts.monotone_slack * std::max(1.0, std::abs(cur.H))) {
                res.h_monotone = false;
                ++res.h_increases;
            }
            res.max_h_increase = std::max(res.max_h_increase, rise);
            cur = std::move(next);
            const char* why = converged(cur);
            if (i % opts.record_stride == 0 || why || i == budget) res.records.push_back(cur);
            if (why) {
                res.stop_reason = why;
                break;
            }
        }
    }
    res.final = cur;
    return res;
}

}  // namespace hamdesc
