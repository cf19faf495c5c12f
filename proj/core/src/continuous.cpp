#include "hamdesc/continuous.hpp"

#include <algorithm>
#include <cmath>

#include "hamdesc/errors.hpp"
#include "hamdesc/integrators.hpp"

namespace hamdesc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double signed_pow(double v, double e) { return sgn(v) * std::pow(std::abs(v), e); }

OdeRhs lower_rhs(const LowerBoundProblem& prob) {
    return [prob](double, const Vector& y, Vector& dy) {
        const auto [dx, dp] = power_ode_field(prob, y[0], y[1]);
        dy[0] = dx;
        dy[1] = dp;
    };
}

Vector pack(double x, double p) {
    Vector y(2);
    y << x, p;
    return y;
}

bool near_origin(const Vector& y, double cutoff) {
    return std::abs(y[0]) < cutoff && std::abs(y[1]) < cutoff;
}

struct Linear {
    double slope = 0.0;
    double r2 = 0.0;
};

Linear least_squares(const std::vector<double>& u, const std::vector<double>& v) {
    const double n = static_cast<double>(u.size());
    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        mu += u[i];
        mv += v[i];
    }
    mu /= n;
    mv /= n;
    double suu = 0.0, suv = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        suu += (u[i] - mu) * (u[i] - mu);
        suv += (u[i] - mu) * (v[i] - mv);
        svv += (v[i] - mv) * (v[i] - mv);
    }
    if (suu <= 0.0) throw DomainError("fit_rate: degenerate window (no spread in the regressor)");
    Linear out;
    out.slope = suv / suu;
    const double ss_res = std::max(0.0, svv - out.slope * suv);
    out.r2 = svv > 0.0 ? std::clamp(1.0 - ss_res / svv, 0.0, 1.0) : 1.0;
    return out;
}

}  // namespace

// ---------------------------------------------------------------- simulate

void OdeConfig::validate() const {
    if (!(t_end >= 0.0)) throw DomainError("OdeConfig: t_end must be nonnegative");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("OdeConfig: tolerances must be positive");
    if (record_stride < 1) throw DomainError("OdeConfig: record_stride must be >= 1");
    if (sample_dt < 0.0) throw DomainError("OdeConfig: sample_dt must be nonnegative");
    if (max_steps < 1) throw DomainError("OdeConfig: max_steps must be >= 1");
}

OdeOptions OdeConfig::options() const {
    OdeOptions o;
    o.rel_tol = rel_tol;
    o.abs_tol = abs_tol;
    o.max_step = max_step;
    o.max_steps = max_steps;
    return o;
}

std::pair<Vector, Vector> ode_field(const KineticEnergy& K, const ObjectiveSpec& f, double gamma, const State& s) {
    return {kinetic_grad(K, s.p), -f.grad(s.x) - gamma * s.p};
}

ContinuousTrajectory simulate(const KineticEnergy& K, const ObjectiveSpec& f, double gamma, const State& s0,
                              const OdeConfig& cfg) {
    cfg.validate();
    const auto d = s0.x.size();
    if (d != f.dim || s0.p.size() != d) throw DomainError("simulate: state dimension mismatch");

    ContinuousTrajectory tr;
    auto record = [&](double t, const Vector& y) {
        State s{y.head(d), y.tail(d)};
        tr.t.push_back(t);
        tr.x.push_back(s.x);
        tr.p.push_back(s.p);
        tr.H.push_back(hamiltonian(K, f, s));
        tr.subopt.push_back(f.f_star ? f.eval(s.x) - *f.f_star : kNaN);
    };

    Vector y0(2 * d);
    y0 << s0.x, s0.p;
    record(0.0, y0);

    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        dy.head(d) = kinetic_grad(K, Vector(y.tail(d)));
        dy.tail(d) = -f.grad(Vector(y.head(d))) - gamma * y.tail(d);
    };

    long k = 0;
    double next_sample = cfg.sample_dt;
    const StepObserver obs = [&](const DenseStep& ds) {
        ++k;
        if (cfg.sample_dt > 0.0) {
            while (next_sample <= ds.t1 * (1.0 + 1e-14)) {
                record(next_sample, ds.at(next_sample));
                next_sample = tr.t.size() * cfg.sample_dt;
            }
        } else if (k % cfg.record_stride == 0 || ds.t1 >= cfg.t_end) {
            record(ds.t1, ds.y1);
        }
        return true;
    };
    OdeOptions o = cfg.options();
    const double guard = 1e-10 * (1.0 + tr.H.front());
    auto energy = [&](const Vector& y) { return hamiltonian(K, f, State{y.head(d), y.tail(d)}); };
    // H never increases along exact solutions. Refusing steps that raise it
    // forces small steps where grad k fails to be Lipschitz (p near 0, a < 2),
    // which the embedded error estimate does not detect reliably.
    o.accept_step = [&](const Vector& ya, const Vector& yb) { return energy(yb) <= energy(ya) + guard; };
    const OdeStats st = DormandPrince(o).integrate(rhs, 0.0, y0, cfg.t_end, obs);
    tr.steps = st.accepted;
    if (cfg.sample_dt == 0.0 && tr.t.back() < st.t) record(st.t, st.y);

    const double slack = 1e-8 * (1.0 + tr.H.front());
    for (std::size_t i = 1; i < tr.H.size(); ++i) {
        const double rise = tr.H[i] - tr.H[i - 1];
        tr.max_h_increase = std::max(tr.max_h_increase, rise);
        if (rise > slack) tr.h_monotone = false;
    }
    return tr;
}

// ---------------------------------------------------------------- lower bounds

void LowerBoundProblem::validate() const {
    if (!(a > 1.0) || !(b > 1.0)) throw DomainError("lower-bound problem needs a, b > 1");
    if (!(gamma > 0.0)) throw DomainError("lower-bound problem needs gamma > 0");
}

double LowerBoundProblem::predicted_exponent() const {
    if (!sublinear_regime()) {
        throw DomainError("no sublinear exponent: 1/a + 1/b >= 1 is the linear regime");
    }
    return 1.0 / (b * a - b - a);
}

std::pair<double, double> power_ode_field(const LowerBoundProblem& prob, double x, double p) {
    return {signed_pow(p, prob.a - 1.0), -signed_pow(x, prob.b - 1.0) - prob.gamma * p};
}

double xi(const LowerBoundProblem& prob, double A) {
    prob.validate();
    const double e = prob.predicted_exponent();
    if (!(A > 1.0 / prob.gamma)) throw DomainError("xi(A) needs A > 1/gamma");
    return std::pow((prob.gamma * A - 1.0) / ((prob.b - 1.0) * std::pow(A, prob.a)), e);
}

bool in_trapping_region(const LowerBoundProblem& prob, double A, double x, double p) {
    const double x_max = xi(prob, A);
    return x > 0.0 && x < x_max && p < 0.0 && p > -A * std::pow(x, prob.b - 1.0);
}

LowerBoundTrajectory simulate_lower(const LowerBoundProblem& prob, double x0, double p0, double t_end,
                                    const LowerBoundOptions& opts) {
    prob.validate();
    LowerBoundTrajectory tr;
    const auto& times = opts.sample_times;
    std::size_t next = 0;
    auto push = [&](double t, const Vector& y) {
        tr.t.push_back(t);
        tr.x.push_back(y[0]);
        tr.p.push_back(y[1]);
    };
    const Vector y0 = pack(x0, p0);
    if (times.empty()) {
        push(0.0, y0);
    } else {
        while (next < times.size() && times[next] <= 0.0) push(times[next++], y0);
    }

    OdeOptions o;
    o.rel_tol = opts.rel_tol;
    o.abs_tol = opts.abs_tol;
    const StepObserver obs = [&](const DenseStep& ds) {
        if (times.empty()) {
            push(ds.t1, ds.y1);
        } else {
            while (next < times.size() && times[next] <= ds.t1) {
                push(times[next], ds.at(times[next]));
                ++next;
            }
        }
        if (near_origin(ds.y1, opts.near_origin)) {
            tr.halted_near_origin = true;
            return false;
        }
        return true;
    };
    const OdeStats st = DormandPrince(o).integrate(lower_rhs(prob), 0.0, y0, t_end, obs);
    tr.t_final = st.t;
    return tr;
}

TrappingReport trapping_forward_invariance_check(const LowerBoundProblem& prob, double A, double x0, double p0,
                                                 double horizon, const LowerBoundOptions& opts) {
    if (!in_trapping_region(prob, A, x0, p0)) {
        throw DomainError("trapping check: start state is not inside R_A");
    }
    TrappingReport rep;
    rep.samples = 1;
    if (horizon <= 0.0) return rep;
    OdeOptions o;
    o.rel_tol = opts.rel_tol;
    o.abs_tol = opts.abs_tol;
    const StepObserver obs = [&](const DenseStep& ds) {
        ++rep.samples;
        if (near_origin(ds.y1, opts.near_origin)) return false;
        if (!in_trapping_region(prob, A, ds.y1[0], ds.y1[1])) {
            rep.violated = true;
            rep.t_violation = ds.t1;
            rep.x_violation = ds.y1[0];
            rep.p_violation = ds.y1[1];
            return false;
        }
        return true;
    };
    DormandPrince(o).integrate(lower_rhs(prob), 0.0, pack(x0, p0), horizon, obs);
    return rep;
}

namespace {

OrbitClass classify_once(const LowerBoundProblem& prob, double theta, const std::vector<double>& grid,
                         const ShootOptions& opts, double rel_tol, double abs_tol) {
    std::optional<OrbitClass> result;
    OdeOptions o;
    o.rel_tol = rel_tol;
    o.abs_tol = abs_tol;
    o.initial_step = 1e-3;
    bool stalled = false;
    const StepObserver obs = [&](const DenseStep& ds) {
        const double x = ds.y1[0], p = ds.y1[1];
        if (x < 0.0) {
            result = OrbitClass::Cross;
            return false;
        }
        for (double A : grid) {
            if (in_trapping_region(prob, A, x, p)) {
                result = OrbitClass::Slow;
                return false;
            }
        }
        if (near_origin(ds.y1, opts.near_origin)) {
            stalled = true;
            return false;
        }
        return true;
    };
    DormandPrince(o).integrate(lower_rhs(prob), 0.0, pack(theta, 0.0), opts.horizon, obs);
    if (!result) {
        throw ClassificationError("orbit from theta = " + std::to_string(theta) +
                                  (stalled ? " reached the near-origin cutoff" : " hit the horizon") +
                                  " before entering a trapping region or crossing x = 0");
    }
    return *result;
}

}  // namespace

OrbitClass classify_orbit(const LowerBoundProblem& prob, double theta, const ShootOptions& opts) {
    prob.validate();
    if (!prob.sublinear_regime()) throw DomainError("orbit classification needs 1/a + 1/b < 1");
    // Central symmetry: the orbit from (-theta, 0) is the negated orbit.
    if (theta < 0.0) return classify_orbit(prob, -theta, opts);
    if (theta == 0.0) throw DomainError("theta = 0 is the equilibrium");
    std::vector<double> grid = opts.A_grid;
    if (grid.empty()) grid = {1.5 / prob.gamma, 2.0 / prob.gamma, 4.0 / prob.gamma};
    const OrbitClass c = classify_once(prob, theta, grid, opts, opts.rel_tol, opts.abs_tol);
    if (opts.check_tolerance_halving) {
        const OrbitClass c2 = classify_once(prob, theta, grid, opts, 0.5 * opts.rel_tol, 0.5 * opts.abs_tol);
        if (c2 != c) {
            throw ClassificationError("classification at theta = " + std::to_string(theta) +
                                      " is not stable under tolerance halving");
        }
    }
    return c;
}

EtaEstimate shoot_eta(const LowerBoundProblem& prob, double lo, double hi, double tol, const ShootOptions& opts) {
    prob.validate();
    if (!prob.sublinear_regime()) throw DomainError("shoot_eta needs the sublinear regime 1/a + 1/b < 1");
    if (!(lo > 0.0) || !(hi > lo) || !(tol > 0.0)) throw DomainError("shoot_eta needs 0 < lo < hi and tol > 0");
    if (classify_orbit(prob, lo, opts) != OrbitClass::Slow) {
        throw DomainError("shoot_eta: lower end of the search interval is not SLOW");
    }
    if (classify_orbit(prob, hi, opts) != OrbitClass::Cross) {
        throw DomainError("shoot_eta: upper end of the search interval is not CROSS");
    }
    EtaEstimate est{0.5 * (lo + hi), lo, hi, 0};
    while (est.hi - est.lo > tol * est.eta) {
        const double mid = 0.5 * (est.lo + est.hi);
        if (classify_orbit(prob, mid, opts) == OrbitClass::Slow) est.lo = mid; else est.hi = mid;
        est.eta = 0.5 * (est.lo + est.hi);
        ++est.bisections;
    }
    return est;
}

RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& absx, double t_lo, double t_hi) {
    if (t.size() != absx.size()) throw DomainError("fit_rate: sample arrays differ in length");
    std::vector<double> ts, lts, lx;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        if (!(absx[i] > 0.0)) throw DomainError("fit_rate: |x| must be positive on the window");
        ts.push_back(t[i]);
        lx.push_back(std::log(absx[i]));
        if (t[i] > 0.0) lts.push_back(std::log(t[i]));
    }
    if (ts.size() < 3) throw DomainError("fit_rate: degenerate window (fewer than 3 samples)");
    RateFit fit;
    const Linear lin = least_squares(ts, lx);
    fit.rate = -lin.slope;
    fit.r2_linear = lin.r2;
    if (lts.size() == ts.size()) {
        const Linear sub = least_squares(lts, lx);
        fit.power = -sub.slope;
        fit.r2_sublinear = sub.r2;
    }
    if (fit.r2_sublinear > fit.r2_linear) {
        fit.kind = RateFit::Kind::Sublinear;
        fit.fit_r2 = fit.r2_sublinear;
    } else {
        fit.kind = RateFit::Kind::Linear;
        fit.fit_r2 = fit.r2_linear;
    }
    return fit;
}

std::pair<double, double> eta_path_window(const LowerBoundProblem& prob, const EtaEstimate& est, double horizon,
                                          double agree, double start_frac, const LowerBoundOptions& opts) {
    LowerBoundOptions o = opts;
    if (o.sample_times.empty()) {
        const int n = static_cast<int>(horizon / 0.01);
        for (int i = 0; i <= n; ++i) o.sample_times.push_back(i * 0.01);
    }
    const auto slow = simulate_lower(prob, est.lo, 0.0, horizon, o);
    const auto cross = simulate_lower(prob, est.hi, 0.0, horizon, o);
    const std::size_t n = std::min(slow.t.size(), cross.t.size());
    double t_start = -1.0, t_split = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xs = slow.x[i], xc = cross.x[i];
        if (t_start < 0.0 && std::abs(xs) < start_frac * est.eta) t_start = slow.t[i];
        const double scale = std::max(std::abs(xs), std::abs(xc));
        if (std::abs(xs - xc) > agree * scale || xc <= 0.0 || xs <= 0.0) {
            t_split = slow.t[i];
            break;
        }
    }
    if (t_split < 0.0) t_split = slow.t[n - 1];
    if (t_start < 0.0 || t_split <= t_start) {
        throw ClassificationError("eta path: no pre-collapse window where the bracket trajectories agree");
    }
    return {t_start, t_split};
}

std::string to_string(OrbitClass c) { return c == OrbitClass::Slow ? "slow" : "cross"; }
std::string to_string(RateFit::Kind k) { return k == RateFit::Kind::Linear ? "linear" : "sublinear"; }

}  // namespace hamdesc
