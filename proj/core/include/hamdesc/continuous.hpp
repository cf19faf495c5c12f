#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamdesc/kinetic.hpp"
#include "hamdesc/objective.hpp"
#include "hamdesc/ode.hpp"
#include "hamdesc/types.hpp"

namespace hamdesc {

struct OdeConfig {
    double t_end = 10.0;
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long record_stride = 1;   // record every n-th accepted step
    double sample_dt = 0.0;   // > 0: record on a uniform time grid instead
    long max_steps = 100'000'000;  // StiffnessError beyond this many attempted steps

    void validate() const;
    OdeOptions options() const;
};

struct ContinuousTrajectory {
    std::vector<double> t;
    std::vector<Vector> x;
    std::vector<Vector> p;
    std::vector<double> H;
    std::vector<double> subopt;  // NaN when f(x*) is unknown
    long steps = 0;
    bool h_monotone = true;
    double max_h_increase = 0.0;
};

/// (grad k(p), -grad f(x) - gamma p)
std::pair<Vector, Vector> ode_field(const KineticEnergy& K, const ObjectiveSpec& f, double gamma, const State& s);

/// Adaptive simulation of x' = grad k(p), p' = -grad f(x) - gamma p.
ContinuousTrajectory simulate(const KineticEnergy& K, const ObjectiveSpec& f, double gamma, const State& s0,
                              const OdeConfig& cfg);

// ---------------------------------------------------------------- lower bounds

/// x' = |p|^{a-1} sgn(p), p' = -|x|^{b-1} sgn(x) - gamma p.
struct LowerBoundProblem {
    double a = 2.0;
    double b = 4.0;
    double gamma = 1.0;

    void validate() const;
    bool sublinear_regime() const { return 1.0 / a + 1.0 / b < 1.0; }
    /// 1 / (b a - b - a), the predicted decay exponent of |x_t|.
    double predicted_exponent() const;
    /// gamma (a - 1), the rate of the exceptional path.
    double fast_rate() const { return gamma * (a - 1.0); }
};

std::pair<double, double> power_ode_field(const LowerBoundProblem& prob, double x, double p);

double xi(const LowerBoundProblem& prob, double A);
bool in_trapping_region(const LowerBoundProblem& prob, double A, double x, double p);

struct LowerBoundOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    double near_origin = 1e-12;   // halt when |x| and |p| drop below this
    std::vector<double> sample_times;  // sorted; empty records accepted steps
};

struct LowerBoundTrajectory {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> p;
    bool halted_near_origin = false;
    double t_final = 0.0;
};

LowerBoundTrajectory simulate_lower(const LowerBoundProblem& prob, double x0, double p0, double t_end,
                                    const LowerBoundOptions& opts = {});

struct TrappingReport {
    bool violated = false;
    double t_violation = 0.0;
    double x_violation = 0.0;
    double p_violation = 0.0;
    long samples = 0;
};

/// Simulates from a start inside R_A and checks membership after every
/// accepted step until the horizon (or the near-origin halt).
TrappingReport trapping_forward_invariance_check(const LowerBoundProblem& prob, double A, double x0, double p0,
                                                 double horizon, const LowerBoundOptions& opts = {});

enum class OrbitClass { Slow, Cross };

struct ShootOptions {
    std::vector<double> A_grid;  // empty: {1.5, 2, 4} / gamma
    double horizon = 1e4;
    double rel_tol = 1e-12;
    // Near eta the orbit settles where p ~ x^{b-1} is far below any fixed
    // absolute scale, so the error control has to be effectively relative.
    double abs_tol = 1e-40;
    double near_origin = 1e-12;
    bool check_tolerance_halving = true;
};

/// SLOW: the orbit from (theta, 0) enters some R_A on the grid.
/// CROSS: x becomes negative. Throws ClassificationError otherwise.
OrbitClass classify_orbit(const LowerBoundProblem& prob, double theta, const ShootOptions& opts = {});

struct EtaEstimate {
    double eta = 0.0;
    double lo = 0.0;   // classified SLOW
    double hi = 0.0;   // classified CROSS
    int bisections = 0;
};

/// Bisection for the boundary between SLOW and CROSS starts (theta, 0).
EtaEstimate shoot_eta(const LowerBoundProblem& prob, double lo, double hi, double tol,
                      const ShootOptions& opts = {});

struct RateFit {
    enum class Kind { Linear, Sublinear } kind = Kind::Linear;
    double rate = 0.0;     // -slope of log|x| vs t
    double power = 0.0;    // -slope of log|x| vs log t
    double fit_r2 = 0.0;
    double r2_linear = 0.0;
    double r2_sublinear = 0.0;
};

/// Least-squares fits over samples with t in [t_lo, t_hi]; picks the
/// model with the larger R^2. Requires t > 0 for the log-log model.
RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& absx, double t_lo, double t_hi);

/// Time window where the SLOW and CROSS bracket trajectories still agree
/// (relative gap below `agree`), after |x| first drops below `start_frac` * eta.
std::pair<double, double> eta_path_window(const LowerBoundProblem& prob, const EtaEstimate& est,
                                          double horizon, double agree = 0.01, double start_frac = 0.1,
                                          const LowerBoundOptions& opts = {});

std::string to_string(OrbitClass c);
std::string to_string(RateFit::Kind k);

}  // namespace hamdesc
