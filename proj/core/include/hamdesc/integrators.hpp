#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hamdesc/kinetic.hpp"
#include "hamdesc/objective.hpp"
#include "hamdesc/types.hpp"

namespace hamdesc {

enum class Method { Implicit, Explicit1, Explicit2, ClassicalMomentum, GradientDescent };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct IntegratorConfig {
    Method method = Method::Explicit1;
    double epsilon = 0.01;
    double gamma = 0.5;
    long max_iters = 1000;
    double subsolver_tol = 1e-10;
    int subsolver_max_iters = 200;

    void validate() const;
    /// delta = 1 / (1 + gamma * epsilon)
    double delta() const { return 1.0 / (1.0 + gamma * epsilon); }
};

struct TrajectoryRecord {
    long iter = 0;
    Vector x;
    Vector p;
    double H = 0.0;
    double subopt = 0.0;           // NaN when f(x*) is unknown
    std::optional<double> V;
};

struct StopCriteria {
    long max_iters = 1000;
    std::optional<double> subopt_tol;
    std::optional<double> grad_tol;
};

struct RunOptions {
    long record_stride = 1;
    std::optional<double> beta;    // Lyapunov V = H + beta <x - x*, p>
    double monotone_slack = 1e-12;
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    long iterations = 0;
    bool h_monotone = true;
    long h_increases = 0;
    double max_h_increase = 0.0;
    std::string stop_reason;
    TrajectoryRecord final;
};

struct ImplicitStepInfo {
    int iterations = 0;
    double residual = 0.0;
    bool used_fallback = false;
};

/// Sink for non-fatal diagnostics (e.g. explicit2 with eps*gamma >= 1).
using WarningSink = std::function<void(const std::string&)>;

State step_explicit1(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f);
State step_explicit2(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
                     const WarningSink& warn = {});
State step_implicit(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
                    ImplicitStepInfo* info = nullptr);
State step_classical_momentum(const State& s, const IntegratorConfig& cfg, const ObjectiveSpec& f);
State step_gradient_descent(const State& s, const IntegratorConfig& cfg, const ObjectiveSpec& f);

/// One step of cfg.method.
State step(const State& s, const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
           const WarningSink& warn = {});

/// Kinetic energy actually used by a method: classical momentum and
/// gradient descent ignore K and use |p|_2^2 / 2.
KineticEnergy effective_kinetic(Method m, const KineticEnergy& K);

/// H = k(p) + f(x) - f(x*), or k(p) + f(x) when f(x*) is unknown.
double hamiltonian(const KineticEnergy& K, const ObjectiveSpec& f, const State& s);

RunResult run(const IntegratorConfig& cfg, const KineticEnergy& K, const ObjectiveSpec& f,
              const Vector& x0, const std::optional<Vector>& p0, const StopCriteria& stop,
              const RunOptions& opts = {}, const WarningSink& warn = {});

}  // namespace hamdesc
