#pragma once

#include <array>
#include <functional>
#include <limits>

#include "hamdesc/types.hpp"

namespace hamdesc {

struct OdeOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 selects a step automatically
    long max_steps = 100'000'000;
    /// Optional extra acceptance test on (y0, y1) for steps that pass the
    /// error control; a refused step is retried at a quarter of the size.
    std::function<bool(const Vector&, const Vector&)> accept_step;
};

/// dy = F(t, y)
using OdeRhs = std::function<void(double, const Vector&, Vector&)>;

/// One accepted Dormand-Prince step with its fourth-order continuous extension.
class DenseStep {
public:
    double t0 = 0.0;
    double t1 = 0.0;
    Vector y0;
    Vector y1;
    Vector dy1;

    /// Interpolated state at t in [t0, t1].
    Vector at(double t) const;

private:
    friend class DormandPrince;
    std::array<Vector, 5> r_;
};

struct OdeStats {
    double t = 0.0;
    Vector y;
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
    bool stopped = false;  // observer requested a stop
};

/// Called after each accepted step; return false to stop integration.
using StepObserver = std::function<bool(const DenseStep&)>;

/// Embedded Runge-Kutta 5(4) (Dormand-Prince) with PI step-size control.
/// Throws StiffnessError if the step size underflows.
class DormandPrince {
public:
    explicit DormandPrince(OdeOptions opts = {}) : opts_(opts) {}

    OdeStats integrate(const OdeRhs& rhs, double t0, const Vector& y0, double t_end,
                       const StepObserver& observer = {}) const;

private:
    double initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0, double span) const;
    OdeOptions opts_;
};

}  // namespace hamdesc
