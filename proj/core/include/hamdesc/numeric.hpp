#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace hamdesc {

struct RootOptions {
    double bisect_rel_width = 1e-8;
    double abs_tol = 1e-12;
    int max_bisections = 400;
    int max_newton = 60;
};

/// Solve g(t) = target for a strictly increasing g on [lo, hi], where
/// g(lo) <= target <= g(hi). Bisection down to bisect_rel_width, then
/// Newton polish kept inside the bracket.
double solve_increasing(const std::function<double(double)>& g,
                        const std::function<double(double)>& dg,
                        double target, double lo, double hi,
                        const RootOptions& opt = {});

/// Golden-section maximization of a unimodal function on [lo, hi].
/// Returns the argmax; `value` receives the maximum when non-null.
double golden_max(const std::function<double(double)>& h, double lo, double hi,
                  double tol = 1e-12, double* value = nullptr);

/// n logarithmically spaced points from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, int n);

/// Supremum of h over a log grid on [lo, hi], refined by golden section
/// around the best grid point.
double sup_log_grid(const std::function<double(double)>& h, double lo, double hi, int n = 2001);

}  // namespace hamdesc
