#include "hamdesc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hamdesc {

double solve_increasing(const std::function<double(double)>& g,
                        const std::function<double(double)>& dg,
                        double target, double lo, double hi, const RootOptions& opt) {
    for (int i = 0; i < opt.max_bisections; ++i) {
        if (hi - lo <= opt.bisect_rel_width * hi) break;
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < target) lo = mid; else hi = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int i = 0; i < opt.max_newton; ++i) {
        const double r = g(t) - target;
        if (r == 0.0) return t;
        if (r < 0.0) lo = t; else hi = t;
        const double d = dg(t);
        double next = (d > 0.0 && std::isfinite(d)) ? t - r / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - t);
        t = next;
        if (step <= opt.abs_tol * 1e-3 || step <= 4.0 * std::numeric_limits<double>::epsilon() * t) break;
    }
    return t;
}

double golden_max(const std::function<double(double)>& h, double lo, double hi, double tol,
                  double* value) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double hc = h(c), hd = h(d);
    while (hi - lo > tol * std::max(1.0, std::abs(lo) + std::abs(hi))) {
        if (hc > hd) {
            hi = d;
            d = c;
            hd = hc;
            c = hi - invphi * (hi - lo);
            hc = h(c);
        } else {
            lo = c;
            c = d;
            hc = hd;
            d = lo + invphi * (hi - lo);
            hd = h(d);
        }
    }
    const double arg = 0.5 * (lo + hi);
    if (value) *value = h(arg);
    return arg;
}

std::vector<double> log_space(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (int i = 0; i < n; ++i) out[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

double sup_log_grid(const std::function<double(double)>& h, double lo, double hi, int n) {
    const auto grid = log_space(lo, hi, n);
    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = h(grid[i]);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const double l = std::log(grid[best == 0 ? 0 : best - 1]);
    const double r = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    if (r > l) {
        double refined = best_val;
        golden_max([&](double u) { return h(std::exp(u)); }, l, r, 1e-14, &refined);
        best_val = std::max(best_val, refined);
    }
    return best_val;
}

}  // namespace hamdesc
