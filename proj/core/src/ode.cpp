#include "hamdesc/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hamdesc/errors.hpp"

namespace hamdesc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension coefficients.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI controller constants.
constexpr double kSafe = 0.9, kBeta = 0.04, kExpo1 = 0.2 - kBeta * 0.75;
constexpr double kFacMin = 0.2, kFacMax = 10.0;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double atol, double rtol) {
    const Vector sc = (atol + rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
    return std::sqrt((err.cwiseQuotient(sc)).squaredNorm() / static_cast<double>(err.size()));
}

}  // namespace

Vector DenseStep::at(double t) const {
    const double h = t1 - t0;
    if (h == 0.0) return y1;
    const double th = std::clamp((t - t0) / h, 0.0, 1.0);
    const double th1 = 1.0 - th;
    return r_[0] + th * (r_[1] + th1 * (r_[2] + th * (r_[3] + th1 * r_[4])));
}

double DormandPrince::initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                                   double span) const {
    const Vector sc = (opts_.abs_tol + opts_.rel_tol * y0.cwiseAbs().array()).matrix();
    const double n = static_cast<double>(y0.size());
    const double dnf = std::sqrt(f0.cwiseQuotient(sc).squaredNorm() / n);
    const double dny = std::sqrt(y0.cwiseQuotient(sc).squaredNorm() / n);
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min({h, opts_.max_step, span});
    const Vector y1 = y0 + h * f0;
    Vector f1(y0.size());
    rhs(t0 + h, y1, f1);
    const double der2 = std::sqrt((f1 - f0).cwiseQuotient(sc).squaredNorm() / n) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, opts_.max_step, span});
}

OdeStats DormandPrince::integrate(const OdeRhs& rhs, double t0, const Vector& y0, double t_end,
                                  const StepObserver& observer) const {
    if (!(opts_.rel_tol > 0.0) || !(opts_.abs_tol > 0.0)) throw DomainError("ODE tolerances must be positive");
    if (t_end < t0) throw DomainError("ODE integration requires t_end >= t0");
    OdeStats st;
    st.t = t0;
    st.y = y0;
    if (t_end == t0) return st;

    const auto n = y0.size();
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ys(n), y1(n), err(n);
    rhs(t0, y0, k1);
    st.evaluations = 1;

    double t = t0;
    Vector y = y0;
    double h = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(rhs, t0, y0, k1, t_end - t0);
    ++st.evaluations;
    double facold = 1e-4;
    bool last_rejected = false;
    DenseStep ds;

    while (t < t_end) {
        if (st.accepted + st.rejected >= opts_.max_steps) {
            throw StiffnessError("ODE step budget exhausted at t = " + std::to_string(t));
        }
        h = std::min(h, opts_.max_step);
        if (t + 1.01 * h >= t_end) h = t_end - t;
        if (h <= 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            throw StiffnessError("ODE step size underflow at t = " + std::to_string(t));
        }

        ys = y + h * a21 * k1;
        rhs(t + c2 * h, ys, k2);
        ys = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ys, k3);
        ys = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ys, k4);
        ys = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ys, k5);
        ys = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ys, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, y1, k7);
        st.evaluations += 6;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double e = error_norm(err, y, y1, opts_.abs_tol, opts_.rel_tol);
        if (!std::isfinite(e) || !y1.allFinite()) e = 1e10;
        const double fac11 = std::pow(e, kExpo1);
        if (e <= 1.0 && opts_.accept_step && !opts_.accept_step(y, y1)) {
            h *= 0.25;
            ++st.rejected;
            last_rejected = true;
            continue;
        }

        if (e <= 1.0) {
            double fac = fac11 / std::pow(facold, kBeta);
            fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            facold = std::max(e, 1e-4);

            ds.t0 = t;
            ds.t1 = t + h;
            ds.y0 = y;
            ds.y1 = y1;
            ds.dy1 = k7;
            const Vector ydiff = y1 - y;
            const Vector bspl = h * k1 - ydiff;
            ds.r_[0] = y;
            ds.r_[1] = ydiff;
            ds.r_[2] = bspl;
            ds.r_[3] = ydiff - h * k7 - bspl;
            ds.r_[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t = (h == t_end - ds.t0) ? t_end : t + h;
            y = y1;
            k1 = k7;
            ++st.accepted;
            last_rejected = false;
            h = hnew;
            if (observer && !observer(ds)) {
                st.stopped = true;
                break;
            }
        } else {
            h = h / std::min(1.0 / kFacMin, fac11 / kSafe);
            ++st.rejected;
            last_rejected = true;
        }
    }
    st.t = t;
    st.y = y;
    return st;
}

}  // namespace hamdesc
