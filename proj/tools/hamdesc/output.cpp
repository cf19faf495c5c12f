#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "hamdesc/errors.hpp"

namespace hamdesc::cli {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trajectory_csv(const std::vector<CsvRow>& rows, int dim) {
    std::ostringstream out;
    out << "iter,t,subopt,H,V";
    for (int i = 0; i < dim; ++i) out << ",x_" << i;
    for (int i = 0; i < dim; ++i) out << ",p_" << i;
    out << '\n';
    for (const auto& r : rows) {
        out << r.iter << ',' << format_double(r.t) << ',' << format_double(r.subopt) << ',' << format_double(r.H)
            << ',' << format_double(r.V);
        for (int i = 0; i < dim; ++i) out << ',' << format_double(r.x[i]);
        for (int i = 0; i < dim; ++i) out << ',' << format_double(r.p[i]);
        out << '\n';
    }
    return out.str();
}

std::vector<CsvRow> rows_from_run(const RunResult& r, double epsilon) {
    std::vector<CsvRow> rows;
    rows.reserve(r.records.size());
    for (const auto& rec : r.records) {
        rows.push_back({rec.iter, static_cast<double>(rec.iter) * epsilon, rec.subopt, rec.H,
                        rec.V.value_or(std::numeric_limits<double>::quiet_NaN()), rec.x, rec.p});
    }
    return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::optional<LogLinearFit> fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (std::isfinite(y[i]) && y[i] > 0.0) {
            xs.push_back(x[i]);
            ys.push_back(std::log(y[i]));
        }
    }
    if (xs.size() < 3) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    LogLinearFit f;
    f.rate = -sxy / sxx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    f.points = static_cast<long>(xs.size());
    return f;
}

std::optional<LogLinearFit> fit_run_tail(const RunResult& r) {
    std::vector<double> it, s;
    const long half = r.iterations / 2;
    for (const auto& rec : r.records) {
        if (rec.iter >= half) {
            it.push_back(static_cast<double>(rec.iter));
            s.push_back(rec.subopt);
        }
    }
    return fit_log_linear(it, s);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const std::optional<LogLinearFit>& fit) {
    if (!fit) return json{{"rate", nullptr}, {"r2", nullptr}, {"points", 0}};
    json j{{"r2", number_or_null(fit->r2)}, {"points", fit->points}};
    j["rate"] = fit->r2 >= kRateR2Threshold ? number_or_null(fit->rate) : json(nullptr);
    return j;
}

namespace {

json opt(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

}  // namespace

json bundle_json(const ConstantsBundle& b, double gamma) {
    json j{{"method", to_string(b.method)},
           {"alpha", {{"scale", b.alpha.scale()}, {"exponent", b.alpha.exponent()}}},
           {"alpha_star", opt(b.alpha_star)},
           {"C_alpha_gamma", number_or_null(b.C_alpha_gamma)},
           {"C_fK", opt(b.C_fK)},
           {"C_K", opt(b.C_K)},
           {"D_fK", opt(b.D_fK)},
           {"D_K", opt(b.D_K)},
           {"E_k", opt(b.E_k)},
           {"F_k", opt(b.F_k)}};
    try {
        const RateCertificate rc = rate_certificate(b, gamma);
        j["epsilon_max"] = number_or_null(rc.epsilon_max);
        j["epsilon_auto"] = number_or_null(0.9 * rc.epsilon_max);
        j["factor_form"] = rc.factor_form;
        j["beta_star"] = number_or_null(rc.beta_star);
        j["lambda_star"] = number_or_null(rc.lambda_star);
    } catch (const UnavailableError& e) {
        j["epsilon_max"] = nullptr;
        j["unavailable"] = e.what();
    }
    return j;
}

json certificate_json(const GrowthCertificate& c) {
    return json{{"b", number_or_null(c.b)},
                {"B", number_or_null(c.B)},
                {"mu", c.mu},
                {"L", c.L},
                {"norm_q", number_or_null(c.norm.q)},
                {"pairing", c.pairing == Pairing::Relativistic ? "relativistic" : "known_power"},
                {"L_f", opt(c.L_f)},
                {"D_f", opt(c.D_f)},
                {"N", opt(c.N)},
                {"sigma_power", opt(c.sigma_power)},
                {"D_f_smooth", opt(c.D_f_smooth)}};
}

json kinetic_json(const KineticEnergy& K) {
    if (const auto* pk = std::get_if<PowerKinetic>(&K)) {
        return json{{"kind", "power"}, {"a", pk->a}, {"A", pk->A}, {"q", number_or_null(pk->norm.q)}};
    }
    const Matrix& M = std::get<QuadraticKinetic>(K).metric();
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(row);
    }
    return json{{"kind", "quadratic"}, {"matrix", rows}};
}

}  // namespace hamdesc::cli
