#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hamdesc/analysis.hpp"
#include "hamdesc/integrators.hpp"
#include "hamdesc/types.hpp"

namespace hamdesc::cli {

/// One trajectory row: iter,t,subopt,H,V,x_0..x_{d-1},p_0..p_{d-1}.
struct CsvRow {
    long iter = 0;
    double t = 0.0;
    double subopt = 0.0;
    double H = 0.0;
    double V = 0.0;  // NaN when no Lyapunov weight was requested
    Vector x;
    Vector p;
};

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

std::string trajectory_csv(const std::vector<CsvRow>& rows, int dim);
std::vector<CsvRow> rows_from_run(const RunResult& r, double epsilon);

/// Writes the file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

struct LogLinearFit {
    double rate = 0.0;  // -slope of log y per unit x
    double r2 = 0.0;
    long points = 0;
};

/// Least-squares fit of log(y) against x over the points with finite y > 0.
/// Returns nothing for fewer than three usable points.
std::optional<LogLinearFit> fit_log_linear(const std::vector<double>& x, const std::vector<double>& y);

/// Fit of log suboptimality over the last half of the recorded iterations.
std::optional<LogLinearFit> fit_run_tail(const RunResult& r);

/// R^2 threshold below which a fitted rate is not reported.
inline constexpr double kRateR2Threshold = 0.95;

nlohmann::json fit_json(const std::optional<LogLinearFit>& fit);
nlohmann::json bundle_json(const ConstantsBundle& b, double gamma);
nlohmann::json certificate_json(const GrowthCertificate& c);
nlohmann::json kinetic_json(const KineticEnergy& K);

/// JSON number, or null for NaN and infinities.
nlohmann::json number_or_null(double v);

}  // namespace hamdesc::cli
