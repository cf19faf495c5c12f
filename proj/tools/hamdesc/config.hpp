#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hamdesc/continuous.hpp"
#include "hamdesc/integrators.hpp"
#include "hamdesc/kinetic.hpp"
#include "hamdesc/objective.hpp"

namespace hamdesc::cli {

/// Invalid or inconsistent experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KineticSpec {
    enum class Kind { Power, Quadratic, Classical, Matched };
    Kind kind = Kind::Matched;
    PowerKinetic power;            // Kind::Power
    std::optional<Matrix> matrix;  // Kind::Quadratic
};

struct EpsilonSpec {
    enum class Kind { Value, Auto, InverseL0 };
    Kind kind = Kind::Auto;
    double value = 0.0;
};

struct MethodSpec {
    Method method = Method::Explicit1;
    std::string label;
    std::optional<EpsilonSpec> epsilon;  // falls back to the config-wide value
};

/// Starting point: an explicit vector, a constant fill, or a seeded
/// Gaussian draw.
struct PointSpec {
    enum class Kind { Vector, Fill, Random };
    Kind kind = Kind::Fill;
    hamdesc::Vector vector;
    double value = 0.0;  // fill value or Gaussian scale
};

struct CompareSpec {
    std::vector<int> dims;
    double tolerance = 1e-6;
};

struct ExperimentConfig {
    std::string objective;
    ObjectiveParams params;
    bool certified = true;  // false drops the builtin's growth certificate
    KineticSpec kinetic;
    std::vector<MethodSpec> methods;
    EpsilonSpec epsilon;
    double gamma = 0.5;
    PointSpec x0{PointSpec::Kind::Fill, {}, 1.0};
    PointSpec p0;
    StopCriteria stop;
    RunOptions run_options;
    OdeConfig ode;
    CompareSpec compare;
    std::string out_dir = "hamdesc_out";
    std::string prefix = "run";
    std::uint64_t seed = 0;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Objective, kinetic and start point resolved for one dimension.
struct Problem {
    ObjectiveSpec f;
    KineticEnergy K;
    std::optional<PowerKinetic> power;  // set when K is a PowerKinetic
    Vector x0;
    Vector p0;
};

/// Builds the problem; dim overrides the objective's "d" parameter.
Problem build_problem(const ExperimentConfig& cfg, std::optional<int> dim = std::nullopt);

/// Resolves "auto" (0.9 x step bound) and "inverse_l0" step sizes.
double resolve_epsilon(const ExperimentConfig& cfg, const MethodSpec& m, const Problem& prob);

}  // namespace hamdesc::cli
