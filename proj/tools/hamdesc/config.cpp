#include "config.hpp"

#include <fstream>
#include <random>
#include <set>

#include "hamdesc/analysis.hpp"
#include "hamdesc/errors.hpp"

namespace hamdesc::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

Vector vector_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

Matrix matrix_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    Matrix M(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vector row = vector_from(j[static_cast<std::size_t>(r)], what);
        if (row.size() != n) throw ConfigError(what + " must be square");
        M.row(r) = row.transpose();
    }
    return M;
}

EpsilonSpec epsilon_from(const json& j) {
    if (j.is_number()) {
        const double v = j.get<double>();
        if (!(v > 0.0)) throw ConfigError("epsilon must be positive");
        return {EpsilonSpec::Kind::Value, v};
    }
    if (j == "auto") return {EpsilonSpec::Kind::Auto, 0.0};
    if (j == "inverse_l0") return {EpsilonSpec::Kind::InverseL0, 0.0};
    throw ConfigError("epsilon must be a number, \"auto\" or \"inverse_l0\"");
}

PointSpec point_from(const json& j, const std::string& what) {
    if (j.is_number()) return {PointSpec::Kind::Fill, {}, j.get<double>()};
    if (j.is_array()) return {PointSpec::Kind::Vector, vector_from(j, what), 0.0};
    if (j.is_object() && j.contains("random")) {
        reject_unknown(j, {"random"}, what);
        return {PointSpec::Kind::Random, {}, number(j["random"], what + ".random")};
    }
    throw ConfigError(what + " must be a number, an array or {\"random\": scale}");
}

KineticSpec kinetic_from(const json& j) {
    KineticSpec k;
    if (j.is_string()) {
        if (j == "matched") return k;
        if (j == "classical") { k.kind = KineticSpec::Kind::Classical; return k; }
        if (j == "relativistic") {
            k.kind = KineticSpec::Kind::Power;
            k.power = PowerKinetic::relativistic();
            return k;
        }
        throw ConfigError("kinetic must be \"matched\", \"classical\", \"relativistic\" or an object");
    }
    if (!j.is_object()) throw ConfigError("kinetic must be a string or an object");
    if (j.contains("quadratic")) {
        reject_unknown(j, {"quadratic"}, "kinetic");
        k.kind = KineticSpec::Kind::Quadratic;
        k.matrix = matrix_from(j["quadratic"], "kinetic.quadratic");
        return k;
    }
    if (j.contains("classical")) {
        reject_unknown(j, {"classical"}, "kinetic");
        k.kind = KineticSpec::Kind::Classical;
        return k;
    }
    reject_unknown(j, {"a", "A", "q"}, "kinetic");
    k.kind = KineticSpec::Kind::Power;
    k.power.a = number(j.value("a", json(2.0)), "kinetic.a");
    k.power.A = number(j.value("A", json(k.power.a)), "kinetic.A");
    k.power.norm.q = number(j.value("q", json(2.0)), "kinetic.q");
    try {
        k.power.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("kinetic: ") + e.what());
    }
    return k;
}

MethodSpec method_from(const json& j) {
    MethodSpec m;
    const json* name = &j;
    if (j.is_object()) {
        reject_unknown(j, {"method", "label", "epsilon"}, "methods[]");
        if (!j.contains("method")) throw ConfigError("methods[] entry needs a 'method'");
        name = &j["method"];
        if (j.contains("label")) m.label = j["label"].get<std::string>();
        if (j.contains("epsilon")) m.epsilon = epsilon_from(j["epsilon"]);
    }
    if (!name->is_string()) throw ConfigError("method name must be a string");
    try {
        m.method = method_from_string(name->get<std::string>());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (m.label.empty()) m.label = to_string(m.method);
    return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"objective", "kinetic", "methods", "method", "epsilon", "gamma", "x0", "p0", "stop",
                       "record_stride", "beta", "ode", "compare", "output", "seed"},
                   "config");
    ExperimentConfig c;

    if (!j.contains("objective")) throw ConfigError("config needs an 'objective'");
    const json& obj = j["objective"];
    if (obj.is_string()) {
        c.objective = obj.get<std::string>();
    } else if (obj.is_object()) {
        reject_unknown(obj, {"name", "params", "matrix", "certified"}, "objective");
        if (!obj.contains("name")) throw ConfigError("objective needs a 'name'");
        c.objective = obj["name"].get<std::string>();
        if (obj.contains("params")) {
            if (!obj["params"].is_object()) throw ConfigError("objective.params must be an object");
            for (const auto& [key, v] : obj["params"].items()) {
                c.params.scalars[key] = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : number(v, "objective.params." + key);
            }
        }
        if (obj.contains("matrix")) c.params.matrix = matrix_from(obj["matrix"], "objective.matrix");
        if (obj.contains("certified")) c.certified = obj["certified"].get<bool>();
    } else {
        throw ConfigError("objective must be a name or an object");
    }
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), c.objective) == names.end()) {
        throw ConfigError("unknown objective '" + c.objective + "'");
    }

    if (j.contains("kinetic")) c.kinetic = kinetic_from(j["kinetic"]);

    if (j.contains("methods") && j.contains("method")) throw ConfigError("give either 'method' or 'methods'");
    if (j.contains("methods")) {
        if (!j["methods"].is_array()) throw ConfigError("methods must be an array");
        for (const auto& m : j["methods"]) c.methods.push_back(method_from(m));
    } else if (j.contains("method")) {
        c.methods.push_back(method_from(j["method"]));
    }
    for (std::size_t a = 0; a < c.methods.size(); ++a) {
        for (std::size_t b = a + 1; b < c.methods.size(); ++b) {
            if (c.methods[a].label == c.methods[b].label) {
                throw ConfigError("duplicate method label '" + c.methods[a].label + "'");
            }
        }
    }

    if (j.contains("epsilon")) c.epsilon = epsilon_from(j["epsilon"]);
    if (j.contains("gamma")) c.gamma = number(j["gamma"], "gamma");
    if (!(c.gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (j.contains("x0")) c.x0 = point_from(j["x0"], "x0");
    if (j.contains("p0")) c.p0 = point_from(j["p0"], "p0");

    if (j.contains("stop")) {
        const json& s = j["stop"];
        reject_unknown(s, {"max_iters", "subopt_tol", "grad_tol"}, "stop");
        if (s.contains("max_iters")) c.stop.max_iters = s["max_iters"].get<long>();
        if (s.contains("subopt_tol")) c.stop.subopt_tol = number(s["subopt_tol"], "stop.subopt_tol");
        if (s.contains("grad_tol")) c.stop.grad_tol = number(s["grad_tol"], "stop.grad_tol");
        if (c.stop.max_iters < 0) throw ConfigError("stop.max_iters must be nonnegative");
    }
    if (j.contains("record_stride")) c.run_options.record_stride = j["record_stride"].get<long>();
    if (c.run_options.record_stride < 1) throw ConfigError("record_stride must be >= 1");
    if (j.contains("beta")) c.run_options.beta = number(j["beta"], "beta");

    if (j.contains("ode")) {
        const json& o = j["ode"];
        reject_unknown(o, {"t_end", "rel_tol", "abs_tol", "max_step", "max_steps", "record_stride", "sample_dt"}, "ode");
        if (o.contains("t_end")) c.ode.t_end = number(o["t_end"], "ode.t_end");
        if (o.contains("rel_tol")) c.ode.rel_tol = number(o["rel_tol"], "ode.rel_tol");
        if (o.contains("abs_tol")) c.ode.abs_tol = number(o["abs_tol"], "ode.abs_tol");
        if (o.contains("max_step")) c.ode.max_step = number(o["max_step"], "ode.max_step");
        if (o.contains("record_stride")) c.ode.record_stride = o["record_stride"].get<long>();
        if (o.contains("sample_dt")) c.ode.sample_dt = number(o["sample_dt"], "ode.sample_dt");
        if (o.contains("max_steps")) c.ode.max_steps = o["max_steps"].get<long>();
        try {
            c.ode.validate();
        } catch (const DomainError& e) {
            throw ConfigError(std::string("ode: ") + e.what());
        }
    }

    if (j.contains("compare")) {
        const json& cm = j["compare"];
        reject_unknown(cm, {"dims", "tolerance"}, "compare");
        if (cm.contains("dims")) {
            for (const auto& d : cm["dims"]) {
                if (!d.is_number_integer() || d.get<int>() < 1) throw ConfigError("compare.dims must be positive integers");
                c.compare.dims.push_back(d.get<int>());
            }
        }
        if (cm.contains("tolerance")) c.compare.tolerance = number(cm["tolerance"], "compare.tolerance");
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, {"dir", "prefix"}, "output");
        if (o.contains("dir")) c.out_dir = o["dir"].get<std::string>();
        if (o.contains("prefix")) c.prefix = o["prefix"].get<std::string>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
}

namespace {

Vector resolve_point(const PointSpec& s, int dim, std::mt19937_64& rng, const std::string& what) {
    switch (s.kind) {
        case PointSpec::Kind::Vector:
            if (s.vector.size() != dim) {
                throw ConfigError(what + " has " + std::to_string(s.vector.size()) + " entries but the objective has dimension " +
                                  std::to_string(dim));
            }
            return s.vector;
        case PointSpec::Kind::Fill:
            return Vector::Constant(dim, s.value);
        case PointSpec::Kind::Random: {
            std::normal_distribution<double> n(0.0, s.value);
            Vector v(dim);
            for (int i = 0; i < dim; ++i) v[i] = n(rng);
            return v;
        }
    }
    return {};
}

}  // namespace

Problem build_problem(const ExperimentConfig& cfg, std::optional<int> dim) {
    ObjectiveParams params = cfg.params;
    if (dim) {
        if (params.matrix && params.matrix->rows() != *dim) {
            throw ConfigError("objective matrix is " + std::to_string(params.matrix->rows()) + "x" +
                              std::to_string(params.matrix->rows()) + " but dimension " + std::to_string(*dim) +
                              " was requested");
        }
        params.scalars["d"] = *dim;
    }
    Problem prob;
    try {
        prob.f = builtin(cfg.objective, params);
    } catch (const DomainError& e) {
        throw ConfigError("objective '" + cfg.objective + "': " + e.what());
    }
    if (!cfg.certified) prob.f.certificate.reset();
    if (dim && prob.f.dim != *dim) {
        throw ConfigError("objective '" + cfg.objective + "' has fixed dimension " + std::to_string(prob.f.dim) +
                          ", cannot sweep to " + std::to_string(*dim));
    }

    switch (cfg.kinetic.kind) {
        case KineticSpec::Kind::Matched:
            if (!prob.f.certificate) throw ConfigError("matched kinetic needs an objective with a growth certificate");
            prob.power = matched_kinetic(*prob.f.certificate);
            break;
        case KineticSpec::Kind::Classical:
            prob.power = PowerKinetic::power(2.0);
            break;
        case KineticSpec::Kind::Power:
            prob.power = cfg.kinetic.power;
            break;
        case KineticSpec::Kind::Quadratic:
            if (cfg.kinetic.matrix->rows() != prob.f.dim) {
                throw ConfigError("kinetic matrix dimension " + std::to_string(cfg.kinetic.matrix->rows()) +
                                  " does not match the objective dimension " + std::to_string(prob.f.dim));
            }
            try {
                prob.K = QuadraticKinetic(*cfg.kinetic.matrix);
            } catch (const DomainError& e) {
                throw ConfigError(std::string("kinetic.quadratic: ") + e.what());
            }
            break;
    }
    if (prob.power) prob.K = *prob.power;

    // One stream per dimension so sweeps stay reproducible run by run.
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(prob.f.dim));
    prob.x0 = resolve_point(cfg.x0, prob.f.dim, rng, "x0");
    prob.p0 = resolve_point(cfg.p0, prob.f.dim, rng, "p0");
    return prob;
}

double resolve_epsilon(const ExperimentConfig& cfg, const MethodSpec& m, const Problem& prob) {
    const EpsilonSpec e = m.epsilon.value_or(cfg.epsilon);
    switch (e.kind) {
        case EpsilonSpec::Kind::Value:
            return e.value;
        case EpsilonSpec::Kind::InverseL0: {
            const double L0 = local_smoothness(prob.f, prob.x0);
            if (!(L0 > 0.0)) throw ConfigError("inverse_l0 step needs a positive Hessian eigenvalue at x0");
            return 1.0 / L0;
        }
        case EpsilonSpec::Kind::Auto:
            break;
    }
    const std::string who = "auto epsilon for " + m.label;
    if (!prob.f.certificate) throw ConfigError(who + " needs an objective with a growth certificate");
    if (!prob.power) throw ConfigError(who + " needs a power kinetic energy");
    if (!(cfg.gamma < 1.0)) throw ConfigError(who + " needs gamma < 1");
    const GrowthCertificate& cert = *prob.f.certificate;
    try {
        switch (m.method) {
            case Method::GradientDescent:
                throw ConfigError(who + ": gradient descent has no certified step bound; give a value or inverse_l0");
            case Method::ClassicalMomentum:
                return 0.9 * step_bound(Method::Explicit1,
                                        constants_for(cert, PowerKinetic::power(2.0), cfg.gamma, Method::Explicit1),
                                        cfg.gamma);
            default:
                break;
        }
        if (!prob.f.convex) {
            if (m.method != Method::Explicit1) throw ConfigError(who + ": non-convex objectives are certified for explicit1 only");
            return 0.9 * step_bound_nonconvex(nonconvex_constants(cert, *prob.power), cfg.gamma);
        }
        return 0.9 * step_bound(m.method, constants_for(cert, *prob.power, cfg.gamma, m.method), cfg.gamma);
    } catch (const UnavailableError& ex) {
        throw ConfigError(who + ": " + ex.what());
    } catch (const DomainError& ex) {
        throw ConfigError(who + ": " + ex.what());
    }
}

}  // namespace hamdesc::cli
