#include "commands.hpp"

#include <cmath>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>

#include "config.hpp"
#include "output.hpp"

#include "hamdesc/analysis.hpp"
#include "hamdesc/continuous.hpp"
#include "hamdesc/errors.hpp"
#include "hamdesc/numeric.hpp"

namespace hamdesc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExperimentConfig load_with_overrides(const std::string& path, const GlobalOptions& g) {
    ExperimentConfig cfg = load_config(path);
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

void emit(const GlobalOptions& g, const json& j) {
    if (!g.quiet) std::cout << j.dump(2) << '\n';
}

fs::path out_file(const ExperimentConfig& cfg, const std::string& suffix) {
    return fs::path(cfg.out_dir) / (cfg.prefix + "_" + suffix);
}

/// Bundle echo for a convex objective with a certificate; null otherwise.
json bundle_echo(const Problem& prob, Method m, double gamma) {
    if (!prob.f.certificate || !prob.power || !prob.f.convex || !(gamma < 1.0)) return nullptr;
    if (m != Method::Implicit && m != Method::Explicit1 && m != Method::Explicit2) return nullptr;
    try {
        ConstantsBundle b = constants_for(*prob.f.certificate, *prob.power, gamma, m);
        const double H0 = suboptimality(prob.f, prob.x0) + kinetic_eval(prob.K, prob.p0);
        if (std::isfinite(H0)) b = with_initial_energy(b, H0);
        return bundle_json(b, gamma);
    } catch (const UnavailableError& e) {
        return json{{"method", to_string(m)}, {"unavailable", e.what()}};
    } catch (const DomainError& e) {
        return json{{"method", to_string(m)}, {"unavailable", e.what()}};
    }
}

struct Job {
    MethodSpec method;
    Problem prob;
    double epsilon = 0.0;
    int dim = 0;
};

struct JobResult {
    RunResult run;
    std::optional<LogLinearFit> fit;
};

std::vector<Job> plan_jobs(const ExperimentConfig& cfg, const std::vector<std::optional<int>>& dims) {
    if (cfg.methods.empty()) throw ConfigError("config lists no methods");
    std::vector<Job> jobs;
    for (const auto& d : dims) {
        const Problem prob = build_problem(cfg, d);
        for (const auto& m : cfg.methods) {
            jobs.push_back({m, prob, resolve_epsilon(cfg, m, prob), prob.f.dim});
        }
    }
    return jobs;
}

/// Runs every job concurrently; results come back in job order, so output
/// written afterwards by the caller is independent of scheduling.
std::vector<JobResult> execute(const ExperimentConfig& cfg, const std::vector<Job>& jobs, const StopCriteria& stop) {
    std::vector<std::future<JobResult>> futures;
    futures.reserve(jobs.size());
    for (const auto& job : jobs) {
        futures.push_back(std::async(std::launch::async, [&cfg, &job, stop] {
            IntegratorConfig ic;
            ic.method = job.method.method;
            ic.epsilon = job.epsilon;
            ic.gamma = cfg.gamma;
            ic.max_iters = stop.max_iters;
            JobResult r;
            r.run = run(ic, job.prob.K, job.prob.f, job.prob.x0, job.prob.p0, stop, cfg.run_options);
            r.fit = fit_run_tail(r.run);
            return r;
        }));
    }
    std::vector<JobResult> out;
    out.reserve(futures.size());
    std::exception_ptr first;
    for (auto& f : futures) {
        try {
            out.push_back(f.get());
        } catch (...) {
            if (!first) first = std::current_exception();
        }
    }
    if (first) std::rethrow_exception(first);
    return out;
}

json method_summary(const ExperimentConfig& cfg, const Job& job, const JobResult& r) {
    return json{{"label", job.method.label},
                {"method", to_string(job.method.method)},
                {"dim", job.dim},
                {"epsilon", job.epsilon},
                {"gamma", cfg.gamma},
                {"iterations", r.run.iterations},
                {"stop_reason", r.run.stop_reason},
                {"final_subopt", number_or_null(r.run.final.subopt)},
                {"final_H", number_or_null(r.run.final.H)},
                {"h_monotone", r.run.h_monotone},
                {"max_h_increase", number_or_null(r.run.max_h_increase)},
                {"fit", fit_json(r.fit)},
                {"bundle", bundle_echo(job.prob, job.method.method, cfg.gamma)}};
}

json header_json(const ExperimentConfig& cfg, const Problem& prob) {
    json j{{"objective", cfg.objective}, {"dim", prob.f.dim}, {"kinetic", kinetic_json(prob.K)},
           {"gamma", cfg.gamma}, {"seed", cfg.seed}};
    j["certificate"] = prob.f.certificate ? certificate_json(*prob.f.certificate) : json(nullptr);
    return j;
}

}  // namespace

int cmd_run(const std::string& config_path, const GlobalOptions& g) {
    const ExperimentConfig cfg = load_with_overrides(config_path, g);
    const std::vector<Job> jobs = plan_jobs(cfg, {std::nullopt});
    const std::vector<JobResult> results = execute(cfg, jobs, cfg.stop);

    json summary = header_json(cfg, jobs.front().prob);
    summary["methods"] = json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Job& job = jobs[i];
        write_text(out_file(cfg, job.method.label + ".csv"),
                   trajectory_csv(rows_from_run(results[i].run, job.epsilon), job.dim));
        summary["methods"].push_back(method_summary(cfg, job, results[i]));
    }
    write_text(out_file(cfg, "summary.json"), summary.dump(2) + "\n");
    emit(g, summary);
    return kOk;
}

int cmd_rates(const std::string& config_path, const GlobalOptions& g) {
    const ExperimentConfig cfg = load_with_overrides(config_path, g);
    const Problem prob = build_problem(cfg);
    if (!prob.f.certificate) throw ConfigError("objective '" + cfg.objective + "' has no growth certificate");
    if (!prob.power) throw ConfigError("rates need a power kinetic energy");
    if (!(cfg.gamma < 1.0)) throw ConfigError("rates need gamma < 1");

    std::vector<Method> methods;
    for (const auto& m : cfg.methods) methods.push_back(m.method);
    if (methods.empty()) methods = {Method::Implicit, Method::Explicit1, Method::Explicit2};

    const double H0 = suboptimality(prob.f, prob.x0) + kinetic_eval(prob.K, prob.p0);
    json out = header_json(cfg, prob);
    out["H0"] = number_or_null(H0);
    out["methods"] = json::array();
    for (Method m : methods) {
        if (m == Method::GradientDescent || m == Method::ClassicalMomentum) {
            out["methods"].push_back({{"method", to_string(m)}, {"unavailable", "no certified bundle"}});
            continue;
        }
        if (!prob.f.convex) {
            json nc{{"method", to_string(m)}};
            try {
                const NonconvexConstants c = nonconvex_constants(*prob.f.certificate, *prob.power);
                nc["nonconvex"] = {{"b", c.b}, {"D_f", c.D_f}, {"D_K", c.D_K}};
                if (m == Method::Explicit1) {
                    const double bound = step_bound_nonconvex(c, cfg.gamma);
                    nc["epsilon_max"] = bound;
                    nc["epsilon_auto"] = 0.9 * bound;
                } else {
                    nc["unavailable"] = "non-convex objectives are certified for explicit1 only";
                }
            } catch (const UnavailableError& e) {
                nc["unavailable"] = e.what();
            }
            out["methods"].push_back(nc);
            continue;
        }
        json entry = bundle_echo(prob, m, cfg.gamma);
        if (entry.contains("epsilon_auto") && entry["epsilon_auto"].is_number() && std::isfinite(H0)) {
            const double eps = entry["epsilon_auto"].get<double>();
            ConstantsBundle b = with_initial_energy(constants_for(*prob.f.certificate, *prob.power, cfg.gamma, m), H0);
            const std::vector<double> W = w_recursion(m, H0, b, cfg.gamma, eps, 1000);
            entry["w_envelope"] = {{"W0", H0},
                                   {"epsilon", eps},
                                   {"W_10", number_or_null(W[10])},
                                   {"W_100", number_or_null(W[100])},
                                   {"W_1000", number_or_null(W[1000])}};
        }
        out["methods"].push_back(entry);
    }
    write_text(out_file(cfg, "rates.json"), out.dump(2) + "\n");
    emit(g, out);
    return kOk;
}

int cmd_ode(const std::string& config_path, const GlobalOptions& g) {
    const ExperimentConfig cfg = load_with_overrides(config_path, g);
    const Problem prob = build_problem(cfg);
    const ContinuousTrajectory tr = simulate(prob.K, prob.f, cfg.gamma, {prob.x0, prob.p0}, cfg.ode);

    std::vector<CsvRow> rows;
    rows.reserve(tr.t.size());
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const State s{tr.x[i], tr.p[i]};
        const double H = hamiltonian(prob.K, prob.f, s);
        double V = kNaN;
        if (cfg.run_options.beta && prob.f.x_star) V = H + *cfg.run_options.beta * (s.x - *prob.f.x_star).dot(s.p);
        rows.push_back({static_cast<long>(i), tr.t[i], tr.subopt[i], H, V, s.x, s.p});
    }
    write_text(out_file(cfg, "ode.csv"), trajectory_csv(rows, prob.f.dim));

    json out = header_json(cfg, prob);
    out["t_end"] = cfg.ode.t_end;
    out["steps"] = tr.steps;
    out["samples"] = tr.t.size();
    out["h_monotone"] = tr.h_monotone;
    out["max_h_increase"] = number_or_null(tr.max_h_increase);
    out["final_subopt"] = number_or_null(tr.subopt.back());
    write_text(out_file(cfg, "ode_summary.json"), out.dump(2) + "\n");
    emit(g, out);
    return kOk;
}

namespace {

std::string lower_csv(const std::vector<double>& theta, const std::vector<LowerBoundTrajectory>& paths) {
    std::ostringstream s;
    s << "theta,t,x,p\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
        for (std::size_t i = 0; i < paths[k].t.size(); ++i) {
            s << format_double(theta[k]) << ',' << format_double(paths[k].t[i]) << ',' << format_double(paths[k].x[i])
              << ',' << format_double(paths[k].p[i]) << '\n';
        }
    }
    return s.str();
}

}  // namespace

int cmd_lower(const LowerArgs& args, const GlobalOptions& g) {
    const LowerBoundProblem prob{args.a, args.b, args.gamma};
    try {
        prob.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const fs::path dir = g.out_dir.value_or("hamdesc_out");
    json out{{"mode", args.mode}, {"a", args.a}, {"b", args.b}, {"gamma", args.gamma}};

    if (args.mode == "generic") {
        if (!prob.sublinear_regime()) {
            throw ConfigError("1/a + 1/b >= 1: this is the linear regime (the dynamics converge linearly in "
                              "continuous time), so there is no sublinear exponent to fit");
        }
        const double t_lo = 1e2;
        if (!(args.t_end > t_lo)) throw ConfigError("generic mode needs t_end > 100");
        LowerBoundOptions opts;
        opts.sample_times = log_space(t_lo, args.t_end, 400);
        const LowerBoundTrajectory tr = simulate_lower(prob, 1.0, 0.0, args.t_end, opts);
        std::vector<double> ax;
        for (double x : tr.x) ax.push_back(std::abs(x));
        const RateFit fit = fit_rate(tr.t, ax, t_lo, args.t_end);
        out["predicted_exponent"] = prob.predicted_exponent();
        out["fitted_exponent"] = fit.power;
        out["fit_kind"] = to_string(fit.kind);
        out["r2"] = fit.fit_r2;
        out["window"] = {t_lo, args.t_end};
        write_text(dir / "lower_generic.csv", lower_csv({1.0}, {tr}));
    } else if (args.mode == "eta") {
        if (!prob.sublinear_regime()) throw ConfigError("eta mode needs 1/a + 1/b < 1");
        const EtaEstimate est = shoot_eta(prob, 0.05, 5.0, 1e-6);
        const auto [t0, t1] = eta_path_window(prob, est, 100.0);
        LowerBoundOptions opts;
        for (int i = 0; i <= 2000; ++i) opts.sample_times.push_back(t0 + (t1 - t0) * i / 2000.0);
        const LowerBoundTrajectory tr = simulate_lower(prob, est.eta, 0.0, t1, opts);
        std::vector<double> ax;
        for (double x : tr.x) ax.push_back(std::abs(x));
        const RateFit fit = fit_rate(tr.t, ax, t0, t1);
        out["eta"] = est.eta;
        out["bracket"] = {est.lo, est.hi};
        out["bisections"] = est.bisections;
        out["window"] = {t0, t1};
        out["predicted_rate"] = prob.fast_rate();
        out["fitted_rate"] = fit.rate;
        out["r2"] = fit.r2_linear;
        write_text(dir / "lower_eta.csv", lower_csv({est.eta}, {tr}));
    } else if (args.mode == "sweep") {
        std::vector<double> theta;
        for (int i = 1; i <= 12; ++i) theta.push_back(0.25 * i);
        if (prob.sublinear_regime()) {
            const EtaEstimate est = shoot_eta(prob, 0.05, 5.0, 1e-6);
            theta.push_back(est.eta);
            theta.push_back(-est.eta);
            out["eta"] = est.eta;
        }
        const double horizon = std::min(args.t_end, 20.0);
        LowerBoundOptions opts;
        for (int i = 0; i <= 400; ++i) opts.sample_times.push_back(horizon * i / 400.0);
        std::vector<std::future<LowerBoundTrajectory>> futures;
        for (double th : theta) {
            futures.push_back(std::async(std::launch::async, [&prob, th, horizon, &opts] {
                return simulate_lower(prob, th, 0.0, horizon, opts);
            }));
        }
        std::vector<LowerBoundTrajectory> paths;
        for (auto& f : futures) paths.push_back(f.get());
        out["thetas"] = theta;
        out["horizon"] = horizon;
        write_text(dir / "lower_sweep.csv", lower_csv(theta, paths));
    } else {
        throw ConfigError("unknown lower mode '" + args.mode + "' (expected generic, eta or sweep)");
    }
    write_text(dir / ("lower_" + args.mode + ".json"), out.dump(2) + "\n");
    emit(g, out);
    return kOk;
}

int cmd_compare(const std::string& config_path, const GlobalOptions& g) {
    const ExperimentConfig cfg = load_with_overrides(config_path, g);
    if (cfg.compare.dims.empty()) return cmd_run(config_path, g);

    std::vector<std::optional<int>> dims(cfg.compare.dims.begin(), cfg.compare.dims.end());
    const std::vector<Job> jobs = plan_jobs(cfg, dims);
    StopCriteria stop = cfg.stop;
    if (!stop.subopt_tol) stop.subopt_tol = cfg.compare.tolerance;
    const std::vector<JobResult> results = execute(cfg, jobs, stop);

    std::ostringstream table;
    table << "label,method,d,epsilon,iterations,reached,final_subopt\n";
    json out{{"objective", cfg.objective}, {"gamma", cfg.gamma}, {"tolerance", *stop.subopt_tol}};
    out["runs"] = json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Job& job = jobs[i];
        const RunResult& r = results[i].run;
        const bool reached = r.stop_reason == "subopt_tol";
        table << job.method.label << ',' << to_string(job.method.method) << ',' << job.dim << ','
              << format_double(job.epsilon) << ',' << r.iterations << ',' << (reached ? 1 : 0) << ','
              << format_double(r.final.subopt) << '\n';
        json s = method_summary(cfg, job, results[i]);
        s["reached"] = reached;
        out["runs"].push_back(s);
    }
    write_text(out_file(cfg, "compare.csv"), table.str());
    write_text(out_file(cfg, "compare.json"), out.dump(2) + "\n");
    if (!g.quiet) std::cout << table.str();
    return kOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "hamdesc: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const nlohmann::json::exception& e) {
        err << "hamdesc: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DomainError& e) {
        err << "hamdesc: invalid parameter: " << e.what() << '\n';
        return kConfigError;
    } catch (const UnavailableError& e) {
        err << "hamdesc: unavailable: " << e.what() << '\n';
        return kConfigError;
    } catch (const SubsolverError& e) {
        err << "hamdesc: solver failure: " << e.what() << '\n';
        return kSolverError;
    } catch (const StiffnessError& e) {
        err << "hamdesc: solver failure: " << e.what() << '\n';
        return kSolverError;
    } catch (const ClassificationError& e) {
        err << "hamdesc: solver failure: " << e.what() << '\n';
        return kSolverError;
    } catch (const RangeError& e) {
        err << "hamdesc: solver failure: " << e.what() << '\n';
        return kSolverError;
    } catch (const std::exception& e) {
        err << "hamdesc: " << e.what() << '\n';
        return kSolverError;
    }
}

}  // namespace hamdesc::cli
