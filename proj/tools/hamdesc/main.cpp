#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"

using namespace hamdesc::cli;

int main(int argc, char** argv) {
    CLI::App app{"Hamiltonian descent experiment runner"};
    app.require_subcommand(1);

    GlobalOptions g;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_flag("--quiet", g.quiet, "do not print summaries to standard output");

    std::string config;
    auto add_config_command = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        return sub;
    };
    auto* run = add_config_command("run", "run integrators and write trajectory CSVs plus a JSON summary");
    auto* rates = add_config_command("rates", "print constants bundles, step bounds and rate certificates");
    auto* ode = add_config_command("ode", "simulate the continuous dynamics");
    auto* compare = add_config_command("compare", "iterations-to-tolerance table across dimensions");

    LowerArgs lower_args;
    auto* lower = app.add_subcommand("lower", "scalar lower-bound experiments: generic start, eta path, sweep");
    lower->fallthrough();
    lower->add_option("--a", lower_args.a, "kinetic power a")->required();
    lower->add_option("--b", lower_args.b, "objective power b")->required();
    lower->add_option("--gamma", lower_args.gamma, "damping")->required();
    lower->add_option("--mode", lower_args.mode, "generic | eta | sweep")
        ->check(CLI::IsMember({"generic", "eta", "sweep"}));
    lower->add_option("--t-end", lower_args.t_end, "horizon for generic mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    if (*out_opt) g.out_dir = out_dir;
    if (*seed_opt) g.seed = seed;

    return guarded(
        [&] {
            if (*run) return cmd_run(config, g);
            if (*rates) return cmd_rates(config, g);
            if (*ode) return cmd_ode(config, g);
            if (*compare) return cmd_compare(config, g);
            return cmd_lower(lower_args, g);
        },
        std::cerr);
}
