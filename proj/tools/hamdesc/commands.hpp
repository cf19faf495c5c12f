#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace hamdesc::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3 };

struct GlobalOptions {
    std::optional<std::string> out_dir;  // overrides output.dir
    std::optional<std::uint64_t> seed;   // overrides seed
    bool quiet = false;
};

struct LowerArgs {
    double a = 2.0;
    double b = 4.0;
    double gamma = 1.0;
    std::string mode = "generic";  // generic | eta | sweep
    double t_end = 1e4;
};

int cmd_run(const std::string& config_path, const GlobalOptions& g);
int cmd_rates(const std::string& config_path, const GlobalOptions& g);
int cmd_ode(const std::string& config_path, const GlobalOptions& g);
int cmd_lower(const LowerArgs& args, const GlobalOptions& g);
int cmd_compare(const std::string& config_path, const GlobalOptions& g);

/// Runs body, mapping exceptions to exit codes and printing diagnostics to err.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace hamdesc::cli
