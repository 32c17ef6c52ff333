#pragma once

// Subcommands behind the hmma binary. Argument parsing lives in the tool; these
// take already-split options so they can be driven from tests.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hmma {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitSolver = 3,  // a subproblem failed or the final plans are infeasible
  kExitIo = 4,
};

struct CliOptions {
  std::string config_path;  // empty: reference defaults
  std::vector<std::string> schemes;
  std::optional<unsigned long long> seed;  // overrides users.seed
  std::string out_dir = "out";
  std::string axis;
  std::string values;  // "0,0.2,0.4" or "start:step:stop"
  std::optional<double> tol_feas;
  std::optional<double> tol_opt;
};

int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_compare(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& options, std::ostream& out, std::ostream& err);

// Throws ConfigError("values", ...) on malformed input. Empty input gives an
// empty list.
std::vector<double> parse_values(const std::string& text);

}  // namespace hmma
