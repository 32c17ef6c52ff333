#include <iostream>

#include "CLI11.hpp"
#include "hmma/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"UAV base station joint UL/DL resource allocation with hybrid NOMA/OMA"};
  app.require_subcommand(1);
  hmma::CliOptions o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "user drop seed, overrides the config");
    sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--tol-feas", o.tol_feas, "feasibility tolerance on scaled constraints");
    sub->add_option("--tol-opt", o.tol_opt, "relative optimality tolerance");
  };

  CLI::App* run = app.add_subcommand("run", "run one scheme");
  common(run);
  run->add_option("--scheme", o.schemes, "hmma, ehmma, noma, oma or hmma-nopa")->expected(1);

  CLI::App* compare = app.add_subcommand("compare", "run several schemes on one scenario");
  common(compare);
  compare->add_option("--scheme", o.schemes, "scheme to include, repeatable or comma separated")
      ->delimiter(',');

  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter");
  common(sweep);
  sweep->add_option("--axis", o.axis, "alpha, K, smax, omega or T")->required();
  sweep->add_option("--values", o.values, "V1,V2,... or START:STEP:STOP")->required();
  sweep->add_option("--scheme", o.schemes, "scheme to include, repeatable or comma separated")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hmma::kExitUsage;
  }

  if (run->parsed()) return hmma::cmd_run(o, std::cout, std::cerr);
  if (compare->parsed()) return hmma::cmd_compare(o, std::cout, std::cerr);
  return hmma::cmd_sweep(o, std::cout, std::cerr);
}
