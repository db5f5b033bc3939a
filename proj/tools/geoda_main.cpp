// geoda: command-line front end for the hard-label attack library.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geoda/commands.hpp"

namespace {

void add_overrides(CLI::App* cmd, geoda::ConfigOverrides& o) {
  cmd->add_option("--budget", o.budget, "Override attack.budget");
  cmd->add_option("--seed", o.seed, "Override the run seed");
  cmd->add_option("--p", o.p, "Override attack.p (number >= 1 or inf)");
  cmd->add_option("--lambda", o.lambda, "Override attack.lambda");
  cmd->add_option("--zeta", o.zeta, "Override attack.zeta");
  cmd->add_option("--workers", o.workers, "Override the worker pool size");
  cmd->add_option("--out-dir", o.out_dir, "Override output.dir");
  cmd->add_option("--endpoint", o.endpoint,
                  std::string("Remote endpoint (beats ") + geoda::kEndpointEnv + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GeoDA hard-label black-box attack"};
  app.require_subcommand(1);

  std::string config_path;
  geoda::ConfigOverrides overrides;

  auto* attack = app.add_subcommand("attack", "Attack every image of the configured dataset");
  attack->add_option("config", config_path, "Run config (JSON)")->required();
  add_overrides(attack, overrides);

  std::size_t budget = 0;
  double lambda = 0.6;
  std::optional<std::size_t> iterations;
  std::size_t floor = 70;
  auto* schedule = app.add_subcommand("schedule", "Print the per-iteration query schedule");
  schedule->add_option("--budget", budget, "Estimation queries")->required();
  schedule->add_option("--lambda", lambda, "Schedule decay in (0, 1]");
  schedule->add_option("--iterations", iterations, "Fix T instead of deriving it");
  schedule->add_option("--floor", floor, "Minimum first-iteration count");

  auto* calibrate =
      app.add_subcommand("calibrate-sigma", "Calibrate the draw variance on the first image");
  calibrate->add_option("config", config_path, "Run config (JSON)")->required();
  add_overrides(calibrate, overrides);

  std::string report_path;
  auto* report = app.add_subcommand("report", "Re-summarize a JSON report");
  report->add_option("report", report_path, "Report written by `attack`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : geoda::kExitConfig;
  }

  if (attack->parsed()) return geoda::cmd_attack(config_path, overrides, std::cout, std::cerr);
  if (schedule->parsed()) {
    return geoda::cmd_schedule(budget, lambda, iterations, floor, std::cout, std::cerr);
  }
  if (calibrate->parsed()) {
    return geoda::cmd_calibrate_sigma(config_path, overrides, std::cout, std::cerr);
  }
  return geoda::cmd_report(report_path, std::cout, std::cerr);
}
