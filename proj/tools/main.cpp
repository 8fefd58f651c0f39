#include <iostream>

#include "CLI11.hpp"
#include "wkam/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wkam: weak KAM laboratory for time-periodic Lagrangians"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wkam::kVersion);

  wkam::CommandLine cmd;
  app.add_option("--config", cmd.config, "Run configuration (JSON)");
  app.add_option("--threads", cmd.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::NonNegativeNumber);

  app.add_subcommand("critical", "Critical value, optimal cycle and its measure");
  auto* alpha = app.add_subcommand("alpha", "Mather alpha on constant cohomology classes");
  alpha->add_option("--h-min", cmd.h_min, "Smallest class")->capture_default_str();
  alpha->add_option("--h-max", cmd.h_max, "Largest class")->capture_default_str();
  alpha->add_option("--h-steps", cmd.h_steps, "Number of samples")->capture_default_str();
  auto* barrier = app.add_subcommand("barrier", "Action potential and Peierls barrier from one node");
  barrier->add_option("--source", cmd.source, "Source node as CELL,LAYER")->required();
  app.add_subcommand("aubry", "Aubry set and static classes");
  auto* solve = app.add_subcommand("solve", "Weak KAM solution from boundary data");
  solve->add_option("--boundary", cmd.boundary, "CSV of (cell..., layer, value)")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_flag("--forward", cmd.forward, "Build the forward solution");
  solve->add_option("--path", cmd.path_start, "Also extract a calibrated path from CELL,LAYER");
  solve->add_option("--path-periods", cmd.path_periods, "Periods for --path")->capture_default_str();
  auto* verify = app.add_subcommand("verify", "Verification report for a value function");
  verify->add_option("--solution", cmd.solution, "Value function CSV")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_flag("--forward", cmd.forward, "Treat the solution as forward");
  app.add_subcommand("selftest", "Exhaustive-oracle checks on tiny lattices");

  app.fallthrough();
  CLI11_PARSE(app, argc, argv);
  cmd.command = app.get_subcommands().front()->get_name();
  return wkam::run(cmd, std::cerr);
}
