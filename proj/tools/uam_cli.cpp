#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "uam/demo.hpp"
#include "uam/uam.hpp"

namespace {

struct CommandArgs {
  std::string config;
  std::string out = "out";
  long long seed = -1;
  int workers = 1;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommandArgs& a) {
  cmd->add_option("--config", a.config, "experiment JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--seed", a.seed, "random seed for the optimiser")->check(CLI::NonNegativeNumber);
  cmd->add_option("--workers", a.workers, "parallel workers")->check(CLI::PositiveNumber);
  cmd->add_flag("--timing", a.timing, "fill the computational time column");
}

uam::RunOptions options(const CommandArgs& a) {
  uam::RunOptions o;
  o.out = a.out;
  if (a.seed >= 0) o.seed = static_cast<std::uint64_t>(a.seed);
  o.workers = a.workers;
  o.timing = a.timing;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Urban air mobility planning: risk maps, tracks and fleet schedules"};
  app.require_subcommand(1);

  CommandArgs args;
  std::string demo_dir;
  auto* risk = app.add_subcommand("risk-map", "build the risk map and write per-layer CSV and heatmaps");
  auto* plan = app.add_subcommand("plan", "plan the four track stages for every query");
  auto* schedule = app.add_subcommand("schedule", "resolve conflicts and optimise the fleet schedule");
  auto* sweep = app.add_subcommand("sweep", "run the parameter sweeps");
  for (auto* c : {risk, plan, schedule, sweep}) add_common(c, args);
  auto* demo = app.add_subcommand("make-demo", "write the bundled demo inputs");
  demo->group("");
  demo->add_option("dir", demo_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(uam::ExitCode::kValidation);
  }

  try {
    if (demo->parsed()) {
      uam::demo::write_files(demo_dir);
      return 0;
    }
    const uam::ExperimentConfig cfg = uam::load_experiment(args.config);
    const uam::RunOptions opt = options(args);
    if (risk->parsed()) return uam::cmd_risk_map(cfg, opt);
    if (plan->parsed()) return uam::cmd_plan(cfg, opt);
    if (schedule->parsed()) return uam::cmd_schedule(cfg, opt);
    return uam::cmd_sweep(cfg, opt);
  } catch (const uam::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return static_cast<int>(uam::ExitCode::kInternal);
  }
}
