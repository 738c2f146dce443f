// Command-line front end: scenario runs, the dependence / sweep / refinement
// experiments, and CSV emission. Exit codes: 0 success, 2 config/validation
// error, 3 blow-up signal from `run`, 4 experiment aborted.

#include "visco/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool allow_invalid = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "scenario config file")->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--seed", args.seed, "seed for randomized estimates");
  cmd->add_flag("--allow-invalid", args.allow_invalid,
                "run scenarios that fail assumption validation");
}

visco::ScenarioConfig load(const CommonArgs& args, const std::string& expected_experiment) {
  visco::ScenarioConfig cfg = visco::parse_scenario_file(args.config, args.allow_invalid);
  if (!cfg.experiment.empty() && cfg.experiment != expected_experiment) {
    throw visco::ScenarioError("config declares experiment `" + cfg.experiment +
                               "` but subcommand is `" + expected_experiment + "`");
  }
  std::filesystem::create_directories(args.out);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscoelastic wave simulator and verification lab"};
  app.require_subcommand(1);

  CommonArgs run_args, depend_args, sweep_args, converge_args;
  CLI::App* cmd_run = app.add_subcommand("run", "run one scenario, emit ledger + summary");
  add_common(cmd_run, run_args);
  CLI::App* cmd_depend =
      app.add_subcommand("depend", "continuous-dependence experiment over perturbation sizes");
  add_common(cmd_depend, depend_args);
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "global-vs-blow-up sweep over (m, p, data)");
  add_common(cmd_sweep, sweep_args);
  cmd_sweep->add_option("--threads", sweep_args.threads, "worker pool size (0 = hardware)");
  CLI::App* cmd_converge =
      app.add_subcommand("converge", "joint (dt, ds) refinement study with fitted orders");
  add_common(cmd_converge, converge_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      const auto cfg = load(run_args, "run");
      const auto result = visco::run_scenario(cfg, run_args.out, run_args.seed);
      if (result.exit_status != 0) {
        std::cerr << "blow-up indicator at t = " << result.summary.blowup_t
                  << " (modified energy " << result.summary.blowup_mod_energy << ")\n";
      }
      return result.exit_status;
    }
    if (cmd_depend->parsed()) {
      const auto cfg = load(depend_args, "depend");
      try {
        const auto result = visco::dependence_experiment(cfg, depend_args.out);
        std::cout << "ratio spread over last 4 deltas: " << result.ratio_spread
                  << (result.ratios_stable ? " (stable)" : "") << "\n";
      } catch (const visco::ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return 4;
      }
      return 0;
    }
    if (cmd_sweep->parsed()) {
      const auto cfg = load(sweep_args, "sweep");
      const auto result = visco::sweep_experiment(cfg, sweep_args.out, sweep_args.threads);
      std::cout << result.cells.size() << " cells; m>=p bounded: "
                << (result.all_dominated_bounded ? "yes" : "NO")
                << "; blow-up indicators: " << (result.any_blowup_indicator ? "yes" : "no")
                << "\n";
      return 0;
    }
    if (cmd_converge->parsed()) {
      const auto cfg = load(converge_args, "converge");
      try {
        const auto result = visco::convergence_study(cfg, converge_args.out);
        auto show = [](bool floor, double order) {
          return floor ? std::string("round-off floor") : std::to_string(order);
        };
        std::cout << "fitted orders: identity "
                  << show(result.floor_identity, result.order_identity) << ", weak "
                  << show(result.floor_weak, result.order_weak) << ", oracle "
                  << show(result.floor_oracle, result.order_oracle) << "\n";
      } catch (const visco::ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return 4;
      }
      return 0;
    }
  } catch (const visco::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
