// dyngame: solve, verify and benchmark dynamic games from a JSON config.
//
//   dyngame solve  <config> [--seed N] [--repeat N] [--solver ga|pso|hybrid-pso] [--out-dir DIR] [--quiet]
//   dyngame verify <config> <profile> [--seed N] [--quiet]
//   dyngame bench  <config> [--seed N] [--repeat N] [--solver ...] [--out-dir DIR] [--quiet]
//
// Exit codes: 0 success, 1 run failure, 2 config error.

#include "dyngame/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> repeat;
  std::optional<std::string> solver;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Base seed (run r uses seed + r)");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
  cmd->add_option("--threads", o.threads, "Worker threads for candidate evaluation")->check(CLI::PositiveNumber);
}

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--repeat", o.repeat, "Number of independent runs")->check(CLI::PositiveNumber);
  cmd->add_option("--solver", o.solver, "Solver override")->check(CLI::IsMember({"ga", "pso", "hybrid-pso"}));
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
}

void apply(dyngame::ExperimentConfig& config, const Overrides& o) {
  if (o.seed) {
    config.run.base_seed = *o.seed;
    config.run.seeds.clear();
  }
  if (o.repeat) {
    config.run.repeat = *o.repeat;
    config.bench.repeat = *o.repeat;
    if (!config.run.seeds.empty() && config.run.seeds.size() < static_cast<std::size_t>(*o.repeat))
      throw dyngame::ConfigError("--repeat " + std::to_string(*o.repeat) + " exceeds the seeds listed in run.seeds");
  }
  if (o.solver) dyngame::override_solver(config, dyngame::solver_kind_from_string(*o.solver));
  if (o.out_dir) config.run.out_dir = *o.out_dir;
  if (o.threads) config.solver.threads = *o.threads;
}

int cmd_solve(const std::string& path, const Overrides& o) {
  dyngame::ExperimentConfig config = dyngame::load_config(path);
  apply(config, o);
  const auto summary = dyngame::run_experiment(config, {.write_files = true, .quiet = o.quiet});
  if (!o.quiet) {
    std::cout << "summary: " << summary.runs.size() - static_cast<std::size_t>(summary.failures) << "/"
              << summary.runs.size() << " runs ok";
    if (config.verification.enabled) std::cout << ", " << summary.certified << " certified";
    if (summary.mean_costs.size()) std::cout << ", max cost spread " << summary.max_cost_spread;
    std::cout << "\nwrote " << config.run.out_dir << "/summary.json\n";
  }
  if (summary.failures > 0) return kRunFailure;
  if (config.verification.enabled && summary.certified < static_cast<int>(summary.runs.size())) return kRunFailure;
  return kOk;
}

int cmd_verify(const std::string& path, const std::string& profile_path, const Overrides& o) {
  dyngame::ExperimentConfig config = dyngame::load_config(path);
  apply(config, o);
  if (o.seed) config.verification.budget.seed = *o.seed;
  const dyngame::DynamicGame game = dyngame::build_game(config.game);
  const dyngame::StrategyProfile profile = dyngame::load_profile(profile_path);
  if (profile.mode != config.solver.space.mode)
    throw dyngame::ConfigError(profile_path + ": profile mode does not match solver.mode in " + path);
  dyngame::NashReport report;
  try {
    report = dyngame::certify_nash(game, profile, config.verification.tolerance, config.verification.budget,
                                   config.solver.space);
  } catch (const dyngame::DimensionError& e) {
    throw dyngame::ConfigError(profile_path + ": " + e.what());
  }
  std::cout << dyngame::nash_report_to_json(report).dump(2) << "\n";
  if (!o.quiet)
    std::cerr << (report.certified ? "certified" : "NOT certified") << ": max gap " << report.max_gap()
              << " (tolerance " << report.tolerance << ")\n";
  return report.certified ? kOk : kRunFailure;
}

int cmd_bench(const std::string& path, const Overrides& o) {
  dyngame::ExperimentConfig config = dyngame::load_config(path);
  apply(config, o);
  dyngame::run_bench(config, {.write_files = true, .quiet = o.quiet});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash equilibria of discrete-time dynamic games by co-evolution and swarm search"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  std::string profile_path;

  CLI::App* solve = app.add_subcommand("solve", "Run the configured solver and write traces and results");
  solve->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(solve, o);
  add_run_options(solve, o);

  CLI::App* verify = app.add_subcommand("verify", "Certify a strategy profile as an approximate Nash equilibrium");
  verify->add_option("config", config_path, "Experiment config (JSON)")->required();
  verify->add_option("profile", profile_path, "Profile JSON or a result file")->required();
  add_common(verify, o);

  CLI::App* bench = app.add_subcommand("bench", "Sweep population/swarm sizes and report iterations to tolerance");
  bench->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common(bench, o);
  add_run_options(bench, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve) return cmd_solve(config_path, o);
    if (*verify) return cmd_verify(config_path, profile_path, o);
    return cmd_bench(config_path, o);
  } catch (const dyngame::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
}
