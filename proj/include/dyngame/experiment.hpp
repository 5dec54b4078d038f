#pragma once

#include "dyngame/ga.hpp"
#include "dyngame/lq_game.hpp"
#include "dyngame/nonquadratic_game.hpp"
#include "dyngame/pso.hpp"
#include "dyngame/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>

namespace dyngame {

using Json = nlohmann::json;

/// Factory for a game registered under a template name; receives the
/// template's "params" object verbatim.
using GameFactory = std::function<DynamicGame(const Json& params)>;

/// Registers a custom game template usable from config files. Built-in
/// template names cannot be replaced.
void register_game_template(const std::string& name, GameFactory factory);
bool has_game_template(const std::string& name);

struct GameSection {
  /// scalar_lq | lq | random_lq | nonquadratic | a registered name
  std::string template_name = "scalar_lq";
  LqSpec lq = scalar_two_player_lq();
  std::uint64_t random_seed = 1;
  RandomLqOptions random;
  NonquadraticSpec nonquadratic;
  Json custom_params = Json::object();
};

enum class SolverKind { ga, pso, hybrid_pso };

struct SolverSection {
  SolverKind kind = SolverKind::ga;
  SpaceConfig space;
  int threads = 1;
  GaConfig ga;
  PsoConfig pso;
};

struct VerificationSection {
  bool enabled = true;
  double tolerance = 1e-3;
  BestResponseBudget budget;
};

struct RunSection {
  int repeat = 1;
  std::uint64_t base_seed = 1;
  /// Explicit per-run seeds; when empty run r uses base_seed + r.
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "results";

  std::uint64_t seed_for(int run) const;
};

struct BenchSection {
  /// Population (GA) or swarm (PSO) sizes to sweep.
  std::vector<int> sizes{10, 20, 40, 80};
  int repeat = 5;
  /// A run reaches tolerance once every player's best cost is within this of the reference costs.
  double tolerance = 1e-3;
};

struct ExperimentConfig {
  GameSection game;
  SolverSection solver;
  VerificationSection verification;
  RunSection run;
  BenchSection bench;
};

/// Parse errors carry line/column; schema errors name the offending key path.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const Json& document);
/// Fully resolved configuration, defaults included; parse_config(to_json(c)) == c.
Json to_json(const ExperimentConfig& config);

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

DynamicGame build_game(const GameSection& game);

/// Switches the solver kind, keeping hybrid_iter consistent with it.
void override_solver(ExperimentConfig& config, SolverKind kind);

/// One solver run with the given seed; attaches a NashReport when verification is enabled.
SolveResult solve_once(const DynamicGame& game, const ExperimentConfig& config, std::uint64_t seed);

/// CSV: iteration,player,best_cost,mean_cost,stagnation
void emit_trace(const SolveResult& result, const std::filesystem::path& path);
std::string trace_csv(const SolveResult& result);

Json profile_to_json(const StrategyProfile& profile);
StrategyProfile profile_from_json(const Json& document);
/// Accepts a bare profile document or a result file containing "profile".
StrategyProfile load_profile(const std::filesystem::path& path);

Json nash_report_to_json(const NashReport& report);
/// Result file contents. Wall-clock time is left out so reruns are byte-identical.
Json result_to_json(const SolveResult& result, const ExperimentConfig& config);

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SolveResult result;
};

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  Vector mean_costs;
  Vector std_costs;
  /// Per-player max - min of final costs over successful runs.
  Vector cost_spread;
  double max_cost_spread = 0.0;
  int failures = 0;
  int certified = 0;
};

/// Summary statistics over the successful runs.
ExperimentSummary summarize(std::vector<RunRecord> runs);
Json summary_to_json(const ExperimentSummary& summary);

struct RunOptions {
  bool write_files = true;
  bool quiet = true;
};

/// Executes config.run.repeat runs with derived seeds, writing
/// run_NNN_trace.csv, run_NNN_result.json and summary.json into run.out_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct BenchRow {
  int size = 0;
  std::vector<int> iterations_to_tolerance;  // -1 when the run never got there
  double median_iterations = 0.0;
  int reached = 0;
};

struct BenchReport {
  std::string reference;  // "lq-oracle" or "final-costs"
  std::vector<BenchRow> rows;
  /// Filled when 40 and 80 were both swept.
  std::string note;
};

/// Sweeps population (GA) or swarm (PSO) sizes and records iterations-to-tolerance.
BenchReport run_bench(const ExperimentConfig& config, const RunOptions& options = {});
Json bench_to_json(const BenchReport& report);

/// First 1-based iteration at which every player's trace cost is within
/// `tolerance` of `reference`, or -1.
int iterations_to_tolerance(const SolveResult& result, const Vector& reference, double tolerance);

}  // namespace dyngame
