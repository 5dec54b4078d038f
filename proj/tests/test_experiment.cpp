#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace dyngame;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dyngame_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

ExperimentConfig quick(SolverKind kind, const std::string& out_dir) {
  ExperimentConfig c = parse_config(Json::parse(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga"}})"));
  override_solver(c, kind);
  c.solver.ga.max_generations = 60;
  c.solver.pso.t_max = 60;
  c.verification.budget.multistarts = 2;
  c.run.out_dir = out_dir;
  return c;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(Json::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  const ExperimentConfig c = parse_config(Json::parse(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "pso"}})"));
  EXPECT_EQ(c.solver.kind, SolverKind::pso);
  EXPECT_EQ(c.solver.pso.swarm_size, 30);
  EXPECT_EQ(c.solver.pso.hybrid_iter, 0);
  EXPECT_EQ(c.solver.ga.population_size, 40);
  EXPECT_EQ(c.run.repeat, 1);
  EXPECT_EQ(c.run.seed_for(3), 4u);
  EXPECT_TRUE(c.verification.enabled);
  EXPECT_EQ(c.verification.budget.multistarts, 8);
  const ExperimentConfig h =
      parse_config(Json::parse(R"({"game": {"template": "nonquadratic"}, "solver": {"type": "hybrid-pso"}})"));
  EXPECT_EQ(h.solver.pso.hybrid_iter, 10);
}

TEST(Config, ValidationErrorsNameTheKey) {
  const std::string pm = config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "ga": {"mutation_prob": 1.5}}})");
  EXPECT_NE(pm.find("mutation_prob"), std::string::npos) << pm;
  EXPECT_NE(pm.find("[0, 1]"), std::string::npos) << pm;
  const std::string omega =
      config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "pso", "pso": {"omega_min": 0.95}}})");
  EXPECT_NE(omega.find("omega_min"), std::string::npos) << omega;
  EXPECT_NE(config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga"}, "run": {"repeat": 0}})")
                .find("run.repeat"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"game": {"template": "nope"}, "solver": {"type": "ga"}})").find("nope"), std::string::npos);
  EXPECT_NE(config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "sa"}})").find("solver.type"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"solver": {"type": "ga"}})").find("game"), std::string::npos);
  EXPECT_NE(config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "ga": {"population_size": "40"}}})")
                .find("solver.ga.population_size"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"game": {"template": "scalar_lq"}, "solver": {"type": "pso", "pso": {"hybrid_iter": 5}}})")
                .find("hybrid_iter"),
            std::string::npos);
}

TEST(Config, UnknownKeysRejected) {
  for (const char* text : {
           R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga"}, "extra": 1})",
           R"({"game": {"template": "scalar_lq", "param": {}}, "solver": {"type": "ga"}})",
           R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "ga": {"popsize": 10}}})",
           R"({"game": {"template": "random_lq", "params": {"sead": 3}}, "solver": {"type": "ga"}})",
           R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga"}, "verification": {"tol": 1}})",
           R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "local_search": {"alpha": 1}}})",
       }) {
    const std::string msg = config_error(text);
    EXPECT_NE(msg.find("unknown key"), std::string::npos) << text << " -> " << msg;
  }
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  const fs::path dir = scratch("parse");
  write(dir / "bad.json", "{\n  \"game\": {\"template\": \"scalar_lq\"},\n  \"solver\": {\"type\": \"ga\",}\n}\n");
  try {
    load_config(dir / "bad.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Config, ToJsonRoundTrip) {
  const char* text = R"({
    "game": {"template": "lq", "params": {
      "horizon": 2, "initial_state": [1, 0],
      "dynamics": [[[0.9, 0.1], [0, 0.8]]],
      "input_maps": [[[[1], [0]]], [[[0], [1]]]],
      "costs": [
        {"state_weight": [[1, 0], [0, 0]], "control_weights": [[[1]], null]},
        {"state_weight": [[0, 0], [0, 1]], "state_target": [0, 0.5], "control_weights": [null, [[2]]]}
      ],
      "control_bound": [-3, 3]}},
    "solver": {"type": "hybrid-pso", "mode": "open_loop", "pso": {"swarm_size": 12, "v_max": 0.4},
               "local_search": {"max_iterations": 50}},
    "run": {"repeat": 2, "seeds": [5, 9], "out_dir": "x"},
    "bench": {"sizes": [4, 8], "repeat": 2}
  })";
  const ExperimentConfig c = parse_config(Json::parse(text));
  const Json once = to_json(c);
  const Json twice = to_json(parse_config(once));
  EXPECT_EQ(once, twice);
  EXPECT_EQ(c.run.seed_for(1), 9u);
  EXPECT_EQ(*c.solver.pso.v_max, 0.4);
  // the explicit matrices describe the same game as built directly
  const DynamicGame game = build_game(c.game);
  EXPECT_EQ(game.horizon(), 2);
  EXPECT_EQ(game.control_bounds(0, 1).upper, 3.0);

  for (const char* t : {"scalar_lq", "random_lq", "nonquadratic"}) {
    const ExperimentConfig d =
        parse_config(Json{{"game", {{"template", t}}}, {"solver", {{"type", "ga"}, {"mode", "linear_feedback"}}}});
    EXPECT_EQ(to_json(d), to_json(parse_config(to_json(d)))) << t;
  }
}

TEST(Config, CustomTemplateRegistry) {
  register_game_template("test_square", [](const Json& params) {
    return oracle::shifted_square(params.value("target", 0.0));
  });
  EXPECT_TRUE(has_game_template("test_square"));
  EXPECT_THROW(register_game_template("lq", [](const Json&) { return oracle::zero_cost_game(1, 1); }),
               std::invalid_argument);
  const ExperimentConfig c = parse_config(
      Json::parse(R"({"game": {"template": "test_square", "params": {"target": 1.5}}, "solver": {"type": "pso"}})"));
  const DynamicGame game = build_game(c.game);
  const SolveResult r = solve_once(game, c, 3);
  EXPECT_NEAR(r.joint[0], 1.5, 1e-3);
  EXPECT_TRUE(r.nash->certified);
}

TEST(Trace, ShapeAndDeterminism) {
  ExperimentConfig c = quick(SolverKind::ga, "");
  c.solver.ga.max_generations = 1;
  const DynamicGame game = build_game(c.game);
  const SolveResult r = solve_once(game, c, 1);
  const std::string csv = trace_csv(r);
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "iteration,player,best_cost,mean_cost,stagnation");
  EXPECT_EQ(rows[1].rfind("1,0,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("1,1,", 0), 0u);

  const fs::path dir = scratch("trace");
  emit_trace(r, dir / "a.csv");
  emit_trace(r, dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv"), csv);
  EXPECT_THROW(emit_trace(r, dir / "no" / "such" / "dir.csv"), std::runtime_error);
}

TEST(Trace, ElitistGaBestCostNonIncreasingPerPlayer) {
  // One player has a stationary objective, so the column is exactly monotone.
  register_game_template("test_square_2", [](const Json&) { return oracle::shifted_square(2.0); });
  ExperimentConfig c =
      parse_config(Json::parse(R"({"game": {"template": "test_square_2"}, "solver": {"type": "ga"}})"));
  c.solver.ga.max_generations = 200;
  const SolveResult r = solve_once(build_game(c.game), c, 4);
  std::istringstream lines(trace_csv(r));
  std::string line;
  std::getline(lines, line);
  double previous = std::numeric_limits<double>::infinity();
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string it, player, best;
    std::getline(fields, it, ',');
    std::getline(fields, player, ',');
    std::getline(fields, best, ',');
    const double b = std::stod(best);
    EXPECT_LE(b, previous);
    previous = b;
  }
}

TEST(Profile, JsonRoundTrip) {
  const DynamicGame game = build_two_player_nonquadratic({});
  for (StrategyMode mode : {StrategyMode::open_loop, StrategyMode::linear_feedback}) {
    const StrategySpace space(game, {.mode = mode});
    const Vector x = Vector::LinSpaced(space.dimension(), -1.0, 1.0 / 3);
    const StrategyProfile p = space.to_profile(x);
    const StrategyProfile q = profile_from_json(Json::parse(profile_to_json(p).dump()));
    EXPECT_EQ(space.from_profile(q), x);
  }
  EXPECT_THROW(profile_from_json(Json::parse(R"({"mode": "open_loop", "players": [{"control": [[0]]}]})")),
               ConfigError);
}

TEST(RunExperiment, FilesSummaryAndCrossCheck) {
  const fs::path dir = scratch("experiment");
  ExperimentConfig c = quick(SolverKind::pso, dir.string());
  c.run.repeat = 4;
  const ExperimentSummary s = run_experiment(c);
  ASSERT_EQ(s.runs.size(), 4u);
  EXPECT_EQ(s.failures, 0);

  // recompute statistics from the result files alone
  std::vector<Vector> costs;
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 4; ++r) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "run_%03d", r);
    ASSERT_TRUE(fs::exists(dir / (std::string(stem) + "_trace.csv")));
    const Json j = Json::parse(slurp(dir / (std::string(stem) + "_result.json")));
    seeds.insert(j["seed"].get<std::uint64_t>());
    costs.push_back((Vector(2) << j["costs"][0].get<double>(), j["costs"][1].get<double>()).finished());
    EXPECT_TRUE(j["nash"].is_object());
  }
  EXPECT_EQ(seeds, (std::set<std::uint64_t>{1, 2, 3, 4}));
  Vector mean = Vector::Zero(2), lo = costs[0], hi = costs[0];
  for (const Vector& v : costs) {
    mean += v / 4.0;
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  Vector var = Vector::Zero(2);
  for (const Vector& v : costs) var += (v - mean).cwiseAbs2() / 3.0;
  const Json summary = Json::parse(slurp(dir / "summary.json"));
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(summary["mean_costs"][i].get<double>(), mean[i], 1e-14);
    EXPECT_NEAR(summary["std_costs"][i].get<double>(), std::sqrt(var[i]), 1e-12);
    EXPECT_NEAR(summary["cost_spread"][i].get<double>(), hi[i] - lo[i], 1e-14);
  }
  EXPECT_NEAR(summary["max_cost_spread"].get<double>(), (hi - lo).maxCoeff(), 1e-14);
}

TEST(RunExperiment, SameSeedByteIdenticalFiles) {
  for (SolverKind kind : {SolverKind::ga, SolverKind::hybrid_pso}) {
    const fs::path a = scratch("repeat_a"), b = scratch("repeat_b");
    ExperimentConfig c = quick(kind, a.string());
    run_experiment(c);
    c.run.out_dir = b.string();
    run_experiment(c);
    EXPECT_EQ(slurp(a / "run_000_trace.csv"), slurp(b / "run_000_trace.csv"));
    EXPECT_EQ(slurp(a / "run_000_result.json"), slurp(b / "run_000_result.json"));
  }
}

TEST(RunExperiment, EchoedConfigReproducesResult) {
  const fs::path a = scratch("echo_a"), b = scratch("echo_b");
  ExperimentConfig c = quick(SolverKind::ga, a.string());
  c.run.base_seed = 41;
  c.run.repeat = 2;
  run_experiment(c);
  const Json first = Json::parse(slurp(a / "run_001_result.json"));
  Json echoed = first["config"];
  echoed["run"]["out_dir"] = b.string();
  run_experiment(parse_config(echoed));
  EXPECT_EQ(slurp(a / "run_001_trace.csv"), slurp(b / "run_000_trace.csv"));
  EXPECT_EQ(first.dump(), Json::parse(slurp(b / "run_000_result.json")).dump());
}

TEST(RunExperiment, FailedRunsRecordedAndOthersProceed) {
  register_game_template("test_fragile", [](const Json&) {
    GameDefinition d;
    d.num_players = 1;
    d.horizon = 1;
    d.state_dim = 1;
    d.control_dims = {1};
    d.initial_state = Vector::Zero(1);
    d.transition = [](int, const Vector& x, JointControls) { return x; };
    d.stage_costs = {[](int, const Vector&, JointControls u) {
      return u[0][0] > 0.9 ? std::numeric_limits<double>::quiet_NaN() : u[0][0] * u[0][0];
    }};
    d.terminal_costs = {[](const Vector&) { return 0.0; }};
    d.control_bounds = {{{-1.0, 1.0}}};
    return DynamicGame(std::move(d));
  });
  const fs::path dir = scratch("fragile");
  ExperimentConfig c = parse_config(Json::parse(R"({"game": {"template": "test_fragile"}, "solver": {"type": "pso"}})"));
  c.run.repeat = 3;
  c.run.out_dir = dir.string();
  const ExperimentSummary s = run_experiment(c);
  EXPECT_EQ(s.runs.size(), 3u);
  EXPECT_EQ(s.failures, 3);
  for (const RunRecord& r : s.runs) EXPECT_NE(r.error.find("non-finite"), std::string::npos) << r.error;
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "run_002_trace.csv"));
}

TEST(Bench, IterationsToTolerance) {
  SolveResult r;
  r.trace = {{1, 0, 5.0, 0, 0}, {1, 1, 5.0, 0, 0}, {2, 0, 1.0005, 0, 0}, {2, 1, 3.0, 0, 0}, {3, 0, 1.0, 0, 0}, {3, 1, 2.0, 0, 0}};
  const Vector ref = (Vector(2) << 1.0, 2.0).finished();
  EXPECT_EQ(iterations_to_tolerance(r, ref, 1e-3), 3);
  EXPECT_EQ(iterations_to_tolerance(r, ref, 1e-6), 3);
  EXPECT_EQ(iterations_to_tolerance(r, (Vector(2) << 0.0, 0.0).finished(), 1e-3), -1);
}

TEST(Bench, SweepReport) {
  const fs::path dir = scratch("bench");
  ExperimentConfig c = quick(SolverKind::ga, dir.string());
  c.solver.ga.max_generations = 400;
  c.bench.sizes = {10, 40, 80};
  c.bench.repeat = 2;
  const BenchReport report = run_bench(c);
  EXPECT_EQ(report.reference, "lq-oracle");
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_FALSE(report.note.empty());
  EXPECT_TRUE(fs::exists(dir / "bench.json"));
  EXPECT_TRUE(fs::exists(dir / "bench.csv"));
}

#ifdef DYNGAME_CLI
namespace {

int run_cli(const std::string& args) {
  const int status = std::system((std::string(DYNGAME_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  write(dir / "ok.json", R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "ga": {"max_generations": 600}}})");
  write(dir / "bad.json", R"({"game": {"template": "scalar_lq"}, "solver": {"type": "ga", "ga": {"mutation_prob": 1.5}}})");
  write(dir / "zero.json", R"({"mode": "open_loop", "players": [{"controls": [[0]]}, {"controls": [[0]]}]})");
  write(dir / "nash.json",
        R"({"mode": "open_loop", "players": [{"controls": [[-0.3333333333333333]]}, {"controls": [[-0.3333333333333333]]}]})");
  const std::string out = " --out-dir " + (dir / "out").string();

  EXPECT_EQ(run_cli("solve " + (dir / "ok.json").string() + out + " --quiet --seed 3"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "run_000_trace.csv"));
  EXPECT_EQ(run_cli("solve " + (dir / "ok.json").string() + out + " --quiet --repeat 2 --solver pso"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "run_001_result.json"));
  EXPECT_EQ(run_cli("solve " + (dir / "bad.json").string() + out), 2);
  EXPECT_EQ(run_cli("solve " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("solve " + (dir / "ok.json").string() + " --solver annealing"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("verify " + (dir / "ok.json").string() + " " + (dir / "nash.json").string()), 0);
  EXPECT_EQ(run_cli("verify " + (dir / "ok.json").string() + " " + (dir / "zero.json").string()), 1);
  EXPECT_EQ(run_cli("verify " + (dir / "ok.json").string() + " " + (dir / "out" / "run_000_result.json").string()), 0);
}
#endif
