#include "oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace dyngame;

namespace {

Chromosome random_digits(std::size_t n, Rng& rng) {
  Chromosome c;
  for (std::size_t j = 0; j < n; ++j) c.digits.push_back(static_cast<std::uint8_t>(uniform_int(rng, 0, 9)));
  return c;
}

// chi-square 99% critical value with 9 degrees of freedom
constexpr double kChi2_9dof_99 = 21.666;

}  // namespace

TEST(FitnessTransform, Offsets) {
  EXPECT_EQ(fitness_transform(0.0, 100.0), 100.0);
  EXPECT_EQ(fitness_transform(7.5, 7.5), 0.0);
  const std::vector<double> costs{3.0, -1.0, 8.0, 0.5};
  for (double C : {-5.0, 0.0, 10.0, 1e6}) {
    std::size_t arg_f = 0, arg_j = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
      if (fitness_transform(costs[i], C) > fitness_transform(costs[arg_f], C)) arg_f = i;
      if (costs[i] < costs[arg_j]) arg_j = i;
    }
    EXPECT_EQ(arg_f, arg_j);
  }
}

TEST(FitnessTransform, AdaptiveOffsetKeepsFitnessPositive) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> costs(10);
    for (double& c : costs) c = uniform_in(rng, -100.0, 100.0) * std::pow(10.0, uniform_int(rng, -3, 3));
    const double C = adaptive_offset(costs);
    for (double c : costs) EXPECT_GE(fitness_transform(c, C), 1.0);
  }
  const std::array<double, 2> costs{2.0, -4.0};
  EXPECT_DOUBLE_EQ(adaptive_offset(costs), 2.0 + 0.2 + 1.0);
}

TEST(RouletteSelect, TrivialCases) {
  Rng rng(1);
  const std::array<double, 1> one{0.3};
  const std::array<double, 2> zero_mass{2.0, 0.0};
  for (int t = 0; t < 1000; ++t) {
    EXPECT_EQ(roulette_select(one, rng), 0u);
    EXPECT_EQ(roulette_select(zero_mass, rng), 0u);
  }
}

TEST(RouletteSelect, FrequencyMatchesFitnessRatio) {
  Rng rng(2024);
  const std::array<double, 2> f{3.0, 1.0};
  const int draws = 100000;
  int zeros = 0;
  for (int t = 0; t < draws; ++t) zeros += roulette_select(f, rng) == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(zeros) / draws, 0.75, 0.01);
}

TEST(RouletteSelect, ProportionalOverManyCandidates) {
  Rng rng(5);
  const std::vector<double> f{1.0, 2.0, 3.0, 4.0, 0.0, 5.0};
  std::vector<int> counts(f.size(), 0);
  const int draws = 150000;
  for (int t = 0; t < draws; ++t) ++counts[roulette_select(f, rng)];
  EXPECT_EQ(counts[4], 0);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) continue;
    const double expected = draws * f[i] / 15.0;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  EXPECT_LT(chi2, 13.277);  // 4 dof, 99%
}

TEST(RouletteSelect, RejectsBadFitness) {
  Rng rng(1);
  const std::array<double, 2> zeros{0.0, 0.0};
  const std::array<double, 2> negative{1.0, -0.5};
  EXPECT_THROW(roulette_select(zeros, rng), SelectionError);
  try {
    roulette_select(negative, rng);
    FAIL();
  } catch (const SelectionError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(Crossover, IdenticalParents) {
  Rng rng(3);
  const Chromosome a = random_digits(21, rng);
  for (int t = 0; t < 50; ++t) {
    const auto [x, y] = one_point_crossover(a, a, rng);
    EXPECT_EQ(x, a);
    EXPECT_EQ(y, a);
  }
}

TEST(Crossover, PrefixSuffixExchange) {
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const Chromosome a = random_digits(14, rng), b = random_digits(14, rng);
    const Slice seg{7, 7};
    const auto [x, y] = one_point_crossover(a, b, seg, rng);
    ASSERT_EQ(x.digits.size(), 14u);
    // find the cut: first position in the segment where x took b's digit and a and b differ
    std::size_t cut = seg.end();
    for (std::size_t g = seg.offset + 1; g < seg.end(); ++g) {
      bool suffix_from_b = true;
      for (std::size_t h = g; h < seg.end(); ++h)
        suffix_from_b = suffix_from_b && x.digits[h] == b.digits[h] && y.digits[h] == a.digits[h];
      bool prefix_from_a = true;
      for (std::size_t h = 0; h < g; ++h) prefix_from_a = prefix_from_a && x.digits[h] == a.digits[h] && y.digits[h] == b.digits[h];
      if (suffix_from_b && prefix_from_a) {
        cut = g;
        break;
      }
    }
    ASSERT_LT(cut, seg.end()) << "no interior cut explains the offspring";
    for (std::size_t g = 0; g < 14; ++g) {
      std::array<int, 2> before{a.digits[g], b.digits[g]}, after{x.digits[g], y.digits[g]};
      std::sort(before.begin(), before.end());
      std::sort(after.begin(), after.end());
      EXPECT_EQ(before, after) << "position " << g;
    }
    for (std::size_t g = seg.end(); g < 14; ++g) EXPECT_EQ(x.digits[g], a.digits[g]);
  }
}

TEST(Crossover, CutIsUniformOverInteriorPositions) {
  Rng rng(6);
  Chromosome a, b;
  a.digits.assign(10, 0);
  b.digits.assign(10, 1);
  std::vector<int> counts(10, 0);
  const int draws = 90000;
  for (int t = 0; t < draws; ++t) {
    const auto kids = one_point_crossover(a, b, rng);
    std::size_t cut = 0;
    while (kids.first.digits[cut] == 0) ++cut;
    ++counts[cut];
  }
  EXPECT_EQ(counts[0], 0);
  double chi2 = 0.0;
  for (int c = 1; c < 10; ++c) chi2 += (counts[c] - 10000.0) * (counts[c] - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 20.09);  // 8 dof, 99%
}

TEST(Crossover, LengthMismatch) {
  Rng rng(1);
  Chromosome a, b;
  a.digits.assign(4, 0);
  b.digits.assign(5, 0);
  EXPECT_THROW(one_point_crossover(a, b, rng), std::invalid_argument);
}

TEST(Mutate, ZeroProbabilityIsIdentity) {
  Rng rng(1);
  const Chromosome c = random_digits(30, rng);
  EXPECT_EQ(mutate(c, {0, 30}, 0.0, rng), c);
}

TEST(Mutate, InactiveDigitsUntouched) {
  Rng rng(2);
  for (double pm : {0.05, 0.5, 1.0}) {
    for (int t = 0; t < 200; ++t) {
      const Chromosome c = random_digits(28, rng);
      const Slice active{7, 14};
      const Chromosome m = mutate(c, active, pm, rng);
      for (std::size_t g = 0; g < 28; ++g)
        if (!active.contains(g)) ASSERT_EQ(m.digits[g], c.digits[g]);
    }
  }
}

TEST(Mutate, FullProbabilityIsUniformPerDigit) {
  Rng rng(11);
  const Slice active{3, 5};
  std::vector<std::array<int, 10>> counts(active.size, std::array<int, 10>{});
  Chromosome c;
  c.digits.assign(10, 4);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Chromosome m = mutate(c, active, 1.0, rng);
    for (std::size_t j = 0; j < active.size; ++j) ++counts[j][m.digits[active.offset + j]];
  }
  for (std::size_t j = 0; j < active.size; ++j) {
    double chi2 = 0.0;
    for (int d = 0; d < 10; ++d) chi2 += (counts[j][d] - trials / 10.0) * (counts[j][d] - trials / 10.0) / (trials / 10.0);
    EXPECT_LT(chi2, kChi2_9dof_99) << "active digit " << j;
  }
}

TEST(GaConfig, Validation) {
  GaConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mutation_prob = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.population_size = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_generations = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.stall_tolerance = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(GaProblem, RejectsBoundsBeyondEncoding) {
  LqSpec s = scalar_two_player_lq();
  s.control_bound = {-50.0, 50.0};
  const DynamicGame game = build_lq_game(s);
  EXPECT_THROW(GaProblem(game, GaConfig{}), ConfigError);
  GaConfig wide;
  wide.decimal_position = 2;
  EXPECT_NO_THROW(GaProblem(game, wide));
}

TEST(Coevolve, SinglePlayerReachesMinimum) {
  const DynamicGame game = oracle::shifted_square(2.0);
  GaConfig cfg;
  cfg.max_generations = 200;
  cfg.stall_window = 1000;
  cfg.rng_seed = 3;
  const SolveResult r = run_ga(game, cfg);
  EXPECT_EQ(r.iterations, 200);
  EXPECT_LE(std::abs(r.joint[0] - 2.0), EncodingScheme(6, 1, 1).quantum() + 1e-2);
}

TEST(Coevolve, SinglePlayerTraceIsMonotone) {
  const DynamicGame game = build_lq_game(oracle::single_player_lqr(3, 0.5));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    GaConfig cfg;
    cfg.max_generations = 300;
    cfg.rng_seed = seed;
    const SolveResult r = run_ga(game, cfg);
    for (std::size_t t = 1; t < r.trace.size(); ++t) EXPECT_LE(r.trace[t].best_cost, r.trace[t - 1].best_cost);
  }
}

TEST(Coevolve, ElitismNeverLosesTheBestWithinAStep) {
  // With several players the opponents move between steps, so the exact
  // guarantee is per step: the best cost leaving a player's step never
  // exceeds the cost of the incumbent entering it.
  const DynamicGame game = build_lq_game(random_lq_spec(5));
  GaConfig cfg;
  cfg.rng_seed = 9;
  const GaProblem problem(game, cfg);
  GaState state = initialize_ga(problem, cfg);
  for (int g = 0; g < 150; ++g) {
    state = coevolve_generation(problem, state, cfg);
    for (const GaPlayerStep& s : state.last_steps) ASSERT_LE(s.exit_cost, s.entry_cost);
  }
}

TEST(Coevolve, WithoutElitismTheIncumbentCanBeOverwrittenOnlyByBetter) {
  const DynamicGame game = oracle::shifted_square(1.0);
  GaConfig cfg;
  cfg.elitism = false;
  cfg.rng_seed = 4;
  const GaProblem problem(game, cfg);
  GaState state = initialize_ga(problem, cfg);
  double best = state.best_costs[0];
  for (int g = 0; g < 50; ++g) {
    state = coevolve_generation(problem, state, cfg);
    EXPECT_LE(state.best_costs[0], best);
    best = state.best_costs[0];
  }
}

TEST(Coevolve, OthersBestsChangeOnlyThroughTheirOwnStep) {
  // A player's broadcast slice moves only when that player improved in the
  // generation; a stagnating player's slice is bitwise unchanged.
  const DynamicGame game = build_lq_game(random_lq_spec(6, {.num_players = 3}));
  GaConfig cfg;
  cfg.rng_seed = 5;
  const GaProblem problem(game, cfg);
  GaState state = initialize_ga(problem, cfg);
  int unchanged = 0;
  for (int g = 0; g < 60; ++g) {
    const Vector before = state.best;
    const std::vector<Chromosome> before_best = state.best_chromosomes;
    state = coevolve_generation(problem, state, cfg);
    for (int i = 0; i < 3; ++i) {
      if (state.stagnation[i] == 0) continue;
      ++unchanged;
      ASSERT_EQ(problem.space.segment(state.best, i), problem.space.segment(before, i));
      ASSERT_EQ(state.best_chromosomes[i], before_best[i]);
    }
  }
  EXPECT_GT(unchanged, 0);
}

TEST(Coevolve, AdaptiveFitnessIsNonNegative) {
  const DynamicGame game = build_lq_game(random_lq_spec(7));
  GaConfig cfg;
  const GaProblem problem(game, cfg);
  GaState state = initialize_ga(problem, cfg);
  for (int g = 0; g < 30; ++g) {
    // player 0 is evaluated against the broadcast best as it stands now
    double worst = -1e300;
    for (const Chromosome& c : state.subpopulations[0]) {
      const Vector x = problem.space.splice(state.best, 0, problem.space.segment(decode(c, problem.scheme), 0));
      worst = std::max(worst, player_cost(game, problem.space, x, 0));
    }
    state = coevolve_generation(problem, state, cfg);
    EXPECT_GE(state.last_steps[0].offset - worst, 1.0);
  }
}

TEST(Coevolve, ZeroCostGameConvergesImmediately) {
  const DynamicGame game = oracle::zero_cost_game(2, 2);
  GaConfig cfg;
  cfg.stall_window = 5;
  const SolveResult r = run_ga(game, cfg);
  EXPECT_TRUE(r.stalled);
  EXPECT_EQ(r.iterations, 6);
  EXPECT_TRUE(r.costs.isZero());
}

TEST(RunGa, ScalarLqNash) {
  const DynamicGame game = build_lq_game(scalar_two_player_lq());
  GaConfig cfg;
  cfg.rng_seed = 17;
  const SolveResult r = run_ga(game, cfg);
  EXPECT_NEAR(r.joint[0], -1.0 / 3, 1e-2);
  EXPECT_NEAR(r.joint[1], -1.0 / 3, 1e-2);
  EXPECT_NEAR(r.costs[0], 2.0 / 9, 1e-3);
  EXPECT_NEAR(r.costs[1], 2.0 / 9, 1e-3);
  ASSERT_TRUE(r.fitness_offset.has_value());
}

TEST(RunGa, OneGenerationTrace) {
  const DynamicGame game = build_lq_game(scalar_two_player_lq());
  GaConfig cfg;
  cfg.max_generations = 1;
  const SolveResult r = run_ga(game, cfg);
  EXPECT_EQ(r.iterations, 1);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].iteration, 1);
  EXPECT_EQ(r.trace[1].player, 1);
}

TEST(RunGa, TraceEndsAtFinalCosts) {
  const DynamicGame game = build_lq_game(random_lq_spec(2));
  GaConfig cfg;
  cfg.max_generations = 100;
  const SolveResult r = run_ga(game, cfg);
  ASSERT_LE(r.trace.size(), 200u);
  const Vector evaluated = evaluate_all_costs(game, r.profile);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(r.trace[r.trace.size() - 2 + i].best_cost, r.costs[i]);
    EXPECT_EQ(r.costs[i], evaluated[i]);
  }
}

TEST(RunGa, EqualSeedsIdenticalResults) {
  const DynamicGame game = build_lq_game(random_lq_spec(3));
  GaConfig cfg;
  cfg.max_generations = 150;
  cfg.rng_seed = 77;
  const SolveResult a = run_ga(game, cfg);
  cfg.threads = 3;
  const SolveResult b = run_ga(game, cfg);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t t = 0; t < a.trace.size(); ++t) {
    EXPECT_EQ(a.trace[t].best_cost, b.trace[t].best_cost);
    EXPECT_EQ(a.trace[t].mean_cost, b.trace[t].mean_cost);
    EXPECT_EQ(a.trace[t].stagnation, b.trace[t].stagnation);
  }
  EXPECT_EQ(a.joint, b.joint);
}

TEST(RunGa, NonFiniteCostAbortsWithTrace) {
  GameDefinition d;
  d.num_players = 1;
  d.horizon = 1;
  d.state_dim = 1;
  d.control_dims = {1};
  d.initial_state = Vector::Zero(1);
  d.transition = [](int, const Vector& x, JointControls) { return x; };
  // finite at the initial incumbent, infinite once the search gets near 0.5
  d.stage_costs = {[](int, const Vector&, JointControls u) {
    return std::abs(u[0][0] - 0.5) < 0.3 ? std::numeric_limits<double>::infinity() : u[0][0] * u[0][0];
  }};
  d.terminal_costs = {[](const Vector&) { return 0.0; }};
  d.control_bounds = {{{-3.0, 3.0}}};
  const DynamicGame game(std::move(d));
  GaConfig cfg;
  cfg.rng_seed = 1;
  for (std::uint64_t seed = 1; seed < 20; ++seed) {
    cfg.rng_seed = seed;
    try {
      run_ga(game, cfg);
    } catch (const SolveAborted& e) {
      EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
      EXPECT_EQ(e.partial().trace.size(), static_cast<std::size_t>(e.partial().iterations));
      return;
    } catch (const ModelError&) {
      continue;  // the initial population already hit the singular region
    }
  }
  FAIL() << "no seed produced an abort";
}
