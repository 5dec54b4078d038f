#pragma once

#include "dyngame/encoding.hpp"
#include "dyngame/solve_result.hpp"
#include "dyngame/strategy_space.hpp"

#include <span>
#include <utility>

namespace dyngame {

enum class FitnessOffsetMode { adaptive, fixed };

struct GaConfig {
  int population_size = 40;
  double crossover_prob = 0.8;
  double mutation_prob = 0.05;
  bool elitism = true;
  FitnessOffsetMode offset_mode = FitnessOffsetMode::adaptive;
  /// C in F = C - J when offset_mode is fixed.
  double fixed_offset = 100.0;
  int max_generations = 2000;
  int stall_window = 200;
  double stall_tolerance = 1e-9;
  std::uint64_t rng_seed = 1;
  int magnitude_digits = 6;
  int decimal_position = 1;
  SpaceConfig space;
  /// Worker threads for fitness evaluation; results do not depend on it.
  int threads = 1;

  void validate() const;
};

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// F = C - J.
inline double fitness_transform(double cost, double offset) { return offset - cost; }

/// C = max J + 10% of |max J| + 1, which makes every fitness in the batch >= 1.
double adaptive_offset(std::span<const double> costs);

/// Index drawn with probability proportional to fitness.
std::size_t roulette_select(std::span<const double> fitnesses, Rng& rng);

/// Exchanges the genes in [cut, segment.end()) between the parents, with the
/// cut drawn uniformly from the segment's interior positions. Genes outside
/// the segment are untouched; a segment shorter than 2 yields copies.
std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& a, const Chromosome& b, const Slice& segment,
                                                      Rng& rng);
std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

/// Resamples each digit of `active` uniformly from 0..9 with probability `probability`.
Chromosome mutate(Chromosome chromosome, const Slice& active, double probability, Rng& rng);

/// Fixed pieces of a GA run.
struct GaProblem {
  const DynamicGame& game;
  StrategySpace space;
  EncodingScheme scheme;

  GaProblem(const DynamicGame& game, const GaConfig& config);
};

struct GaPlayerStep {
  /// Best cost re-evaluated against the current opponents when the step began.
  double entry_cost = 0.0;
  /// Best cost after the step.
  double exit_cost = 0.0;
  double mean_cost = 0.0;
  double offset = 0.0;
};

struct GaState {
  /// subpopulations[player]: full-length chromosomes; only the player's genes evolve.
  std::vector<std::vector<Chromosome>> subpopulations;
  std::vector<Chromosome> best_chromosomes;
  /// Broadcast best profile (clamped decoded values of every player's best).
  Vector best;
  /// best_costs[i]: J_i of `best` as of player i's last update.
  Vector best_costs;
  std::vector<int> stagnation;
  int generation = 0;
  /// Costs of `best` for all players after each generation.
  std::vector<Vector> history;
  std::vector<GaPlayerStep> last_steps;
  Rng rng;
};

GaState initialize_ga(const GaProblem& problem, const GaConfig& config);

/// One co-evolutionary sweep over players 0..N-1. Each player's subpopulation
/// evolves against the others' broadcast bests, and its new best is broadcast
/// before the next player starts.
GaState coevolve_generation(const GaProblem& problem, GaState state, const GaConfig& config);

SolveResult run_ga(const DynamicGame& game, const GaConfig& config);

}  // namespace dyngame
