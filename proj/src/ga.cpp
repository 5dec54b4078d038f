#include "dyngame/ga.hpp"

#include "dyngame/parallel.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace dyngame {

void GaConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("ga: " + what); };
  if (population_size < 2) fail("population_size must be at least 2");
  if (!(crossover_prob >= 0 && crossover_prob <= 1)) fail("crossover_prob must be in [0, 1]");
  if (!(mutation_prob >= 0 && mutation_prob <= 1)) fail("mutation_prob must be in [0, 1]");
  if (max_generations < 1) fail("max_generations must be at least 1");
  if (stall_window < 1) fail("stall_window must be at least 1");
  if (!(stall_tolerance >= 0)) fail("stall_tolerance must be non-negative");
  if (threads < 1) fail("threads must be at least 1");
}

double adaptive_offset(std::span<const double> costs) {
  double worst = -std::numeric_limits<double>::infinity();
  for (double c : costs) worst = std::max(worst, c);
  return worst + 0.1 * std::abs(worst) + 1.0;
}

std::size_t roulette_select(std::span<const double> fitnesses, Rng& rng) {
  if (fitnesses.empty()) throw SelectionError("roulette selection over an empty population");
  double total = 0.0;
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    if (!(fitnesses[i] >= 0.0) || !std::isfinite(fitnesses[i]))
      throw SelectionError("roulette selection got fitness " + std::to_string(fitnesses[i]) + " at index " +
                           std::to_string(i) + "; raise the fitness offset C so that C - J > 0");
    total += fitnesses[i];
  }
  if (!(total > 0.0))
    throw SelectionError("roulette selection got all-zero fitness; raise the fitness offset C so that C - J > 0");

  const double spin = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    if (fitnesses[i] <= 0.0) continue;
    last_positive = i;
    acc += fitnesses[i];
    if (spin < acc) return i;
  }
  return last_positive;
}

std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& a, const Chromosome& b, const Slice& segment,
                                                      Rng& rng) {
  if (a.digits.size() != b.digits.size())
    throw std::invalid_argument("crossover parents differ in length (" + std::to_string(a.digits.size()) + " vs " +
                                std::to_string(b.digits.size()) + ")");
  if (segment.end() > a.digits.size()) throw std::out_of_range("crossover segment exceeds the chromosome");
  std::pair<Chromosome, Chromosome> children{a, b};
  if (segment.size < 2) return children;
  const auto cut = segment.offset + static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(segment.size) - 1));
  for (std::size_t g = cut; g < segment.end(); ++g) std::swap(children.first.digits[g], children.second.digits[g]);
  return children;
}

std::pair<Chromosome, Chromosome> one_point_crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
  return one_point_crossover(a, b, Slice{0, a.digits.size()}, rng);
}

Chromosome mutate(Chromosome c, const Slice& active, double probability, Rng& rng) {
  if (active.end() > c.digits.size()) throw std::out_of_range("mutation slice exceeds the chromosome");
  for (std::size_t g = active.offset; g < active.end(); ++g)
    if (uniform01(rng) < probability) c.digits[g] = static_cast<std::uint8_t>(uniform_int(rng, 0, 9));
  return c;
}

GaProblem::GaProblem(const DynamicGame& g, const GaConfig& config)
    : game(g),
      space(g, config.space),
      scheme(config.magnitude_digits, config.decimal_position, static_cast<std::size_t>(space.dimension()),
             space.player_slices()) {
  const double limit = scheme.max_magnitude();
  for (Eigen::Index v = 0; v < space.dimension(); ++v)
    if (std::abs(space.lower()[v]) > limit || std::abs(space.upper()[v]) > limit)
      throw ConfigError("ga: bounds of variable " + std::to_string(v) + " exceed the encodable magnitude " +
                        std::to_string(limit) + "; increase magnitude_digits or decimal_position");
}

namespace {

Vector decoded_slice(const GaProblem& problem, const Chromosome& c, int player) {
  return problem.space.segment(decode(c, problem.scheme), player);
}

[[noreturn]] void rethrow_with_context(const ModelError& e, int generation, int player) {
  throw ModelError("generation " + std::to_string(generation) + ", player " + std::to_string(player) + ": " +
                   e.what());
}

}  // namespace

GaState initialize_ga(const GaProblem& problem, const GaConfig& config) {
  config.validate();
  GaState state;
  state.rng.seed(config.rng_seed);
  const int n = problem.game.num_players();
  const auto& space = problem.space;
  state.subpopulations.resize(n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < config.population_size; ++p)
      state.subpopulations[i].push_back(random_chromosome(problem.scheme, space.lower(), space.upper(), state.rng));

  state.best = Vector::Zero(space.dimension());
  for (int i = 0; i < n; ++i) {
    state.best_chromosomes.push_back(state.subpopulations[i].front());
    const Slice& s = space.player_slice(i);
    state.best.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.size)) =
        decoded_slice(problem, state.best_chromosomes[i], i);
  }
  state.best = space.clamp(state.best);
  try {
    state.best_costs = joint_costs(problem.game, space, state.best);
  } catch (const ModelError& e) {
    rethrow_with_context(e, 0, -1);
  }
  state.stagnation.assign(n, 0);
  state.last_steps.assign(n, {});
  return state;
}

GaState coevolve_generation(const GaProblem& problem, GaState state, const GaConfig& config) {
  const int n = problem.game.num_players();
  const auto& space = problem.space;
  const std::size_t pop = state.subpopulations.front().size();

  for (int i = 0; i < n; ++i) {
    auto& population = state.subpopulations[i];
    const Slice genes = problem.scheme.gene_slice(i);
    GaPlayerStep step;

    // Fitness of each candidate: its player-i genes against the others' broadcast bests.
    std::vector<Vector> candidates(pop);
    std::vector<double> costs(pop);
    try {
      step.entry_cost = player_cost(problem.game, space, state.best, i);
      parallel_for(pop, config.threads, [&](std::size_t p) {
        candidates[p] = space.clamp(space.splice(state.best, i, decoded_slice(problem, population[p], i)));
        costs[p] = player_cost(problem.game, space, candidates[p], i);
      });
    } catch (const ModelError& e) {
      rethrow_with_context(e, state.generation, i);
    }

    const auto best_it = std::min_element(costs.begin(), costs.end());
    const auto best_idx = static_cast<std::size_t>(best_it - costs.begin());
    double best_cost = step.entry_cost;
    if (*best_it < step.entry_cost) {
      best_cost = *best_it;
      state.best_chromosomes[i] = population[best_idx];
      state.best = candidates[best_idx];
      state.stagnation[i] = 0;
    } else {
      ++state.stagnation[i];
    }
    state.best_costs[i] = best_cost;
    step.exit_cost = best_cost;
    step.mean_cost = std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(pop);

    step.offset = config.offset_mode == FitnessOffsetMode::adaptive ? adaptive_offset(costs) : config.fixed_offset;
    std::vector<double> fitness(pop);
    for (std::size_t p = 0; p < pop; ++p) fitness[p] = fitness_transform(costs[p], step.offset);

    std::vector<Chromosome> next;
    next.reserve(pop);
    if (config.elitism) next.push_back(state.best_chromosomes[i]);
    while (next.size() < pop) {
      const Chromosome& a = population[roulette_select(fitness, state.rng)];
      const Chromosome& b = population[roulette_select(fitness, state.rng)];
      std::pair<Chromosome, Chromosome> kids{a, b};
      if (uniform01(state.rng) < config.crossover_prob) kids = one_point_crossover(a, b, genes, state.rng);
      next.push_back(mutate(std::move(kids.first), genes, config.mutation_prob, state.rng));
      if (next.size() < pop) next.push_back(mutate(std::move(kids.second), genes, config.mutation_prob, state.rng));
    }
    population = std::move(next);
    state.last_steps[i] = step;
  }

  ++state.generation;
  try {
    state.history.push_back(joint_costs(problem.game, space, state.best));
  } catch (const ModelError& e) {
    rethrow_with_context(e, state.generation, -1);
  }
  return state;
}

SolveResult run_ga(const DynamicGame& game, const GaConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const GaProblem problem(game, config);

  SolveResult result;
  result.solver = "ga";
  result.seed = config.rng_seed;
  auto finish = [&](const GaState& state) {
    result.joint = state.best;
    result.profile = problem.space.to_profile(state.best);
    result.costs = state.history.empty() ? state.best_costs : state.history.back();
    result.iterations = state.generation;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  GaState state = initialize_ga(problem, config);
  while (state.generation < config.max_generations) {
    try {
      state = coevolve_generation(problem, state, config);
    } catch (const ModelError& e) {
      finish(state);
      throw SolveAborted(std::string("ga aborted: ") + e.what(), result);
    }
    const Vector& costs = state.history.back();
    for (int i = 0; i < game.num_players(); ++i)
      result.trace.push_back({state.generation, i, costs[i], state.last_steps[i].mean_cost, state.stagnation[i]});
    result.fitness_offset = state.last_steps.back().offset;
    if (stall_reached(state.history, config.stall_window, config.stall_tolerance)) {
      result.stalled = true;
      break;
    }
  }
  finish(state);
  return result;
}

}  // namespace dyngame
