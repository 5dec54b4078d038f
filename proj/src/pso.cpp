#include "dyngame/pso.hpp"

#include "dyngame/parallel.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace dyngame {

void PsoConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("pso: " + what); };
  if (swarm_size < 1) fail("swarm_size must be positive");
  if (c1 < 0 || c2 < 0) fail("acceleration coefficients must be non-negative");
  if (!(omega_min <= omega_max)) fail("omega_min must not exceed omega_max");
  if (t_max < 1) fail("t_max must be at least 1");
  if (v_max && !(*v_max > 0)) fail("v_max must be positive");
  if (!(v_max_fraction > 0)) fail("v_max_fraction must be positive");
  if (hybrid_iter < 0) fail("hybrid_iter must be non-negative");
  if (stagnation_window < 1) fail("stagnation_window must be at least 1");
  if (!(mutation_fraction >= 0 && mutation_fraction <= 1)) fail("mutation_fraction must be in [0, 1]");
  if (stall_window < 1) fail("stall_window must be at least 1");
  if (!(stall_tolerance >= 0)) fail("stall_tolerance must be non-negative");
  if (threads < 1) fail("threads must be at least 1");
  local_search.validate();
}

double inertia_at(int t, const PsoConfig& config) {
  if (t < 0 || t > config.t_max)
    throw std::out_of_range("inertia_at: t = " + std::to_string(t) + " outside [0, " + std::to_string(config.t_max) +
                            "]");
  if (t == config.t_max) return config.omega_min;
  return config.omega_max - (config.omega_max - config.omega_min) * static_cast<double>(t) / config.t_max;
}

Vector velocity_limits(const StrategySpace& space, const PsoConfig& config) {
  if (config.v_max) return Vector::Constant(space.dimension(), *config.v_max);
  Vector limits = config.v_max_fraction * (space.upper() - space.lower());
  for (Eigen::Index j = 0; j < limits.size(); ++j)
    if (!(limits[j] > 0)) limits[j] = config.v_max_fraction;
  return limits;
}

Vector update_velocity(const Particle& p, const Vector& gbest, int t, const PsoConfig& config, const Vector& v_max,
                       Rng& rng, const Slice& active) {
  const double omega = inertia_at(t, config);
  Vector v = p.velocity;
  double r1 = uniform01(rng);
  double r2 = uniform01(rng);
  for (std::size_t j = active.offset; j < active.end(); ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    if (config.per_dimension_random && j != active.offset) {
      r1 = uniform01(rng);
      r2 = uniform01(rng);
    }
    const double next = omega * v[e] + config.c1 * r1 * (p.pbest_position[e] - p.position[e]) +
                        config.c2 * r2 * (gbest[e] - p.position[e]);
    v[e] = std::clamp(next, -v_max[e], v_max[e]);
  }
  return v;
}

Vector update_position(const Particle& p, const Slice& active) {
  Vector x = p.position;
  const auto off = static_cast<Eigen::Index>(active.offset);
  const auto len = static_cast<Eigen::Index>(active.size);
  x.segment(off, len) += p.velocity.segment(off, len);
  return x;
}

Vector hybrid_refine(const DynamicGame& game, const StrategySpace& space, const Vector& position, int player,
                     const Vector& others_best, int hybrid_iter, const SimplexConfig& simplex) {
  if (hybrid_iter < 1) throw std::invalid_argument("hybrid_refine: hybrid_iter must be at least 1");
  SimplexConfig cfg = simplex;
  cfg.max_iterations = hybrid_iter;
  auto objective = [&](const Vector& values) {
    return player_cost(game, space, space.splice(others_best, player, values), player);
  };
  try {
    const auto r = simplex_minimize<double>(objective, Vector(space.segment(position, player)), cfg);
    return space.splice(position, player, r.point);
  } catch (const std::exception& e) {
    std::clog << "warning: hybrid refinement for player " << player << " failed (" << e.what()
              << "); keeping the unrefined position\n";
    return position;
  }
}

void stagnation_mutate(Swarm& swarm, const StrategySpace& space, const PsoConfig& config, Rng& rng) {
  if (swarm.stagnation < config.stagnation_window) return;
  swarm.stagnation = 0;

  std::vector<int> candidates;
  for (int p = 0; p < static_cast<int>(swarm.particles.size()); ++p)
    if (std::find(swarm.gbest_holder.begin(), swarm.gbest_holder.end(), p) == swarm.gbest_holder.end())
      candidates.push_back(p);
  const auto wanted = static_cast<std::size_t>(std::ceil(config.mutation_fraction * config.swarm_size));
  const std::size_t count = std::min(wanted, candidates.size());

  // Partial Fisher-Yates draw of `count` distinct particles.
  for (std::size_t c = 0; c < count; ++c) {
    const auto pick = c + static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(candidates.size() - c) - 1));
    std::swap(candidates[c], candidates[pick]);
    Particle& particle = swarm.particles[static_cast<std::size_t>(candidates[c])];
    for (Eigen::Index j = 0; j < particle.position.size(); ++j)
      particle.position[j] = uniform_in(rng, space.lower()[j], space.upper()[j]);
    particle.velocity.setZero();
    particle.pbest_position = particle.position;
    particle.pbest_cost.setConstant(std::numeric_limits<double>::infinity());
  }
}

SolveResult run_pso(const DynamicGame& game, const PsoConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const StrategySpace space(game, config.space);
  const Vector v_max = velocity_limits(space, config);
  const int n = game.num_players();
  const auto size = static_cast<std::size_t>(config.swarm_size);
  const Eigen::Index dim = space.dimension();

  Rng rng(config.rng_seed);
  Swarm swarm;
  swarm.particles.resize(size);
  for (Particle& p : swarm.particles) {
    p.position.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) p.position[j] = uniform_in(rng, space.lower()[j], space.upper()[j]);
    p.velocity = Vector::Zero(dim);
    p.pbest_position = p.position;
    p.pbest_cost = Vector::Constant(n, std::numeric_limits<double>::infinity());
  }
  swarm.gbest_position = space.clamp(swarm.particles.front().position);
  swarm.gbest_holder.assign(n, -1);

  SolveResult result;
  result.solver = config.hybrid_iter > 0 ? "hybrid-pso" : "pso";
  result.seed = config.rng_seed;
  std::vector<Vector> history;

  auto finish = [&] {
    result.joint = swarm.gbest_position;
    result.profile = space.to_profile(swarm.gbest_position);
    result.costs = history.empty() ? swarm.gbest_costs : history.back();
    result.iterations = swarm.iteration;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  try {
    swarm.gbest_costs = joint_costs(game, space, swarm.gbest_position);
    std::vector<double> costs(size);
    Vector mean_costs(n);

    for (int t = 0; t < config.t_max; ++t) {
      bool improved = false;
      for (int i = 0; i < n; ++i) {
        const Slice& active = space.player_slice(i);
        const auto off = static_cast<Eigen::Index>(active.offset);
        const auto len = static_cast<Eigen::Index>(active.size);
        const Vector& gbest = swarm.gbest_position;
        swarm.gbest_costs[i] = player_cost(game, space, gbest, i);

        // Opponents may have moved since the last visit, so stored pbest costs are refreshed.
        parallel_for(size, config.threads, [&](std::size_t p) {
          Particle& particle = swarm.particles[p];
          particle.pbest_cost[i] =
              player_cost(game, space, space.splice(gbest, i, particle.pbest_position.segment(off, len)), i);
        });

        for (Particle& particle : swarm.particles) {
          particle.velocity = update_velocity(particle, gbest, t, config, v_max, rng, active);
          particle.position = update_position(particle, active);
        }

        auto evaluate = [&](std::size_t p) {
          costs[p] = player_cost(game, space, space.splice(gbest, i, swarm.particles[p].position.segment(off, len)), i);
        };
        if (config.hybrid_iter > 0 && !config.refine_best_only) {
          parallel_for(size, config.threads, [&](std::size_t p) {
            Particle& particle = swarm.particles[p];
            particle.position = hybrid_refine(game, space, particle.position, i, gbest, config.hybrid_iter,
                                              config.local_search);
            evaluate(p);
          });
        } else {
          parallel_for(size, config.threads, evaluate);
          if (config.hybrid_iter > 0) {
            const auto best = static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
            Particle& particle = swarm.particles[best];
            particle.position = hybrid_refine(game, space, particle.position, i, gbest, config.hybrid_iter,
                                              config.local_search);
            evaluate(best);
          }
        }

        std::size_t best = 0;
        for (std::size_t p = 0; p < size; ++p) {
          Particle& particle = swarm.particles[p];
          if (costs[p] < particle.pbest_cost[i]) {
            particle.pbest_cost[i] = costs[p];
            particle.pbest_position.segment(off, len) = particle.position.segment(off, len);
          }
          if (costs[p] < costs[best]) best = p;
        }
        if (costs[best] < swarm.gbest_costs[i]) {
          swarm.gbest_position = space.clamp(space.splice(gbest, i, swarm.particles[best].position.segment(off, len)));
          swarm.gbest_costs[i] = costs[best];
          swarm.gbest_holder[i] = static_cast<int>(best);
          improved = true;
        }
        mean_costs[i] = std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(size);
      }

      ++swarm.iteration;
      swarm.stagnation = improved ? 0 : swarm.stagnation + 1;
      history.push_back(joint_costs(game, space, swarm.gbest_position));
      for (int i = 0; i < n; ++i)
        result.trace.push_back({swarm.iteration, i, history.back()[i], mean_costs[i], swarm.stagnation});
      stagnation_mutate(swarm, space, config, rng);
      if (stall_reached(history, config.stall_window, config.stall_tolerance)) {
        result.stalled = true;
        break;
      }
    }
  } catch (const ModelError& e) {
    finish();
    throw SolveAborted("pso aborted at iteration " + std::to_string(swarm.iteration) + ": " + e.what(), result);
  }
  finish();
  return result;
}

}  // namespace dyngame
