#pragma once

#include "dyngame/local_search.hpp"
#include "dyngame/random.hpp"
#include "dyngame/solve_result.hpp"
#include "dyngame/strategy_space.hpp"

#include <optional>

namespace dyngame {

struct PsoConfig {
  int swarm_size = 30;
  double c1 = 1.8;
  double c2 = 1.8;
  double omega_max = 0.9;
  double omega_min = 0.4;
  int t_max = 2000;
  /// Absolute velocity clamp; when unset, v_max_fraction times each variable's bound width.
  std::optional<double> v_max;
  double v_max_fraction = 0.2;
  /// Simplex iterations per refinement; 0 disables the hybrid step.
  int hybrid_iter = 0;
  /// Refine only the best particle of each player step instead of every particle.
  bool refine_best_only = false;
  SimplexConfig local_search;
  int stagnation_window = 20;
  double mutation_fraction = 0.2;
  /// Draw r1, r2 per dimension instead of once per particle update.
  bool per_dimension_random = false;
  int stall_window = 200;
  double stall_tolerance = 1e-10;
  std::uint64_t rng_seed = 1;
  SpaceConfig space;
  int threads = 1;

  void validate() const;
};

struct Particle {
  Vector position;
  Vector velocity;
  Vector pbest_position;
  /// pbest_cost[i]: J_i of the pbest slice of player i when last evaluated.
  Vector pbest_cost;
};

struct Swarm {
  std::vector<Particle> particles;
  /// Broadcast best profile (clamped).
  Vector gbest_position;
  Vector gbest_costs;
  /// Particle that last moved each player's gbest slice, or -1.
  std::vector<int> gbest_holder;
  int iteration = 0;
  int stagnation = 0;
};

/// omega(t) = omega_max - (omega_max - omega_min) t / T_max.
double inertia_at(int t, const PsoConfig& config);

/// Per-variable velocity clamp for `space`.
Vector velocity_limits(const StrategySpace& space, const PsoConfig& config);

/// v <- omega(t) v + c1 r1 (pbest - x) + c2 r2 (gbest - x) on `active`, then
/// clamped componentwise to [-v_max, v_max]. Components outside `active` are returned unchanged.
Vector update_velocity(const Particle& particle, const Vector& gbest, int t, const PsoConfig& config,
                       const Vector& v_max, Rng& rng, const Slice& active);

/// x + v on `active`.
Vector update_position(const Particle& particle, const Slice& active);

/// Simplex refinement of the player's slice of `position`, others fixed at
/// `others_best`. The returned point never costs more than the input; on a
/// local-search failure the input is returned unchanged.
Vector hybrid_refine(const DynamicGame& game, const StrategySpace& space, const Vector& position, int player,
                     const Vector& others_best, int hybrid_iter, const SimplexConfig& simplex = {});

/// When the stagnation counter has reached the window, re-samples
/// ceil(mutation_fraction * swarm_size) particles that hold no gbest slice
/// uniformly inside the bounds, zeroes their velocities and resets the counter.
void stagnation_mutate(Swarm& swarm, const StrategySpace& space, const PsoConfig& config, Rng& rng);

SolveResult run_pso(const DynamicGame& game, const PsoConfig& config);

}  // namespace dyngame
