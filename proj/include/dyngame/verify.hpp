#pragma once

#include "dyngame/lq_game.hpp"
#include "dyngame/local_search.hpp"
#include "dyngame/strategy_space.hpp"

#include <cstdint>

namespace dyngame {

/// Effort spent searching for a profitable unilateral deviation.
struct BestResponseBudget {
  /// Uniform random restarts inside the bounds, in addition to the start at the current strategy.
  int multistarts = 8;
  SimplexConfig simplex{.max_iterations = 4000};
  std::uint64_t seed = 0x5eed;
};

struct BestResponse {
  /// max(0, J_i(profile) - best deviation cost). A lower bound on the true gap.
  double gap = 0.0;
  double current_cost = 0.0;
  double deviation_cost = 0.0;
  /// Joint vector with the player's slice replaced by the best deviation found.
  Vector deviation;
  int starts = 0;
  int iterations = 0;
};

struct NashReport {
  double tolerance = 0.0;
  bool certified = false;
  /// Per-player results, indexed by player.
  std::vector<BestResponse> players;
  int multistarts = 0;
  int simplex_max_iterations = 0;

  Vector gaps() const;
  double max_gap() const;
  /// Players whose gap exceeds the tolerance.
  std::vector<int> violators() const;
};

/// Searches player's strategy slice with the others held at `joint`. Deviations
/// are evaluated at the clamped point, so they stay within the strategy bounds.
BestResponse best_response_gap(const DynamicGame& game, const StrategySpace& space, const Vector& joint, int player,
                               const BestResponseBudget& budget = {});

/// certified iff every player's best-response gap is at most `tolerance`.
NashReport certify_nash(const DynamicGame& game, const StrategySpace& space, const Vector& joint, double tolerance,
                        const BestResponseBudget& budget = {}, int threads = 1);

NashReport certify_nash(const DynamicGame& game, const StrategyProfile& profile, double tolerance,
                        const BestResponseBudget& budget = {}, const SpaceConfig& space = {});

/// Per-player quadratic J_i(u) = u' H u + 2 g' u + c over the stacked open-loop
/// control vector u = [u_1; ...; u_N], each u_i ordered by stage.
struct QuadraticCost {
  Matrix hessian;   // H (symmetric)
  Vector gradient;  // g
  double constant = 0.0;
};

std::vector<QuadraticCost> lq_cost_quadratics(const LqSpec& spec);

class SingularNashSystem : public std::runtime_error {
 public:
  SingularNashSystem(const std::string& what, double rcond) : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Exact open-loop Nash equilibrium of an LQ game: the stationarity conditions
/// dJ_i/du_i = 0 of all players stacked into one square linear system.
/// Throws SingularNashSystem when the system is (numerically) singular.
StrategyProfile lq_openloop_nash(const LqSpec& spec);

}  // namespace dyngame
