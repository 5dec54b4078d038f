#pragma once

#include "dyngame/types.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dyngame {

struct LqSpec;

/// Joint controls of all players at one stage, indexed by player.
using JointControls = std::span<const Vector>;

using TransitionFn = std::function<Vector(int stage, const Vector& state, JointControls controls)>;
using StageCostFn = std::function<double(int stage, const Vector& state, JointControls controls)>;
using TerminalCostFn = std::function<double(const Vector& state)>;

/// Everything needed to construct a DynamicGame. Players are indexed from 0.
struct GameDefinition {
  std::string name = "custom";
  int num_players = 0;
  int horizon = 0;
  int state_dim = 0;
  std::vector<int> control_dims;
  TransitionFn transition;
  std::vector<StageCostFn> stage_costs;
  std::vector<TerminalCostFn> terminal_costs;
  Vector initial_state;
  /// control_bounds[player][stage], applied to every component of the control.
  std::vector<std::vector<Interval>> control_bounds;
  /// Set when the game was built from quadratic data; enables the exact oracle.
  std::shared_ptr<const LqSpec> lq;
};

/// N-player, K-stage deterministic dynamic game. Immutable after construction,
/// so a single instance may be shared by concurrent evaluators.
class DynamicGame {
 public:
  explicit DynamicGame(GameDefinition def);

  const std::string& name() const { return def_.name; }
  int num_players() const { return def_.num_players; }
  int horizon() const { return def_.horizon; }
  int state_dim() const { return def_.state_dim; }
  int control_dim(int player) const { return def_.control_dims.at(player); }
  const std::vector<int>& control_dims() const { return def_.control_dims; }
  const Vector& initial_state() const { return def_.initial_state; }
  const Interval& control_bounds(int player, int stage) const {
    return def_.control_bounds.at(player).at(stage);
  }
  const LqSpec* lq_structure() const { return def_.lq.get(); }

  /// Applies the transition map and checks the returned dimension.
  Vector step(int stage, const Vector& state, JointControls controls) const;
  double stage_cost(int player, int stage, const Vector& state, JointControls controls) const {
    return def_.stage_costs[player](stage, state, controls);
  }
  double terminal_cost(int player, const Vector& state) const {
    return def_.terminal_costs[player](state);
  }

 private:
  GameDefinition def_;
};

enum class StrategyMode { open_loop, linear_feedback };

/// u = gain * x + offset
struct FeedbackLaw {
  Matrix gain;
  Vector offset;
};

struct StrategyProfile {
  StrategyMode mode = StrategyMode::open_loop;
  /// Open-loop: controls[player][stage].
  std::vector<std::vector<Vector>> controls;
  /// Linear feedback: feedback[player][stage].
  std::vector<std::vector<FeedbackLaw>> feedback;

  int num_players() const {
    return static_cast<int>(mode == StrategyMode::open_loop ? controls.size() : feedback.size());
  }

  static StrategyProfile zeros(const DynamicGame& game, StrategyMode mode = StrategyMode::open_loop);
};

struct Trajectory {
  /// K+1 states; states[0] is the initial state.
  std::vector<Vector> states;
  /// joint_controls[stage][player]: the controls actually applied.
  std::vector<std::vector<Vector>> joint_controls;

  const Vector& control(int player, int stage) const { return joint_controls.at(stage).at(player); }
};

/// Rolls the game forward. Feedback laws are evaluated on the realized state.
/// Throws DimensionError naming the offending player and stage.
Trajectory simulate(const DynamicGame& game, const StrategyProfile& profile);

/// J_i = sum_k g_{i,k}(x_k, u_k) + h_i(x_K). Throws ModelError on a non-finite cost.
double evaluate_cost(const DynamicGame& game, const StrategyProfile& profile, int player);

/// All players' costs from a single simulation.
Vector evaluate_all_costs(const DynamicGame& game, const StrategyProfile& profile);

/// Costs along an already simulated trajectory.
Vector costs_along(const DynamicGame& game, const Trajectory& trajectory);

}  // namespace dyngame
