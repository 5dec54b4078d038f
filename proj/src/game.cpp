#include "dyngame/game.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace dyngame {

namespace {

[[noreturn]] void fail_dimension(const std::string& what) { throw DimensionError(what); }

void check_definition(const GameDefinition& def) {
  if (def.num_players < 1) fail_dimension("game must have at least one player");
  if (def.horizon < 0) fail_dimension("horizon must be non-negative");
  if (def.state_dim < 1) fail_dimension("state dimension must be positive");
  if (def.initial_state.size() != def.state_dim)
    fail_dimension("initial state has dimension " + std::to_string(def.initial_state.size()) +
                   ", expected " + std::to_string(def.state_dim));
  const auto n = static_cast<std::size_t>(def.num_players);
  if (def.control_dims.size() != n) fail_dimension("control_dims must list one entry per player");
  if (def.stage_costs.size() != n || def.terminal_costs.size() != n)
    fail_dimension("stage and terminal costs must be given for every player");
  if (!def.transition) fail_dimension("transition map is missing");
  if (def.control_bounds.size() != n) fail_dimension("control_bounds must list one entry per player");
  for (std::size_t i = 0; i < n; ++i) {
    if (def.control_dims[i] < 1)
      fail_dimension("player " + std::to_string(i) + " has non-positive control dimension");
    if (!def.stage_costs[i] || !def.terminal_costs[i])
      fail_dimension("player " + std::to_string(i) + " has an empty cost callable");
    if (def.control_bounds[i].size() != static_cast<std::size_t>(def.horizon))
      fail_dimension("player " + std::to_string(i) + " needs one control interval per stage");
    for (std::size_t k = 0; k < def.control_bounds[i].size(); ++k) {
      const Interval& b = def.control_bounds[i][k];
      if (!(b.lower <= b.upper))
        throw std::invalid_argument("player " + std::to_string(i) + " stage " + std::to_string(k) +
                                    ": empty control interval");
    }
  }
}

}  // namespace

DynamicGame::DynamicGame(GameDefinition def) : def_(std::move(def)) { check_definition(def_); }

Vector DynamicGame::step(int stage, const Vector& state, JointControls controls) const {
  Vector next = def_.transition(stage, state, controls);
  if (next.size() != def_.state_dim)
    fail_dimension("transition at stage " + std::to_string(stage) + " returned dimension " +
                   std::to_string(next.size()) + ", expected " + std::to_string(def_.state_dim));
  return next;
}

StrategyProfile StrategyProfile::zeros(const DynamicGame& game, StrategyMode mode) {
  StrategyProfile p;
  p.mode = mode;
  const int n = game.num_players();
  const int k = game.horizon();
  if (mode == StrategyMode::open_loop) {
    p.controls.resize(n);
    for (int i = 0; i < n; ++i) p.controls[i].assign(k, Vector::Zero(game.control_dim(i)));
  } else {
    p.feedback.resize(n);
    for (int i = 0; i < n; ++i)
      p.feedback[i].assign(k, FeedbackLaw{Matrix::Zero(game.control_dim(i), game.state_dim()),
                                          Vector::Zero(game.control_dim(i))});
  }
  return p;
}

Trajectory simulate(const DynamicGame& game, const StrategyProfile& profile) {
  const int n = game.num_players();
  const int horizon = game.horizon();
  if (profile.num_players() != n)
    fail_dimension("profile has " + std::to_string(profile.num_players()) + " players, game has " +
                   std::to_string(n));

  auto where = [](int i, int k) {
    return "player " + std::to_string(i) + " stage " + std::to_string(k);
  };

  for (int i = 0; i < n; ++i) {
    const std::size_t len = profile.mode == StrategyMode::open_loop ? profile.controls[i].size()
                                                                    : profile.feedback[i].size();
    if (len != static_cast<std::size_t>(horizon))
      fail_dimension("player " + std::to_string(i) + " strategy has " + std::to_string(len) +
                     " stages, expected " + std::to_string(horizon));
  }

  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.joint_controls.reserve(horizon);
  traj.states.push_back(game.initial_state());

  std::vector<Vector> joint(n);
  for (int k = 0; k < horizon; ++k) {
    const Vector& x = traj.states.back();
    for (int i = 0; i < n; ++i) {
      const int m = game.control_dim(i);
      if (profile.mode == StrategyMode::open_loop) {
        const Vector& u = profile.controls[i][k];
        if (u.size() != m)
          fail_dimension(where(i, k) + ": control has dimension " + std::to_string(u.size()) +
                         ", expected " + std::to_string(m));
        joint[i] = u;
      } else {
        const FeedbackLaw& law = profile.feedback[i][k];
        if (law.gain.rows() != m || law.gain.cols() != game.state_dim() || law.offset.size() != m)
          fail_dimension(where(i, k) + ": feedback gain must be " + std::to_string(m) + "x" +
                         std::to_string(game.state_dim()) + " with offset of size " +
                         std::to_string(m));
        joint[i] = law.gain * x + law.offset;
      }
    }
    traj.states.push_back(game.step(k, x, joint));
    traj.joint_controls.push_back(joint);
  }
  return traj;
}

Vector costs_along(const DynamicGame& game, const Trajectory& traj) {
  const int n = game.num_players();
  const int horizon = game.horizon();
  Vector costs = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int k = 0; k < horizon; ++k) total += game.stage_cost(i, k, traj.states[k], traj.joint_controls[k]);
    total += game.terminal_cost(i, traj.states[horizon]);
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "model defect: non-finite cost " << total << " for player " << i << " in game '"
          << game.name() << "'";
      throw ModelError(msg.str());
    }
    costs[i] = total;
  }
  return costs;
}

double evaluate_cost(const DynamicGame& game, const StrategyProfile& profile, int player) {
  if (player < 0 || player >= game.num_players())
    throw std::out_of_range("player index " + std::to_string(player) + " out of range");
  const Trajectory traj = simulate(game, profile);
  const int horizon = game.horizon();
  double total = 0.0;
  for (int k = 0; k < horizon; ++k)
    total += game.stage_cost(player, k, traj.states[k], traj.joint_controls[k]);
  total += game.terminal_cost(player, traj.states[horizon]);
  if (!std::isfinite(total))
    throw ModelError("model defect: non-finite cost for player " + std::to_string(player) +
                     " in game '" + game.name() + "'");
  return total;
}

Vector evaluate_all_costs(const DynamicGame& game, const StrategyProfile& profile) {
  return costs_along(game, simulate(game, profile));
}

}  // namespace dyngame
