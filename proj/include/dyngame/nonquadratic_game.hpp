#pragma once

#include "dyngame/lq_game.hpp"

#include <array>

namespace dyngame {

/// Two-player scalar-state game with a quadratic core, a quartic own-control
/// penalty and an exponential state penalty:
///
///   x_{k+1} = a x_k + b_1 u_{1,k} + b_2 u_{2,k}
///   g_{i,k} = q_i (x_{k+1} - t_i)^2 + r_i u_{i,k}^2 + s_i u_{j,k}^2
///             + p_i u_{i,k}^4 + e_i exp(gamma x_{k+1})
///   h_i     = qf_i (x_K - t_i)^2
///
/// With p_i = e_i = 0 the game is LQ and `to_lq_spec` gives the same costs.
struct NonquadraticSpec {
  int horizon = 3;
  double initial_state = 1.0;
  double drift = 1.0;
  std::array<double, 2> input_gain{1.0, 1.0};
  std::array<double, 2> state_weight{1.0, 1.0};
  std::array<double, 2> terminal_weight{1.0, 1.0};
  std::array<double, 2> state_target{1.0, -1.0};
  std::array<double, 2> control_weight{1.0, 1.0};
  std::array<double, 2> cross_control_weight{0.0, 0.0};
  std::array<double, 2> quartic_weight{0.5, 0.5};
  std::array<double, 2> exp_weight{0.1, 0.1};
  double exp_rate = 1.0;
  Interval control_bound{-2.0, 2.0};
  /// Gain magnitude assumed when scanning feedback strategies for finite costs.
  double feedback_gain_limit = 2.0;

  /// Rejects negative weights and, by scanning the reachable state range,
  /// coefficients that overflow inside the declared bounds.
  void validate() const;
  LqSpec to_lq_spec() const;
};

DynamicGame build_two_player_nonquadratic(const NonquadraticSpec& spec);

}  // namespace dyngame
