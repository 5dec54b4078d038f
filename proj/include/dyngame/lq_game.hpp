#pragma once

#include "dyngame/game.hpp"

#include <cstdint>

namespace dyngame {

/// Quadratic cost data of one player in an LQ game. Stage k charges the
/// post-transition state x_{k+1}:
///   (x_{k+1} - r)' Q (x_{k+1} - r) + sum_j u_{j,k}' R_j u_{j,k}
/// and the terminal cost is (x_K - r)' Qf (x_K - r).
struct LqPlayerCost {
  Matrix state_weight;                  // Q, positive semidefinite
  Matrix terminal_weight;               // Qf, empty means zero
  Vector state_target;                  // r, empty means zero
  std::vector<Matrix> control_weights;  // R_j per player; own entry positive definite, empty means zero
};

struct LqSpec {
  int horizon = 1;
  Vector initial_state;
  /// A_k; one entry means time-invariant.
  std::vector<Matrix> dynamics;
  /// input_maps[player] holds B_{i,k}; one entry means time-invariant.
  std::vector<std::vector<Matrix>> input_maps;
  std::vector<LqPlayerCost> costs;
  Interval control_bound{-5.0, 5.0};

  int num_players() const { return static_cast<int>(costs.size()); }
  int state_dim() const { return static_cast<int>(initial_state.size()); }
  int control_dim(int player) const { return static_cast<int>(input_maps.at(player).front().cols()); }
  const Matrix& A(int stage) const { return dynamics.size() == 1 ? dynamics.front() : dynamics.at(stage); }
  const Matrix& B(int player, int stage) const {
    const auto& maps = input_maps.at(player);
    return maps.size() == 1 ? maps.front() : maps.at(stage);
  }
  /// Q_i, Qf_i, r_i and R_ij with empty entries expanded to zeros.
  Matrix terminal_weight(int player) const;
  Vector state_target(int player) const;
  Matrix control_weight(int player, int other) const;

  /// Throws std::invalid_argument on wrong sizes, asymmetric weights, an
  /// indefinite state weight or a non-positive-definite own-control weight.
  void validate() const;
};

/// x_{k+1} = A_k x_k + sum_i B_{i,k} u_{i,k} with the quadratic costs of `spec`.
DynamicGame build_lq_game(const LqSpec& spec);

/// The hand-checkable scalar game x1 = x0 + u1 + u2, J_i = x1^2 + u_i^2,
/// x0 = 1, K = 1. Its open-loop Nash point is u1 = u2 = -1/3.
LqSpec scalar_two_player_lq();

struct RandomLqOptions {
  int num_players = 2;
  int horizon = 3;
  int state_dim = 2;
  int control_dim = 1;
  /// Scale of the input matrices; smaller values weaken the coupling between players.
  double input_scale = 0.6;
  Interval control_bound{-5.0, 5.0};
};

/// Seeded strictly convex LQ instance: stable A, random B, Q = M M' + 0.2 I,
/// diagonal own-control weights, state targets and initial state in [-1, 1].
LqSpec random_lq_spec(std::uint64_t seed, const RandomLqOptions& options = {});

}  // namespace dyngame
