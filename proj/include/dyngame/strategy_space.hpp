#pragma once

#include "dyngame/game.hpp"

#include <optional>

namespace dyngame {

/// Search-space settings shared by the solvers and the verifier.
struct SpaceConfig {
  StrategyMode mode = StrategyMode::open_loop;
  /// Feedback mode only: bounds on every gain entry.
  Interval gain_bounds{-2.0, 2.0};
  /// Feedback mode only: bounds on offsets; defaults to the stage control bounds.
  std::optional<Interval> offset_bounds;
};

/// Flat real-vector view of a strategy profile. Each player owns one
/// contiguous slice. Open-loop slices hold u_{i,0..K-1}; feedback slices hold,
/// per stage, the gain row-major followed by the offset.
class StrategySpace {
 public:
  StrategySpace(const DynamicGame& game, const SpaceConfig& config = {});

  StrategyMode mode() const { return mode_; }
  int num_players() const { return static_cast<int>(slices_.size()); }
  Eigen::Index dimension() const { return lower_.size(); }
  const Slice& player_slice(int player) const { return slices_.at(player); }
  const std::vector<Slice>& player_slices() const { return slices_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  Vector clamp(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }
  /// Midpoint of the bounds.
  Vector center() const { return 0.5 * (lower_ + upper_); }

  StrategyProfile to_profile(const Vector& x) const;
  Vector from_profile(const StrategyProfile& profile) const;

  /// Copy of `base` with player's slice replaced by `values`.
  Vector splice(const Vector& base, int player, const Eigen::Ref<const Vector>& values) const;
  auto segment(const Vector& x, int player) const {
    const Slice& s = slices_.at(player);
    return x.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.size));
  }

 private:
  StrategyMode mode_;
  int horizon_;
  int state_dim_;
  std::vector<int> control_dims_;
  std::vector<Slice> slices_;
  Vector lower_;
  Vector upper_;
};

/// Costs of the clamped joint point.
Vector joint_costs(const DynamicGame& game, const StrategySpace& space, const Vector& joint);

/// J_i of the clamped joint point.
double player_cost(const DynamicGame& game, const StrategySpace& space, const Vector& joint, int player);

}  // namespace dyngame
