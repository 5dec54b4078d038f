#include "dyngame/strategy_space.hpp"

namespace dyngame {

StrategySpace::StrategySpace(const DynamicGame& game, const SpaceConfig& config)
    : mode_(config.mode), horizon_(game.horizon()), state_dim_(game.state_dim()), control_dims_(game.control_dims()) {
  if (config.gain_bounds.lower > config.gain_bounds.upper) throw std::invalid_argument("gain bounds are empty");
  if (config.offset_bounds && config.offset_bounds->lower > config.offset_bounds->upper)
    throw std::invalid_argument("offset bounds are empty");

  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t offset = 0;
  for (int i = 0; i < game.num_players(); ++i) {
    const int m = game.control_dim(i);
    const std::size_t start = offset;
    for (int k = 0; k < horizon_; ++k) {
      const Interval ub = game.control_bounds(i, k);
      if (mode_ == StrategyMode::linear_feedback) {
        for (int e = 0; e < m * state_dim_; ++e) {
          lo.push_back(config.gain_bounds.lower);
          hi.push_back(config.gain_bounds.upper);
        }
        const Interval ob = config.offset_bounds.value_or(ub);
        for (int e = 0; e < m; ++e) {
          lo.push_back(ob.lower);
          hi.push_back(ob.upper);
        }
        offset += static_cast<std::size_t>(m * state_dim_ + m);
      } else {
        for (int e = 0; e < m; ++e) {
          lo.push_back(ub.lower);
          hi.push_back(ub.upper);
        }
        offset += static_cast<std::size_t>(m);
      }
    }
    slices_.push_back({start, offset - start});
  }
  lower_ = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  upper_ = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
}

StrategyProfile StrategySpace::to_profile(const Vector& x) const {
  if (x.size() != dimension())
    throw DimensionError("strategy vector has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dimension()));
  StrategyProfile p;
  p.mode = mode_;
  const int n = num_players();
  if (mode_ == StrategyMode::open_loop)
    p.controls.resize(n);
  else
    p.feedback.resize(n);

  for (int i = 0; i < n; ++i) {
    const int m = control_dims_[i];
    Eigen::Index at = static_cast<Eigen::Index>(slices_[i].offset);
    for (int k = 0; k < horizon_; ++k) {
      if (mode_ == StrategyMode::open_loop) {
        p.controls[i].push_back(x.segment(at, m));
        at += m;
      } else {
        FeedbackLaw law;
        law.gain = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            x.data() + at, m, state_dim_);
        at += m * state_dim_;
        law.offset = x.segment(at, m);
        at += m;
        p.feedback[i].push_back(std::move(law));
      }
    }
  }
  return p;
}

Vector StrategySpace::from_profile(const StrategyProfile& profile) const {
  if (profile.mode != mode_) throw DimensionError("profile mode does not match the strategy space");
  if (profile.num_players() != num_players())
    throw DimensionError("profile has " + std::to_string(profile.num_players()) + " players, expected " +
                         std::to_string(num_players()));
  Vector x(dimension());
  for (int i = 0; i < num_players(); ++i) {
    const int m = control_dims_[i];
    const auto where = [&](int k) { return "player " + std::to_string(i) + " stage " + std::to_string(k); };
    const std::size_t stages = mode_ == StrategyMode::open_loop ? profile.controls[i].size() : profile.feedback[i].size();
    if (stages != static_cast<std::size_t>(horizon_))
      throw DimensionError("player " + std::to_string(i) + " has " + std::to_string(stages) + " stages, expected " +
                           std::to_string(horizon_));
    Eigen::Index at = static_cast<Eigen::Index>(slices_[i].offset);
    for (int k = 0; k < horizon_; ++k) {
      if (mode_ == StrategyMode::open_loop) {
        const Vector& u = profile.controls[i][k];
        if (u.size() != m) throw DimensionError(where(k) + ": control has the wrong dimension");
        x.segment(at, m) = u;
        at += m;
      } else {
        const FeedbackLaw& law = profile.feedback[i][k];
        if (law.gain.rows() != m || law.gain.cols() != state_dim_ || law.offset.size() != m)
          throw DimensionError(where(k) + ": feedback law has the wrong shape");
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < state_dim_; ++c) x[at++] = law.gain(r, c);
        x.segment(at, m) = law.offset;
        at += m;
      }
    }
  }
  return x;
}

Vector StrategySpace::splice(const Vector& base, int player, const Eigen::Ref<const Vector>& values) const {
  const Slice& s = slices_.at(player);
  if (values.size() != static_cast<Eigen::Index>(s.size))
    throw DimensionError("player " + std::to_string(player) + " slice has size " + std::to_string(s.size) +
                         ", got " + std::to_string(values.size()));
  Vector out = base;
  out.segment(static_cast<Eigen::Index>(s.offset), values.size()) = values;
  return out;
}

Vector joint_costs(const DynamicGame& game, const StrategySpace& space, const Vector& joint) {
  return evaluate_all_costs(game, space.to_profile(space.clamp(joint)));
}

double player_cost(const DynamicGame& game, const StrategySpace& space, const Vector& joint, int player) {
  return evaluate_cost(game, space.to_profile(space.clamp(joint)), player);
}

}  // namespace dyngame
