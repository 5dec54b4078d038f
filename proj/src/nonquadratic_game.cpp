#include "dyngame/nonquadratic_game.hpp"

#include <cmath>
#include <sstream>

namespace dyngame {

namespace {

double stage_cost(const NonquadraticSpec& s, int i, double next_state, double own, double other) {
  const double e = next_state - s.state_target[i];
  const double own2 = own * own;
  // a zero weight switches the term off even where exp() overflows
  const double barrier = s.exp_weight[i] == 0.0 ? 0.0 : s.exp_weight[i] * std::exp(s.exp_rate * next_state);
  return s.state_weight[i] * e * e + s.control_weight[i] * own2 + s.cross_control_weight[i] * other * other +
         s.quartic_weight[i] * own2 * own2 + barrier;
}

}  // namespace

void NonquadraticSpec::validate() const {
  if (horizon < 0) throw std::invalid_argument("non-quadratic template: horizon must be non-negative");
  if (!(control_bound.lower <= control_bound.upper))
    throw std::invalid_argument("non-quadratic template: control bound interval is empty");
  for (int i = 0; i < 2; ++i) {
    const std::string who = "non-quadratic template, player " + std::to_string(i) + ": ";
    if (state_weight[i] < 0 || terminal_weight[i] < 0 || cross_control_weight[i] < 0 || quartic_weight[i] < 0 ||
        exp_weight[i] < 0)
      throw std::invalid_argument(who + "weights must be non-negative");
    if (!(control_weight[i] > 0)) throw std::invalid_argument(who + "own-control weight must be positive");
  }

  // Bound scan: the largest |x_k| reachable under open-loop controls in bounds
  // and under feedback laws |u| <= G |x| + |u|_max.
  const double umax = std::max(std::abs(control_bound.lower), std::abs(control_bound.upper));
  const double b_sum = std::abs(input_gain[0]) + std::abs(input_gain[1]);
  double x_open = std::abs(initial_state);
  double x_feedback = x_open;
  double worst = x_open;
  for (int k = 0; k < horizon; ++k) {
    x_open = std::abs(drift) * x_open + b_sum * umax;
    x_feedback = (std::abs(drift) + b_sum * feedback_gain_limit) * x_feedback + b_sum * umax;
    worst = std::max({worst, x_open, x_feedback});
  }
  const double u_worst = std::max(umax, feedback_gain_limit * worst + umax);
  for (int i = 0; i < 2; ++i) {
    for (double x : {worst, -worst}) {
      const double g = stage_cost(*this, i, x, u_worst, u_worst);
      const double h = terminal_weight[i] * (x - state_target[i]) * (x - state_target[i]);
      if (!std::isfinite(g) || !std::isfinite(h) || std::abs(g) > 1e150) {
        std::ostringstream msg;
        msg << "non-quadratic template: bound scan found a non-finite cost for player " << i << " at |x| = " << worst
            << ", |u| = " << u_worst << " (exp_rate " << exp_rate << ", exp_weight " << exp_weight[i] << ")";
        throw std::invalid_argument(msg.str());
      }
    }
  }
}

LqSpec NonquadraticSpec::to_lq_spec() const {
  LqSpec lq;
  lq.horizon = horizon;
  lq.initial_state = Vector::Constant(1, initial_state);
  lq.dynamics = {Matrix::Constant(1, 1, drift)};
  lq.input_maps = {{Matrix::Constant(1, 1, input_gain[0])}, {Matrix::Constant(1, 1, input_gain[1])}};
  lq.control_bound = control_bound;
  for (int i = 0; i < 2; ++i) {
    LqPlayerCost c;
    c.state_weight = Matrix::Constant(1, 1, state_weight[i]);
    c.terminal_weight = Matrix::Constant(1, 1, terminal_weight[i]);
    c.state_target = Vector::Constant(1, state_target[i]);
    c.control_weights.assign(2, Matrix());
    c.control_weights[i] = Matrix::Constant(1, 1, control_weight[i]);
    c.control_weights[1 - i] = Matrix::Constant(1, 1, cross_control_weight[i]);
    lq.costs.push_back(c);
  }
  return lq;
}

DynamicGame build_two_player_nonquadratic(const NonquadraticSpec& spec) {
  spec.validate();

  GameDefinition def;
  def.name = "nonquadratic";
  def.num_players = 2;
  def.horizon = spec.horizon;
  def.state_dim = 1;
  def.control_dims = {1, 1};
  def.initial_state = Vector::Constant(1, spec.initial_state);
  def.control_bounds.assign(2, std::vector<Interval>(spec.horizon, spec.control_bound));
  if (spec.quartic_weight == std::array<double, 2>{0.0, 0.0} && spec.exp_weight == std::array<double, 2>{0.0, 0.0})
    def.lq = std::make_shared<const LqSpec>(spec.to_lq_spec());

  def.transition = [spec](int, const Vector& x, JointControls u) {
    return Vector::Constant(1, spec.drift * x[0] + spec.input_gain[0] * u[0][0] + spec.input_gain[1] * u[1][0]);
  };
  for (int i = 0; i < 2; ++i) {
    def.stage_costs.push_back([spec, i](int, const Vector& x, JointControls u) {
      const double next = spec.drift * x[0] + spec.input_gain[0] * u[0][0] + spec.input_gain[1] * u[1][0];
      return stage_cost(spec, i, next, u[i][0], u[1 - i][0]);
    });
    def.terminal_costs.push_back([spec, i](const Vector& x) {
      const double e = x[0] - spec.state_target[i];
      return spec.terminal_weight[i] * e * e;
    });
  }
  return DynamicGame(std::move(def));
}

}  // namespace dyngame
