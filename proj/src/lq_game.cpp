#include "dyngame/lq_game.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>

namespace dyngame {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("LQ spec: " + what);
}

bool is_symmetric(const Matrix& m) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

Matrix LqSpec::terminal_weight(int player) const {
  const Matrix& w = costs.at(player).terminal_weight;
  return w.size() == 0 ? Matrix::Zero(state_dim(), state_dim()) : w;
}

Vector LqSpec::state_target(int player) const {
  const Vector& r = costs.at(player).state_target;
  return r.size() == 0 ? Vector::Zero(state_dim()) : r;
}

Matrix LqSpec::control_weight(int player, int other) const {
  const auto& weights = costs.at(player).control_weights;
  const int m = control_dim(other);
  if (static_cast<std::size_t>(other) >= weights.size() || weights[other].size() == 0)
    return Matrix::Zero(m, m);
  return weights[other];
}

void LqSpec::validate() const {
  const int n = num_players();
  const int nx = state_dim();
  require(n >= 1, "at least one player is required");
  require(horizon >= 0, "horizon must be non-negative");
  require(nx >= 1, "initial state must be non-empty");
  require(dynamics.size() == 1 || dynamics.size() == static_cast<std::size_t>(horizon),
          "dynamics must hold 1 or horizon matrices");
  for (const Matrix& a : dynamics) require(a.rows() == nx && a.cols() == nx, "A must be state_dim x state_dim");
  require(input_maps.size() == static_cast<std::size_t>(n), "input_maps must list one entry per player");
  require(control_bound.lower <= control_bound.upper, "control bound interval is empty");

  for (int i = 0; i < n; ++i) {
    const std::string who = "player " + std::to_string(i) + ": ";
    const auto& maps = input_maps[i];
    require(maps.size() == 1 || maps.size() == static_cast<std::size_t>(horizon),
            who + "input maps must hold 1 or horizon matrices");
    const int m = static_cast<int>(maps.front().cols());
    require(m >= 1, who + "input map has no columns");
    for (const Matrix& b : maps) require(b.rows() == nx && b.cols() == m, who + "B must be state_dim x control_dim");
  }

  for (int i = 0; i < n; ++i) {
    const std::string who = "player " + std::to_string(i) + ": ";
    const LqPlayerCost& c = costs[i];
    require(c.state_weight.rows() == nx && c.state_weight.cols() == nx, who + "state weight has the wrong size");
    require(is_symmetric(c.state_weight), who + "state weight is not symmetric");
    require(min_eigenvalue(c.state_weight) >= -1e-10, who + "state weight is not positive semidefinite");
    if (c.terminal_weight.size() != 0) {
      require(c.terminal_weight.rows() == nx && c.terminal_weight.cols() == nx,
              who + "terminal weight has the wrong size");
      require(is_symmetric(c.terminal_weight), who + "terminal weight is not symmetric");
      require(min_eigenvalue(c.terminal_weight) >= -1e-10, who + "terminal weight is not positive semidefinite");
    }
    if (c.state_target.size() != 0) require(c.state_target.size() == nx, who + "state target has the wrong size");
    require(c.control_weights.size() <= static_cast<std::size_t>(n), who + "too many control weights");
    for (int j = 0; j < static_cast<int>(c.control_weights.size()); ++j) {
      const Matrix& r = c.control_weights[j];
      if (r.size() == 0) continue;
      const int m = control_dim(j);
      require(r.rows() == m && r.cols() == m, who + "control weight " + std::to_string(j) + " has the wrong size");
      require(is_symmetric(r), who + "control weight " + std::to_string(j) + " is not symmetric");
      require(min_eigenvalue(r) >= -1e-10, who + "control weight " + std::to_string(j) + " is indefinite");
    }
    const Matrix own = control_weight(i, i);
    require(own.llt().info() == Eigen::Success && min_eigenvalue(own) > 0.0,
            who + "own-control weight is not positive definite");
  }
}

DynamicGame build_lq_game(const LqSpec& spec_in) {
  spec_in.validate();
  auto spec = std::make_shared<const LqSpec>(spec_in);
  const int n = spec->num_players();

  GameDefinition def;
  def.name = "lq";
  def.num_players = n;
  def.horizon = spec->horizon;
  def.state_dim = spec->state_dim();
  def.initial_state = spec->initial_state;
  def.lq = spec;
  for (int i = 0; i < n; ++i) {
    def.control_dims.push_back(spec->control_dim(i));
    def.control_bounds.emplace_back(spec->horizon, spec->control_bound);
  }

  def.transition = [spec](int k, const Vector& x, JointControls u) {
    Vector next = spec->A(k) * x;
    for (int i = 0; i < spec->num_players(); ++i) next.noalias() += spec->B(i, k) * u[i];
    return next;
  };

  for (int i = 0; i < n; ++i) {
    Matrix q = spec->costs[i].state_weight;
    Matrix qf = spec->terminal_weight(i);
    Vector r = spec->state_target(i);
    std::vector<Matrix> weights;
    for (int j = 0; j < n; ++j) weights.push_back(spec->control_weight(i, j));

    def.stage_costs.push_back([spec, q, r, weights](int k, const Vector& x, JointControls u) {
      Vector next = spec->A(k) * x;
      for (int j = 0; j < spec->num_players(); ++j) next.noalias() += spec->B(j, k) * u[j];
      const Vector e = next - r;
      double cost = e.dot(q * e);
      for (std::size_t j = 0; j < weights.size(); ++j) cost += u[j].dot(weights[j] * u[j]);
      return cost;
    });
    def.terminal_costs.push_back([qf, r](const Vector& x) {
      const Vector e = x - r;
      return e.dot(qf * e);
    });
  }
  return DynamicGame(std::move(def));
}

LqSpec scalar_two_player_lq() {
  LqSpec spec;
  spec.horizon = 1;
  spec.initial_state = Vector::Ones(1);
  spec.dynamics = {Matrix::Ones(1, 1)};
  spec.input_maps = {{Matrix::Ones(1, 1)}, {Matrix::Ones(1, 1)}};
  for (int i = 0; i < 2; ++i) {
    LqPlayerCost c;
    c.state_weight = Matrix::Ones(1, 1);
    c.control_weights = {Matrix(), Matrix()};
    c.control_weights[i] = Matrix::Ones(1, 1);
    spec.costs.push_back(c);
  }
  return spec;
}

LqSpec random_lq_spec(std::uint64_t seed, const RandomLqOptions& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_matrix = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = unit(rng);
    return m;
  };

  const int nx = opt.state_dim;
  LqSpec spec;
  spec.horizon = opt.horizon;
  spec.control_bound = opt.control_bound;

  // Rescale to spectral radius 0.9 so the state stays moderate over the horizon.
  Matrix a = random_matrix(nx, nx);
  const double radius = Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.9) a *= 0.9 / radius;
  spec.dynamics = {a};

  for (int i = 0; i < opt.num_players; ++i) spec.input_maps.push_back({opt.input_scale * random_matrix(nx, opt.control_dim)});

  for (int i = 0; i < opt.num_players; ++i) {
    LqPlayerCost c;
    const Matrix m = random_matrix(nx, nx);
    c.state_weight = m * m.transpose() / nx + 0.2 * Matrix::Identity(nx, nx);
    c.terminal_weight = c.state_weight;
    c.state_target = random_matrix(nx, 1);
    c.control_weights.assign(opt.num_players, Matrix());
    Vector diag(opt.control_dim);
    for (int j = 0; j < opt.control_dim; ++j) diag[j] = 0.5 + 0.75 * (unit(rng) + 1.0);
    c.control_weights[i] = diag.asDiagonal();
    spec.costs.push_back(c);
  }
  spec.initial_state = random_matrix(nx, 1);
  return spec;
}

}  // namespace dyngame
