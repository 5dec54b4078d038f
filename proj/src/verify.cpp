#include "dyngame/verify.hpp"

#include "dyngame/parallel.hpp"
#include "dyngame/random.hpp"

#include <algorithm>
#include <sstream>

namespace dyngame {

Vector NashReport::gaps() const {
  Vector g(static_cast<Eigen::Index>(players.size()));
  for (std::size_t i = 0; i < players.size(); ++i) g[static_cast<Eigen::Index>(i)] = players[i].gap;
  return g;
}

double NashReport::max_gap() const {
  double m = 0.0;
  for (const auto& p : players) m = std::max(m, p.gap);
  return m;
}

std::vector<int> NashReport::violators() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < players.size(); ++i)
    if (players[i].gap > tolerance) out.push_back(static_cast<int>(i));
  return out;
}

BestResponse best_response_gap(const DynamicGame& game, const StrategySpace& space, const Vector& joint, int player,
                               const BestResponseBudget& budget) {
  if (player < 0 || player >= game.num_players())
    throw std::out_of_range("player index " + std::to_string(player) + " out of range");
  if (budget.multistarts < 0) throw std::invalid_argument("multistarts must be non-negative");

  const Vector base = space.clamp(joint);
  const Slice& s = space.player_slice(player);
  const auto off = static_cast<Eigen::Index>(s.offset);
  const auto len = static_cast<Eigen::Index>(s.size);
  auto objective = [&](const Vector& values) { return player_cost(game, space, space.splice(base, player, values), player); };

  BestResponse br;
  br.current_cost = player_cost(game, space, base, player);
  br.deviation_cost = br.current_cost;
  br.deviation = base;

  auto consider = [&](const Vector& start) {
    const auto r = simplex_minimize<double>(objective, start, budget.simplex);
    ++br.starts;
    br.iterations += r.iterations;
    if (r.value < br.deviation_cost) {
      br.deviation_cost = r.value;
      br.deviation = space.clamp(space.splice(base, player, r.point));
    }
  };

  consider(base.segment(off, len));
  // Each restart consumes a fixed number of draws, so a larger budget only
  // appends starts and never changes the earlier ones.
  Rng rng(budget.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(player + 1));
  for (int m = 0; m < budget.multistarts; ++m) {
    Vector start(len);
    for (Eigen::Index j = 0; j < len; ++j) start[j] = uniform_in(rng, space.lower()[off + j], space.upper()[off + j]);
    consider(start);
  }
  br.gap = std::max(0.0, br.current_cost - br.deviation_cost);
  return br;
}

NashReport certify_nash(const DynamicGame& game, const StrategySpace& space, const Vector& joint, double tolerance,
                        const BestResponseBudget& budget, int threads) {
  if (!(tolerance > 0)) throw std::invalid_argument("certification tolerance must be positive");
  NashReport report;
  report.tolerance = tolerance;
  report.multistarts = budget.multistarts;
  report.simplex_max_iterations = budget.simplex.max_iterations;
  report.players.resize(static_cast<std::size_t>(game.num_players()));
  parallel_for(report.players.size(), threads, [&](std::size_t i) {
    report.players[i] = best_response_gap(game, space, joint, static_cast<int>(i), budget);
  });
  report.certified = report.max_gap() <= tolerance;
  return report;
}

NashReport certify_nash(const DynamicGame& game, const StrategyProfile& profile, double tolerance,
                        const BestResponseBudget& budget, const SpaceConfig& space_config) {
  SpaceConfig cfg = space_config;
  cfg.mode = profile.mode;
  const StrategySpace space(game, cfg);
  return certify_nash(game, space, space.from_profile(profile), tolerance, budget);
}

std::vector<QuadraticCost> lq_cost_quadratics(const LqSpec& spec) {
  spec.validate();
  const int n = spec.num_players();
  const int horizon = spec.horizon;
  const int nx = spec.state_dim();

  std::vector<Eigen::Index> player_offset(n + 1, 0);
  for (int i = 0; i < n; ++i) player_offset[i + 1] = player_offset[i] + horizon * spec.control_dim(i);
  const Eigen::Index dim = player_offset[n];
  auto column = [&](int player, int stage) { return player_offset[player] + stage * spec.control_dim(player); };

  // Stacked states x_1..x_K = drift + G u.
  Matrix g_map = Matrix::Zero(horizon * nx, dim);
  Vector drift = Vector::Zero(horizon * nx);
  Vector x = spec.initial_state;
  Matrix propagate = Matrix::Zero(nx, dim);  // d x_k / d u
  for (int k = 0; k < horizon; ++k) {
    propagate = spec.A(k) * propagate;
    for (int i = 0; i < n; ++i) propagate.middleCols(column(i, k), spec.control_dim(i)) += spec.B(i, k);
    x = spec.A(k) * x;
    g_map.middleRows(k * nx, nx) = propagate;
    drift.segment(k * nx, nx) = x;
  }

  std::vector<QuadraticCost> out;
  for (int i = 0; i < n; ++i) {
    Matrix q_bar = Matrix::Zero(horizon * nx, horizon * nx);
    const Vector target = spec.state_target(i);
    Vector ref(horizon * nx);
    for (int k = 0; k < horizon; ++k) {
      q_bar.block(k * nx, k * nx, nx, nx) = spec.costs[i].state_weight;
      ref.segment(k * nx, nx) = target;
    }
    if (horizon > 0) q_bar.bottomRightCorner(nx, nx) += spec.terminal_weight(i);

    Matrix r_bar = Matrix::Zero(dim, dim);
    for (int j = 0; j < n; ++j) {
      const Matrix r = spec.control_weight(i, j);
      const int m = spec.control_dim(j);
      for (int k = 0; k < horizon; ++k) r_bar.block(column(j, k), column(j, k), m, m) = r;
    }

    QuadraticCost qc;
    const Vector e0 = drift - ref;
    qc.hessian = g_map.transpose() * q_bar * g_map + r_bar;
    qc.hessian = 0.5 * (qc.hessian + qc.hessian.transpose()).eval();
    qc.gradient = g_map.transpose() * q_bar * e0;
    qc.constant = e0.dot(q_bar * e0);
    if (horizon == 0) {
      const Vector e = spec.initial_state - target;
      qc.constant = e.dot(spec.terminal_weight(i) * e);
    }
    out.push_back(std::move(qc));
  }
  return out;
}

StrategyProfile lq_openloop_nash(const LqSpec& spec) {
  const auto quadratics = lq_cost_quadratics(spec);
  const int n = spec.num_players();
  const int horizon = spec.horizon;

  StrategyProfile profile;
  profile.mode = StrategyMode::open_loop;
  profile.controls.resize(n);
  if (horizon == 0) return profile;

  const Eigen::Index dim = quadratics.front().gradient.size();
  Matrix system(dim, dim);
  Vector rhs(dim);
  Eigen::Index row = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Index rows = horizon * spec.control_dim(i);
    // dJ_i/du_i = 2 (H_i u + g_i)[rows of player i] = 0
    system.middleRows(row, rows) = quadratics[i].hessian.middleRows(row, rows);
    rhs.segment(row, rows) = -quadratics[i].gradient.segment(row, rows);
    row += rows;
  }

  Eigen::FullPivLU<Matrix> lu(system);
  // rcond() is meaningless once a pivot has been treated as zero
  const double rcond = lu.isInvertible() ? lu.rcond() : 0.0;
  if (rcond < 1e-13) {
    std::ostringstream msg;
    msg << "open-loop Nash system is singular (reciprocal condition estimate " << rcond
        << "); the equilibrium is not unique or the game is degenerate";
    throw SingularNashSystem(msg.str(), rcond);
  }
  const Vector u = lu.solve(rhs);

  Eigen::Index at = 0;
  for (int i = 0; i < n; ++i) {
    const int m = spec.control_dim(i);
    for (int k = 0; k < horizon; ++k) {
      profile.controls[i].push_back(u.segment(at, m));
      at += m;
    }
  }
  return profile;
}

}  // namespace dyngame
