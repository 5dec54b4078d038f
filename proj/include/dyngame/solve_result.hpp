#pragma once

#include "dyngame/game.hpp"
#include "dyngame/verify.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyngame {

/// One trace row per (iteration, player). Costs are raw J_i values, not
/// transformed fitness, so GA and PSO traces compare directly.
struct TraceRow {
  int iteration = 0;
  int player = 0;
  /// J_i of the broadcast best profile at the end of the iteration.
  double best_cost = 0.0;
  /// Mean J_i over the candidates the player evaluated in this iteration.
  double mean_cost = 0.0;
  /// GA: generations since the player's best changed. PSO: swarm stagnation counter.
  int stagnation = 0;
};

struct SolveResult {
  std::string solver;
  StrategyProfile profile;
  /// Flat strategy vector of `profile` in the solver's StrategySpace.
  Vector joint;
  Vector costs;
  std::vector<TraceRow> trace;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool stalled = false;
  double wall_seconds = 0.0;
  /// GA only: last fitness offset C used by roulette selection.
  std::optional<double> fitness_offset;
  std::optional<NashReport> nash;
};

/// Thrown when a run hits a model defect; carries the trace up to the failure.
class SolveAborted : public std::runtime_error {
 public:
  SolveAborted(const std::string& what, SolveResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

/// True when every player's cost series moved by less than `tolerance` over the
/// last `window` iterations. `history[t][i]` is player i's cost after iteration t.
bool stall_reached(const std::vector<Vector>& history, int window, double tolerance);

}  // namespace dyngame
