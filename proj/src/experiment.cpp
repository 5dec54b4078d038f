#include "dyngame/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace dyngame {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Game template registry

namespace {

const std::set<std::string>& builtin_templates() {
  static const std::set<std::string> names{"scalar_lq", "lq", "random_lq", "nonquadratic"};
  return names;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, GameFactory> factories;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_game_template(const std::string& name, GameFactory factory) {
  if (builtin_templates().count(name)) throw std::invalid_argument("cannot replace built-in game template '" + name + "'");
  if (!factory) throw std::invalid_argument("game template '" + name + "' has an empty factory");
  std::lock_guard lock(registry().mutex);
  registry().factories[name] = std::move(factory);
}

bool has_game_template(const std::string& name) {
  if (builtin_templates().count(name)) return true;
  std::lock_guard lock(registry().mutex);
  return registry().factories.count(name) > 0;
}

// ---------------------------------------------------------------------------
// Strict JSON reading

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

Vector read_vector(const Json& j, const std::string& path) {
  if (j.is_null()) return Vector();
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) schema_error(path + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix read_matrix(const Json& j, const std::string& path) {
  if (j.is_null()) return Matrix();
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) schema_error(path, "expected a matrix given as an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array()) schema_error(path + "[" + std::to_string(r) + "]", "expected a row array");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) schema_error(path, "rows have different lengths");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        schema_error(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]", "expected a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  return m;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_json(const Matrix& m) {
  if (m.size() == 0) return nullptr;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

/// View of one JSON object that remembers which keys were read, so that
/// finish() can reject everything else.
class Section {
 public:
  Section(const Json& j, std::string path) : json_(j), path_(std::move(path)) {
    if (!json_.is_object()) schema_error(path_, "expected an object");
  }

  bool has(const std::string& key) const { return json_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return json_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number()) schema_error(key_path(key), "expected a number");
    out = v.get<double>();
  }
  void get(const std::string& key, int& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number_integer()) schema_error(key_path(key), "expected an integer");
    out = v.get<int>();
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      schema_error(key_path(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_boolean()) schema_error(key_path(key), "expected true or false");
    out = v.get<bool>();
  }
  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_string()) schema_error(key_path(key), "expected a string");
    out = v.get<std::string>();
  }
  void get(const std::string& key, Interval& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      schema_error(key_path(key), "expected [lower, upper]");
    out = {v[0].get<double>(), v[1].get<double>()};
    if (!(out.lower <= out.upper)) schema_error(key_path(key), "interval is empty (lower > upper)");
  }
  void get(const std::string& key, std::array<double, 2>& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      schema_error(key_path(key), "expected a pair of numbers, one per player");
    out = {v[0].get<double>(), v[1].get<double>()};
  }
  void get(const std::string& key, Vector& out) {
    if (has(key)) out = read_vector(raw(key), key_path(key));
  }
  void get(const std::string& key, Matrix& out) {
    if (has(key)) out = read_matrix(raw(key), key_path(key));
  }

  Section child(const std::string& key) {
    static const Json empty = Json::object();
    if (!has(key)) return Section(empty, key_path(key));
    return Section(raw(key), key_path(key));
  }

  void finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it)
      if (!used_.count(it.key())) schema_error(key_path(it.key()), "unknown key");
  }

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Check>
void check(Check&& fn, const std::string& path) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// --- game -------------------------------------------------------------------

LqSpec read_lq(Section s) {
  LqSpec spec;
  s.get("horizon", spec.horizon);
  s.get("initial_state", spec.initial_state);
  s.get("control_bound", spec.control_bound);
  if (!s.has("dynamics") || !s.has("input_maps") || !s.has("costs") || !s.has("initial_state"))
    schema_error(s.key_path(""), "lq params need initial_state, dynamics, input_maps and costs");

  const Json& dyn = s.raw("dynamics");
  if (!dyn.is_array()) schema_error(s.key_path("dynamics"), "expected a list of matrices");
  for (std::size_t k = 0; k < dyn.size(); ++k)
    spec.dynamics.push_back(read_matrix(dyn[k], s.key_path("dynamics") + "[" + std::to_string(k) + "]"));

  const Json& inputs = s.raw("input_maps");
  if (!inputs.is_array()) schema_error(s.key_path("input_maps"), "expected one list of matrices per player");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string p = s.key_path("input_maps") + "[" + std::to_string(i) + "]";
    if (!inputs[i].is_array()) schema_error(p, "expected a list of matrices");
    std::vector<Matrix> maps;
    for (std::size_t k = 0; k < inputs[i].size(); ++k)
      maps.push_back(read_matrix(inputs[i][k], p + "[" + std::to_string(k) + "]"));
    spec.input_maps.push_back(std::move(maps));
  }

  const Json& costs = s.raw("costs");
  if (!costs.is_array()) schema_error(s.key_path("costs"), "expected one cost object per player");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    Section c(costs[i], s.key_path("costs") + "[" + std::to_string(i) + "]");
    LqPlayerCost pc;
    c.get("state_weight", pc.state_weight);
    c.get("terminal_weight", pc.terminal_weight);
    c.get("state_target", pc.state_target);
    if (c.has("control_weights")) {
      const Json& w = c.raw("control_weights");
      if (!w.is_array()) schema_error(c.key_path("control_weights"), "expected one matrix (or null) per player");
      for (std::size_t j = 0; j < w.size(); ++j)
        pc.control_weights.push_back(read_matrix(w[j], c.key_path("control_weights") + "[" + std::to_string(j) + "]"));
    }
    c.finish();
    spec.costs.push_back(std::move(pc));
  }
  s.finish();
  check([&] { spec.validate(); }, s.key_path("").substr(0, s.key_path("").size() - 1));
  return spec;
}

Json lq_json(const LqSpec& spec) {
  Json j;
  j["horizon"] = spec.horizon;
  j["initial_state"] = vector_json(spec.initial_state);
  j["control_bound"] = {spec.control_bound.lower, spec.control_bound.upper};
  j["dynamics"] = Json::array();
  for (const Matrix& a : spec.dynamics) j["dynamics"].push_back(matrix_json(a));
  j["input_maps"] = Json::array();
  for (const auto& maps : spec.input_maps) {
    Json list = Json::array();
    for (const Matrix& b : maps) list.push_back(matrix_json(b));
    j["input_maps"].push_back(list);
  }
  j["costs"] = Json::array();
  for (const LqPlayerCost& c : spec.costs) {
    Json cj;
    cj["state_weight"] = matrix_json(c.state_weight);
    cj["terminal_weight"] = matrix_json(c.terminal_weight);
    cj["state_target"] = c.state_target.size() ? vector_json(c.state_target) : Json(nullptr);
    cj["control_weights"] = Json::array();
    for (const Matrix& r : c.control_weights) cj["control_weights"].push_back(matrix_json(r));
    j["costs"].push_back(cj);
  }
  return j;
}

NonquadraticSpec read_nonquadratic(Section s) {
  NonquadraticSpec spec;
  s.get("horizon", spec.horizon);
  s.get("initial_state", spec.initial_state);
  s.get("drift", spec.drift);
  s.get("input_gain", spec.input_gain);
  s.get("state_weight", spec.state_weight);
  s.get("terminal_weight", spec.terminal_weight);
  s.get("state_target", spec.state_target);
  s.get("control_weight", spec.control_weight);
  s.get("cross_control_weight", spec.cross_control_weight);
  s.get("quartic_weight", spec.quartic_weight);
  s.get("exp_weight", spec.exp_weight);
  s.get("exp_rate", spec.exp_rate);
  s.get("control_bound", spec.control_bound);
  s.get("feedback_gain_limit", spec.feedback_gain_limit);
  s.finish();
  check([&] { spec.validate(); }, "game.params");
  return spec;
}

Json nonquadratic_json(const NonquadraticSpec& s) {
  return Json{{"horizon", s.horizon},
              {"initial_state", s.initial_state},
              {"drift", s.drift},
              {"input_gain", s.input_gain},
              {"state_weight", s.state_weight},
              {"terminal_weight", s.terminal_weight},
              {"state_target", s.state_target},
              {"control_weight", s.control_weight},
              {"cross_control_weight", s.cross_control_weight},
              {"quartic_weight", s.quartic_weight},
              {"exp_weight", s.exp_weight},
              {"exp_rate", s.exp_rate},
              {"control_bound", {s.control_bound.lower, s.control_bound.upper}},
              {"feedback_gain_limit", s.feedback_gain_limit}};
}

GameSection read_game(Section s) {
  GameSection g;
  if (!s.has("template")) schema_error("game.template", "missing (one of scalar_lq, lq, random_lq, nonquadratic)");
  s.get("template", g.template_name);
  const bool has_params = s.has("params");
  if (g.template_name == "scalar_lq") {
    if (has_params) {
      Section p = s.child("params");
      p.finish();
    }
  } else if (g.template_name == "lq") {
    if (!has_params) schema_error("game.params", "the lq template needs explicit matrices");
    g.lq = read_lq(s.child("params"));
  } else if (g.template_name == "random_lq") {
    Section p = s.child("params");
    p.get("seed", g.random_seed);
    p.get("num_players", g.random.num_players);
    p.get("horizon", g.random.horizon);
    p.get("state_dim", g.random.state_dim);
    p.get("control_dim", g.random.control_dim);
    p.get("input_scale", g.random.input_scale);
    p.get("control_bound", g.random.control_bound);
    p.finish();
    if (g.random.num_players < 1 || g.random.horizon < 0 || g.random.state_dim < 1 || g.random.control_dim < 1)
      schema_error("game.params", "random_lq sizes must be positive");
  } else if (g.template_name == "nonquadratic") {
    g.nonquadratic = read_nonquadratic(s.child("params"));
  } else if (has_game_template(g.template_name)) {
    if (has_params) g.custom_params = s.raw("params");
  } else {
    schema_error("game.template", "unknown template '" + g.template_name + "'");
  }
  s.finish();
  return g;
}

Json game_json(const GameSection& g) {
  Json j{{"template", g.template_name}};
  if (g.template_name == "lq") {
    j["params"] = lq_json(g.lq);
  } else if (g.template_name == "random_lq") {
    j["params"] = Json{{"seed", g.random_seed},
                       {"num_players", g.random.num_players},
                       {"horizon", g.random.horizon},
                       {"state_dim", g.random.state_dim},
                       {"control_dim", g.random.control_dim},
                       {"input_scale", g.random.input_scale},
                       {"control_bound", {g.random.control_bound.lower, g.random.control_bound.upper}}};
  } else if (g.template_name == "nonquadratic") {
    j["params"] = nonquadratic_json(g.nonquadratic);
  } else if (g.template_name != "scalar_lq") {
    j["params"] = g.custom_params;
  }
  return j;
}

// --- solver -----------------------------------------------------------------

SimplexConfig read_simplex(Section s, SimplexConfig c) {
  s.get("max_iterations", c.max_iterations);
  s.get("reflection", c.reflection);
  s.get("expansion", c.expansion);
  s.get("contraction", c.contraction);
  s.get("shrink", c.shrink);
  s.get("relative_step", c.relative_step);
  s.get("min_step", c.min_step);
  s.get("x_tolerance", c.x_tolerance);
  s.get("f_tolerance", c.f_tolerance);
  s.finish();
  check([&] { c.validate(); }, "solver.local_search");
  return c;
}

Json simplex_json(const SimplexConfig& c) {
  return Json{{"max_iterations", c.max_iterations}, {"reflection", c.reflection},     {"expansion", c.expansion},
              {"contraction", c.contraction},       {"shrink", c.shrink},             {"relative_step", c.relative_step},
              {"min_step", c.min_step},             {"x_tolerance", c.x_tolerance}, {"f_tolerance", c.f_tolerance}};
}

constexpr int kDefaultHybridIter = 10;

SolverSection read_solver(Section s) {
  SolverSection out;
  if (!s.has("type")) schema_error("solver.type", "missing (one of ga, pso, hybrid-pso)");
  std::string type;
  s.get("type", type);
  try {
    out.kind = solver_kind_from_string(type);
  } catch (const std::invalid_argument& e) {
    schema_error("solver.type", e.what());
  }

  std::string mode = "open_loop";
  s.get("mode", mode);
  if (mode == "open_loop")
    out.space.mode = StrategyMode::open_loop;
  else if (mode == "linear_feedback")
    out.space.mode = StrategyMode::linear_feedback;
  else
    schema_error("solver.mode", "expected open_loop or linear_feedback, got '" + mode + "'");
  s.get("gain_bounds", out.space.gain_bounds);
  if (s.has("offset_bounds") && !s.raw("offset_bounds").is_null()) {
    Interval b;
    s.get("offset_bounds", b);
    out.space.offset_bounds = b;
  }
  s.get("threads", out.threads);
  if (out.threads < 1) schema_error("solver.threads", "must be at least 1");

  {
    Section g = s.child("ga");
    GaConfig& c = out.ga;
    g.get("population_size", c.population_size);
    g.get("crossover_prob", c.crossover_prob);
    g.get("mutation_prob", c.mutation_prob);
    g.get("elitism", c.elitism);
    if (g.has("fitness_offset")) {
      const Json& f = g.raw("fitness_offset");
      if (f.is_string() && f.get<std::string>() == "adaptive") {
        c.offset_mode = FitnessOffsetMode::adaptive;
      } else if (f.is_number()) {
        c.offset_mode = FitnessOffsetMode::fixed;
        c.fixed_offset = f.get<double>();
      } else {
        schema_error("solver.ga.fitness_offset", "expected \"adaptive\" or a number");
      }
    }
    g.get("max_generations", c.max_generations);
    g.get("stall_window", c.stall_window);
    g.get("stall_tolerance", c.stall_tolerance);
    g.get("magnitude_digits", c.magnitude_digits);
    g.get("decimal_position", c.decimal_position);
    g.finish();
    if (!(c.mutation_prob >= 0 && c.mutation_prob <= 1))
      schema_error("solver.ga.mutation_prob", "must be in [0, 1], got " + std::to_string(c.mutation_prob));
    if (!(c.crossover_prob >= 0 && c.crossover_prob <= 1))
      schema_error("solver.ga.crossover_prob", "must be in [0, 1], got " + std::to_string(c.crossover_prob));
    check([&] { c.validate(); }, "solver.ga");
    check([&] { EncodingScheme(c.magnitude_digits, c.decimal_position, 1); }, "solver.ga");
  }

  bool hybrid_iter_given = false;
  {
    Section p = s.child("pso");
    PsoConfig& c = out.pso;
    p.get("swarm_size", c.swarm_size);
    p.get("c1", c.c1);
    p.get("c2", c.c2);
    p.get("omega_max", c.omega_max);
    p.get("omega_min", c.omega_min);
    p.get("t_max", c.t_max);
    if (p.has("v_max") && !p.raw("v_max").is_null()) {
      double v = 0;
      p.get("v_max", v);
      c.v_max = v;
    }
    p.get("v_max_fraction", c.v_max_fraction);
    hybrid_iter_given = p.has("hybrid_iter");
    p.get("hybrid_iter", c.hybrid_iter);
    p.get("refine_best_only", c.refine_best_only);
    p.get("stagnation_window", c.stagnation_window);
    p.get("mutation_fraction", c.mutation_fraction);
    p.get("per_dimension_random", c.per_dimension_random);
    p.get("stall_window", c.stall_window);
    p.get("stall_tolerance", c.stall_tolerance);
    p.finish();
    if (c.omega_min > c.omega_max)
      schema_error("solver.pso.omega_min", "omega_min (" + std::to_string(c.omega_min) + ") exceeds omega_max (" +
                                               std::to_string(c.omega_max) + ")");
  }
  out.pso.local_search = read_simplex(s.child("local_search"), out.pso.local_search);

  if (out.kind == SolverKind::hybrid_pso && !hybrid_iter_given) out.pso.hybrid_iter = kDefaultHybridIter;
  if (out.kind == SolverKind::hybrid_pso && out.pso.hybrid_iter < 1)
    schema_error("solver.pso.hybrid_iter", "hybrid-pso needs hybrid_iter >= 1");
  if (out.kind == SolverKind::pso && out.pso.hybrid_iter != 0)
    schema_error("solver.pso.hybrid_iter", "plain pso needs hybrid_iter = 0; use type hybrid-pso");
  check([&] { out.pso.validate(); }, "solver.pso");
  s.finish();
  return out;
}

Json solver_json(const SolverSection& s) {
  Json j;
  j["type"] = to_string(s.kind);
  j["mode"] = s.space.mode == StrategyMode::open_loop ? "open_loop" : "linear_feedback";
  j["gain_bounds"] = {s.space.gain_bounds.lower, s.space.gain_bounds.upper};
  j["offset_bounds"] =
      s.space.offset_bounds ? Json{s.space.offset_bounds->lower, s.space.offset_bounds->upper} : Json(nullptr);
  j["threads"] = s.threads;
  const GaConfig& g = s.ga;
  j["ga"] = Json{{"population_size", g.population_size},
                 {"crossover_prob", g.crossover_prob},
                 {"mutation_prob", g.mutation_prob},
                 {"elitism", g.elitism},
                 {"fitness_offset", g.offset_mode == FitnessOffsetMode::adaptive ? Json("adaptive") : Json(g.fixed_offset)},
                 {"max_generations", g.max_generations},
                 {"stall_window", g.stall_window},
                 {"stall_tolerance", g.stall_tolerance},
                 {"magnitude_digits", g.magnitude_digits},
                 {"decimal_position", g.decimal_position}};
  const PsoConfig& p = s.pso;
  j["pso"] = Json{{"swarm_size", p.swarm_size},
                  {"c1", p.c1},
                  {"c2", p.c2},
                  {"omega_max", p.omega_max},
                  {"omega_min", p.omega_min},
                  {"t_max", p.t_max},
                  {"v_max", p.v_max ? Json(*p.v_max) : Json(nullptr)},
                  {"v_max_fraction", p.v_max_fraction},
                  {"hybrid_iter", p.hybrid_iter},
                  {"refine_best_only", p.refine_best_only},
                  {"stagnation_window", p.stagnation_window},
                  {"mutation_fraction", p.mutation_fraction},
                  {"per_dimension_random", p.per_dimension_random},
                  {"stall_window", p.stall_window},
                  {"stall_tolerance", p.stall_tolerance}};
  j["local_search"] = simplex_json(p.local_search);
  return j;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace

std::uint64_t RunSection::seed_for(int run) const {
  if (!seeds.empty()) return seeds.at(static_cast<std::size_t>(run));
  return base_seed + static_cast<std::uint64_t>(run);
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::ga: return "ga";
    case SolverKind::pso: return "pso";
    case SolverKind::hybrid_pso: return "hybrid-pso";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "ga") return SolverKind::ga;
  if (name == "pso") return SolverKind::pso;
  if (name == "hybrid-pso") return SolverKind::hybrid_pso;
  throw std::invalid_argument("unknown solver '" + name + "' (expected ga, pso or hybrid-pso)");
}

void override_solver(ExperimentConfig& config, SolverKind kind) {
  config.solver.kind = kind;
  if (kind == SolverKind::pso) config.solver.pso.hybrid_iter = 0;
  if (kind == SolverKind::hybrid_pso && config.solver.pso.hybrid_iter < 1)
    config.solver.pso.hybrid_iter = kDefaultHybridIter;
}

ExperimentConfig parse_config(const Json& document) {
  Section root(document, "");
  ExperimentConfig c;
  if (!root.has("game")) schema_error("game", "missing section");
  if (!root.has("solver")) schema_error("solver", "missing section");
  c.game = read_game(root.child("game"));
  c.solver = read_solver(root.child("solver"));

  {
    Section v = root.child("verification");
    v.get("enabled", c.verification.enabled);
    v.get("tolerance", c.verification.tolerance);
    v.get("multistarts", c.verification.budget.multistarts);
    v.get("max_iterations", c.verification.budget.simplex.max_iterations);
    v.get("seed", c.verification.budget.seed);
    v.finish();
    if (!(c.verification.tolerance > 0)) schema_error("verification.tolerance", "must be positive");
    if (c.verification.budget.multistarts < 0) schema_error("verification.multistarts", "must be non-negative");
    if (c.verification.budget.simplex.max_iterations < 0)
      schema_error("verification.max_iterations", "must be non-negative");
  }
  {
    Section r = root.child("run");
    r.get("repeat", c.run.repeat);
    r.get("base_seed", c.run.base_seed);
    if (r.has("seeds")) {
      const Json& seeds = r.raw("seeds");
      if (!seeds.is_array()) schema_error("run.seeds", "expected an array of non-negative integers");
      for (const Json& s : seeds) {
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
          schema_error("run.seeds", "expected an array of non-negative integers");
        c.run.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    r.get("out_dir", c.run.out_dir);
    r.finish();
    if (c.run.repeat < 1) schema_error("run.repeat", "must be at least 1");
    if (!c.run.seeds.empty() && c.run.seeds.size() < static_cast<std::size_t>(c.run.repeat))
      schema_error("run.seeds", "lists fewer seeds than run.repeat");
  }
  {
    Section b = root.child("bench");
    if (b.has("sizes")) {
      const Json& sizes = b.raw("sizes");
      if (!sizes.is_array() || sizes.empty()) schema_error("bench.sizes", "expected a non-empty array of integers");
      c.bench.sizes.clear();
      for (const Json& s : sizes) {
        if (!s.is_number_integer() || s.get<int>() < 2) schema_error("bench.sizes", "sizes must be integers >= 2");
        c.bench.sizes.push_back(s.get<int>());
      }
    }
    b.get("repeat", c.bench.repeat);
    b.get("tolerance", c.bench.tolerance);
    b.finish();
    if (c.bench.repeat < 1) schema_error("bench.repeat", "must be at least 1");
    if (!(c.bench.tolerance > 0)) schema_error("bench.tolerance", "must be positive");
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t line = line_of(text, e.byte > 0 ? e.byte - 1 : 0, column);
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": parse error: " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["game"] = game_json(c.game);
  j["solver"] = solver_json(c.solver);
  j["verification"] = Json{{"enabled", c.verification.enabled},
                           {"tolerance", c.verification.tolerance},
                           {"multistarts", c.verification.budget.multistarts},
                           {"max_iterations", c.verification.budget.simplex.max_iterations},
                           {"seed", c.verification.budget.seed}};
  Json seeds = Json::array();
  for (auto s : c.run.seeds) seeds.push_back(s);
  j["run"] = Json{{"repeat", c.run.repeat}, {"base_seed", c.run.base_seed}, {"seeds", seeds}, {"out_dir", c.run.out_dir}};
  j["bench"] = Json{{"sizes", c.bench.sizes}, {"repeat", c.bench.repeat}, {"tolerance", c.bench.tolerance}};
  return j;
}

// ---------------------------------------------------------------------------
// Running

DynamicGame build_game(const GameSection& g) {
  if (g.template_name == "scalar_lq" || g.template_name == "lq") return build_lq_game(g.lq);
  if (g.template_name == "random_lq") return build_lq_game(random_lq_spec(g.random_seed, g.random));
  if (g.template_name == "nonquadratic") return build_two_player_nonquadratic(g.nonquadratic);
  GameFactory factory;
  {
    std::lock_guard lock(registry().mutex);
    auto it = registry().factories.find(g.template_name);
    if (it == registry().factories.end()) throw ConfigError("game.template: unknown template '" + g.template_name + "'");
    factory = it->second;
  }
  return factory(g.custom_params);
}

SolveResult solve_once(const DynamicGame& game, const ExperimentConfig& config, std::uint64_t seed) {
  const SolverSection& s = config.solver;
  SolveResult result;
  if (s.kind == SolverKind::ga) {
    GaConfig ga = s.ga;
    ga.space = s.space;
    ga.threads = s.threads;
    ga.rng_seed = seed;
    result = run_ga(game, ga);
  } else {
    PsoConfig pso = s.pso;
    pso.space = s.space;
    pso.threads = s.threads;
    pso.rng_seed = seed;
    if (s.kind == SolverKind::pso) pso.hybrid_iter = 0;
    result = run_pso(game, pso);
  }
  if (config.verification.enabled) {
    const StrategySpace space(game, s.space);
    result.nash = certify_nash(game, space, result.joint, config.verification.tolerance, config.verification.budget,
                               s.threads);
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string run_stem(int run) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03d", run);
  return buf;
}

}  // namespace

std::string trace_csv(const SolveResult& result) {
  std::string out = "iteration,player,best_cost,mean_cost,stagnation\n";
  for (const TraceRow& r : result.trace) {
    out += std::to_string(r.iteration);
    out += ',';
    out += std::to_string(r.player);
    out += ',';
    out += format_double(r.best_cost);
    out += ',';
    out += format_double(r.mean_cost);
    out += ',';
    out += std::to_string(r.stagnation);
    out += '\n';
  }
  return out;
}

void emit_trace(const SolveResult& result, const fs::path& path) { write_text(path, trace_csv(result)); }

Json profile_to_json(const StrategyProfile& profile) {
  Json j;
  Json players = Json::array();
  if (profile.mode == StrategyMode::open_loop) {
    j["mode"] = "open_loop";
    for (const auto& controls : profile.controls) {
      Json stages = Json::array();
      for (const Vector& u : controls) stages.push_back(vector_json(u));
      players.push_back(Json{{"controls", stages}});
    }
  } else {
    j["mode"] = "linear_feedback";
    for (const auto& laws : profile.feedback) {
      Json stages = Json::array();
      for (const FeedbackLaw& law : laws)
        stages.push_back(Json{{"gain", matrix_json(law.gain)}, {"offset", vector_json(law.offset)}});
      players.push_back(Json{{"stages", stages}});
    }
  }
  j["players"] = players;
  return j;
}

StrategyProfile profile_from_json(const Json& document) {
  Section root(document, "profile");
  std::string mode;
  root.get("mode", mode);
  if (!root.has("players") || !root.raw("players").is_array()) schema_error("profile.players", "expected an array");
  const Json& players = root.raw("players");
  StrategyProfile p;
  if (mode == "open_loop") {
    p.mode = StrategyMode::open_loop;
    for (std::size_t i = 0; i < players.size(); ++i) {
      Section ps(players[i], "profile.players[" + std::to_string(i) + "]");
      if (!ps.has("controls") || !ps.raw("controls").is_array())
        schema_error(ps.key_path("controls"), "expected one control vector per stage");
      std::vector<Vector> controls;
      const Json& stages = ps.raw("controls");
      for (std::size_t k = 0; k < stages.size(); ++k)
        controls.push_back(read_vector(stages[k], ps.key_path("controls") + "[" + std::to_string(k) + "]"));
      ps.finish();
      p.controls.push_back(std::move(controls));
    }
  } else if (mode == "linear_feedback") {
    p.mode = StrategyMode::linear_feedback;
    for (std::size_t i = 0; i < players.size(); ++i) {
      Section ps(players[i], "profile.players[" + std::to_string(i) + "]");
      if (!ps.has("stages") || !ps.raw("stages").is_array())
        schema_error(ps.key_path("stages"), "expected one feedback law per stage");
      std::vector<FeedbackLaw> laws;
      const Json& stages = ps.raw("stages");
      for (std::size_t k = 0; k < stages.size(); ++k) {
        Section ls(stages[k], ps.key_path("stages") + "[" + std::to_string(k) + "]");
        FeedbackLaw law;
        ls.get("gain", law.gain);
        ls.get("offset", law.offset);
        ls.finish();
        laws.push_back(std::move(law));
      }
      ps.finish();
      p.feedback.push_back(std::move(laws));
    }
  } else {
    schema_error("profile.mode", "expected open_loop or linear_feedback");
  }
  root.finish();
  return p;
}

StrategyProfile load_profile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open profile file");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": parse error: " + e.what());
  }
  if (doc.is_object() && doc.contains("profile") && !doc.contains("players")) return profile_from_json(doc["profile"]);
  return profile_from_json(doc);
}

Json nash_report_to_json(const NashReport& report) {
  Json players = Json::array();
  for (std::size_t i = 0; i < report.players.size(); ++i) {
    const BestResponse& b = report.players[i];
    players.push_back(Json{{"player", i},
                           {"gap", b.gap},
                           {"current_cost", b.current_cost},
                           {"deviation_cost", b.deviation_cost},
                           {"deviation", vector_json(b.deviation)},
                           {"starts", b.starts},
                           {"iterations", b.iterations}});
  }
  return Json{{"tolerance", report.tolerance},
              {"certified", report.certified},
              {"max_gap", report.max_gap()},
              {"violators", report.violators()},
              {"multistarts", report.multistarts},
              {"simplex_max_iterations", report.simplex_max_iterations},
              {"players", players}};
}

Json result_to_json(const SolveResult& result, const ExperimentConfig& config) {
  ExperimentConfig echo = config;
  echo.run.repeat = 1;
  echo.run.seeds = {result.seed};
  Json effective = to_json(echo);
  effective["run"].erase("out_dir");

  Json j;
  j["solver"] = result.solver;
  j["seed"] = result.seed;
  j["iterations"] = result.iterations;
  j["stalled"] = result.stalled;
  j["costs"] = vector_json(result.costs);
  j["profile"] = profile_to_json(result.profile);
  j["joint"] = vector_json(result.joint);
  j["fitness_offset"] = result.fitness_offset ? Json(*result.fitness_offset) : Json(nullptr);
  j["nash"] = result.nash ? nash_report_to_json(*result.nash) : Json(nullptr);
  j["config"] = effective;
  return j;
}

ExperimentSummary summarize(std::vector<RunRecord> runs) {
  ExperimentSummary s;
  s.runs = std::move(runs);
  std::vector<const Vector*> costs;
  for (const RunRecord& r : s.runs) {
    if (!r.ok) {
      ++s.failures;
      continue;
    }
    costs.push_back(&r.result.costs);
    if (r.result.nash && r.result.nash->certified) ++s.certified;
  }
  if (costs.empty()) return s;
  const Eigen::Index n = costs.front()->size();
  s.mean_costs = Vector::Zero(n);
  for (const Vector* c : costs) s.mean_costs += *c;
  s.mean_costs /= static_cast<double>(costs.size());
  s.std_costs = Vector::Zero(n);
  if (costs.size() > 1) {
    for (const Vector* c : costs) s.std_costs += (*c - s.mean_costs).cwiseAbs2();
    s.std_costs = (s.std_costs / static_cast<double>(costs.size() - 1)).cwiseSqrt();
  }
  Vector lo = *costs.front();
  Vector hi = lo;
  for (const Vector* c : costs) {
    lo = lo.cwiseMin(*c);
    hi = hi.cwiseMax(*c);
  }
  s.cost_spread = hi - lo;
  s.max_cost_spread = s.cost_spread.maxCoeff();
  return s;
}

Json summary_to_json(const ExperimentSummary& s) {
  Json runs = Json::array();
  for (const RunRecord& r : s.runs) {
    Json j{{"run", r.run}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      j["costs"] = vector_json(r.result.costs);
      j["iterations"] = r.result.iterations;
      j["stalled"] = r.result.stalled;
      j["wall_seconds"] = r.result.wall_seconds;
      j["certified"] = r.result.nash ? Json(r.result.nash->certified) : Json(nullptr);
      j["max_gap"] = r.result.nash ? Json(r.result.nash->max_gap()) : Json(nullptr);
      j["trace_file"] = run_stem(r.run) + "_trace.csv";
      j["result_file"] = run_stem(r.run) + "_result.json";
    } else {
      j["error"] = r.error;
      j["trace_rows"] = r.result.trace.size();
    }
    runs.push_back(j);
  }
  const bool any = s.mean_costs.size() > 0;
  return Json{{"runs", runs},
              {"successful_runs", static_cast<int>(s.runs.size()) - s.failures},
              {"failures", s.failures},
              {"certified", s.certified},
              {"mean_costs", any ? vector_json(s.mean_costs) : Json::array()},
              {"std_costs", any ? vector_json(s.std_costs) : Json::array()},
              {"cost_spread", any ? vector_json(s.cost_spread) : Json::array()},
              {"max_cost_spread", s.max_cost_spread}};
}

ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const DynamicGame game = build_game(config.game);
  const fs::path out_dir(config.run.out_dir);
  if (options.write_files) fs::create_directories(out_dir);

  std::vector<RunRecord> records;
  for (int r = 0; r < config.run.repeat; ++r) {
    RunRecord rec;
    rec.run = r;
    rec.seed = config.run.seed_for(r);
    try {
      rec.result = solve_once(game, config, rec.seed);
      rec.ok = true;
    } catch (const SolveAborted& e) {
      rec.error = e.what();
      rec.result = e.partial();
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    if (options.write_files) {
      emit_trace(rec.result, out_dir / (run_stem(r) + "_trace.csv"));
      if (rec.ok) write_text(out_dir / (run_stem(r) + "_result.json"), result_to_json(rec.result, config).dump(2) + "\n");
    }
    if (!options.quiet) {
      std::cout << run_stem(r) << " seed " << rec.seed << ": ";
      if (rec.ok) {
        std::cout << rec.result.iterations << " iterations, costs [";
        for (Eigen::Index i = 0; i < rec.result.costs.size(); ++i)
          std::cout << (i ? ", " : "") << format_double(rec.result.costs[i]);
        std::cout << "]";
        if (rec.result.nash)
          std::cout << (rec.result.nash->certified ? ", certified" : ", NOT certified") << " (max gap "
                    << rec.result.nash->max_gap() << ")";
        std::cout << "\n";
      } else {
        std::cout << "FAILED: " << rec.error << "\n";
      }
    }
    records.push_back(std::move(rec));
  }
  ExperimentSummary summary = summarize(std::move(records));
  if (options.write_files) write_text(out_dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
  return summary;
}

int iterations_to_tolerance(const SolveResult& result, const Vector& reference, double tolerance) {
  const Eigen::Index n = reference.size();
  std::size_t row = 0;
  while (row + static_cast<std::size_t>(n) <= result.trace.size()) {
    bool within = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const TraceRow& t = result.trace[row + static_cast<std::size_t>(i)];
      if (!(std::abs(t.best_cost - reference[t.player]) <= tolerance)) within = false;
    }
    if (within) return result.trace[row].iteration;
    row += static_cast<std::size_t>(n);
  }
  return -1;
}

BenchReport run_bench(const ExperimentConfig& config, const RunOptions& options) {
  const DynamicGame game = build_game(config.game);
  BenchReport report;
  std::optional<Vector> oracle_costs;
  if (const LqSpec* lq = game.lq_structure(); lq && config.solver.space.mode == StrategyMode::open_loop) {
    oracle_costs = evaluate_all_costs(game, lq_openloop_nash(*lq));
    report.reference = "lq-oracle";
  } else {
    report.reference = "final-costs";
  }

  ExperimentConfig cfg = config;
  cfg.verification.enabled = false;
  for (int size : config.bench.sizes) {
    if (cfg.solver.kind == SolverKind::ga)
      cfg.solver.ga.population_size = size;
    else
      cfg.solver.pso.swarm_size = size;
    BenchRow row;
    row.size = size;
    std::vector<double> finite;
    for (int r = 0; r < config.bench.repeat; ++r) {
      const SolveResult res = solve_once(game, cfg, config.run.base_seed + static_cast<std::uint64_t>(r));
      const int it = iterations_to_tolerance(res, oracle_costs.value_or(res.costs), config.bench.tolerance);
      row.iterations_to_tolerance.push_back(it);
      finite.push_back(it < 0 ? std::numeric_limits<double>::infinity() : it);
      if (it >= 0) ++row.reached;
    }
    std::sort(finite.begin(), finite.end());
    const std::size_t m = finite.size();
    row.median_iterations = m % 2 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
    if (!options.quiet)
      std::cout << "size " << size << ": median iterations to tolerance " << row.median_iterations << " (" << row.reached
                << "/" << config.bench.repeat << " reached)\n";
    report.rows.push_back(std::move(row));
  }

  const auto find = [&](int size) -> const BenchRow* {
    for (const BenchRow& r : report.rows)
      if (r.size == size) return &r;
    return nullptr;
  };
  if (const BenchRow *at40 = find(40), *at80 = find(80); at40 && at80) {
    std::ostringstream note;
    if (!std::isfinite(at40->median_iterations)) {
      note << "size 40 did not reach tolerance in the median run; no plateau claim";
    } else {
      const double gain = (at40->median_iterations - at80->median_iterations) / at40->median_iterations;
      char pct[16];
      std::snprintf(pct, sizeof pct, "%.1f", 100.0 * gain);
      note << "going from 40 to 80 reduces the median iterations to tolerance by " << pct << "%; improvement beyond 40 is " << (gain < 0.2 ? "marginal" : "not marginal")
           << " (threshold: 20% fewer iterations), while evaluations per iteration double";
    }
    report.note = note.str();
  }

  if (options.write_files) {
    const fs::path out_dir(config.run.out_dir);
    fs::create_directories(out_dir);
    write_text(out_dir / "bench.json", bench_to_json(report).dump(2) + "\n");
    std::string csv = "size,run,iterations_to_tolerance\n";
    for (const BenchRow& r : report.rows)
      for (std::size_t i = 0; i < r.iterations_to_tolerance.size(); ++i)
        csv += std::to_string(r.size) + "," + std::to_string(i) + "," + std::to_string(r.iterations_to_tolerance[i]) + "\n";
    write_text(out_dir / "bench.csv", csv);
  }
  if (!options.quiet && !report.note.empty()) std::cout << report.note << "\n";
  return report;
}

Json bench_to_json(const BenchReport& report) {
  Json rows = Json::array();
  for (const BenchRow& r : report.rows)
    rows.push_back(Json{{"size", r.size},
                        {"iterations_to_tolerance", r.iterations_to_tolerance},
                        {"median_iterations", std::isfinite(r.median_iterations) ? Json(r.median_iterations) : Json(nullptr)},
                        {"reached", r.reached}});
  return Json{{"reference", report.reference}, {"rows", rows}, {"note", report.note}};
}

}  // namespace dyngame
