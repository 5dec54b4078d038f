#pragma once

#include "dyngame/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dyngame {

/// Nelder-Mead coefficients and stopping rule.
struct SimplexConfig {
  int max_iterations = 1000;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Initial vertex j is start + max(relative_step * |start_j|, min_step) e_j.
  double relative_step = 0.05;
  double min_step = 0.025;
  /// Stop once the simplex diameter (max-norm) and the value spread are both below these.
  double x_tolerance = 1e-10;
  double f_tolerance = 1e-14;

  void validate() const {
    if (max_iterations < 0) throw std::invalid_argument("simplex: max_iterations must be non-negative");
    if (!(reflection > 0)) throw std::invalid_argument("simplex: reflection must be > 0");
    if (!(expansion > 1)) throw std::invalid_argument("simplex: expansion must be > 1");
    if (!(contraction > 0 && contraction < 1)) throw std::invalid_argument("simplex: contraction must be in (0, 1)");
    if (!(shrink > 0 && shrink < 1)) throw std::invalid_argument("simplex: shrink must be in (0, 1)");
    if (!(min_step > 0) || relative_step < 0) throw std::invalid_argument("simplex: initial steps must be positive");
    if (x_tolerance < 0 || f_tolerance < 0) throw std::invalid_argument("simplex: tolerances must be non-negative");
  }
};

template <typename Scalar>
struct SimplexResult {
  VectorX<Scalar> point;
  Scalar value;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Best vertex value at the start of every iteration.
  std::vector<Scalar> best_history;
};

/// Derivative-free simplex minimization. Deterministic. Non-finite objective
/// values inside the search are treated as +inf; a non-finite value at the
/// start point is an error.
template <typename Scalar, typename Objective>
SimplexResult<Scalar> simplex_minimize(Objective&& objective, const VectorX<Scalar>& start,
                                       const SimplexConfig& config = {}) {
  config.validate();
  using Vec = VectorX<Scalar>;
  const Eigen::Index n = start.size();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  SimplexResult<Scalar> result;
  auto eval = [&](const Vec& x) {
    ++result.evaluations;
    const Scalar v = objective(x);
    return std::isfinite(v) ? v : inf;
  };

  const Scalar f_start = objective(start);
  ++result.evaluations;
  if (!std::isfinite(f_start)) throw std::domain_error("simplex: objective is not finite at the start point");
  if (n == 0) {
    result.point = start;
    result.value = f_start;
    result.converged = true;
    return result;
  }

  std::vector<Vec> x(static_cast<std::size_t>(n + 1), start);
  std::vector<Scalar> f(static_cast<std::size_t>(n + 1), f_start);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar step = std::max<Scalar>(Scalar(config.relative_step) * std::abs(start[j]), Scalar(config.min_step));
    x[j + 1][j] += step;
    f[j + 1] = eval(x[j + 1]);
  }

  std::vector<std::size_t> order(x.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<Vec> xs;
    std::vector<Scalar> fs;
    xs.reserve(x.size());
    fs.reserve(x.size());
    for (std::size_t idx : order) {
      xs.push_back(std::move(x[idx]));
      fs.push_back(f[idx]);
    }
    x = std::move(xs);
    f = std::move(fs);
  };

  const auto last = static_cast<std::size_t>(n);
  const Scalar alpha(config.reflection), gamma(config.expansion), rho(config.contraction), sigma(config.shrink);
  while (true) {
    sort_vertices();
    Scalar diameter(0);
    for (std::size_t j = 1; j <= last; ++j) diameter = std::max(diameter, (x[j] - x[0]).cwiseAbs().maxCoeff());
    const Scalar spread = f[last] - f[0];
    if (spread <= Scalar(config.f_tolerance) && diameter <= Scalar(config.x_tolerance)) {
      result.converged = true;
      break;
    }
    if (result.iterations >= config.max_iterations) break;
    result.best_history.push_back(f[0]);
    ++result.iterations;

    Vec centroid = Vec::Zero(n);
    for (std::size_t j = 0; j < last; ++j) centroid += x[j];
    centroid /= Scalar(n);

    const Vec xr = centroid + alpha * (centroid - x[last]);
    const Scalar fr = eval(xr);
    if (fr < f[0]) {
      const Vec xe = centroid + gamma * (xr - centroid);
      const Scalar fe = eval(xe);
      if (fe < fr) {
        x[last] = xe;
        f[last] = fe;
      } else {
        x[last] = xr;
        f[last] = fr;
      }
      continue;
    }
    if (fr < f[last - 1]) {
      x[last] = xr;
      f[last] = fr;
      continue;
    }
    bool accepted = false;
    if (fr < f[last]) {
      const Vec xc = centroid + rho * (xr - centroid);
      const Scalar fc = eval(xc);
      if (fc <= fr) {
        x[last] = xc;
        f[last] = fc;
        accepted = true;
      }
    } else {
      const Vec xc = centroid + rho * (x[last] - centroid);
      const Scalar fc = eval(xc);
      if (fc < f[last]) {
        x[last] = xc;
        f[last] = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t j = 1; j <= last; ++j) {
        x[j] = x[0] + sigma * (x[j] - x[0]);
        f[j] = eval(x[j]);
      }
    }
  }

  result.point = x[0];
  result.value = f[0];
  return result;
}

}  // namespace dyngame
