#include "dyngame/solve_result.hpp"

namespace dyngame {

bool stall_reached(const std::vector<Vector>& history, int window, double tolerance) {
  if (window < 1 || history.size() < static_cast<std::size_t>(window) + 1) return false;
  const auto first = history.end() - (window + 1);
  const Eigen::Index n = history.back().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double lo = (*first)[i];
    double hi = lo;
    for (auto it = first; it != history.end(); ++it) {
      lo = std::min(lo, (*it)[i]);
      hi = std::max(hi, (*it)[i]);
    }
    if (!(hi - lo < tolerance)) return false;
  }
  return true;
}

}  // namespace dyngame
