#include <cmath>
#include <cstdlib>

#include "proxguard/error.hpp"
#include "proxguard/random.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

bool ground_truth(const Point& a, const Point& b, double delta) { return distance(a, b) <= delta; }

BaselineCell baseline_cell(const Point& origin, double delta, const Point& p) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  return {static_cast<std::int32_t>(std::floor((p.x - origin.x) / delta)),
          static_cast<std::int32_t>(std::floor((p.y - origin.y) / delta))};
}

bool baseline_in_proximity(const BaselineCell& a, const BaselineCell& b) {
  return std::abs(a.col - b.col) <= 1 && std::abs(a.row - b.row) <= 1;
}

double PlacementEstimate::precision() const {
  return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double PlacementEstimate::recall() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

PlacementEstimate baseline_uniform_placements(double delta, std::uint64_t trials,
                                              std::uint64_t seed) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  DeterministicRandom rng(seed, "baseline-placements");
  PlacementEstimate est;
  // The grid is translation invariant, so the requester's cell is (0, 0).
  const Point origin{0.0, 0.0};
  for (std::uint64_t k = 0; k < trials; ++k) {
    const Point a{rng.uniform_unit() * delta, rng.uniform_unit() * delta};
    const Point b{(rng.uniform_unit() * 5.0 - 2.0) * delta, (rng.uniform_unit() * 5.0 - 2.0) * delta};
    const bool truth = ground_truth(a, b, delta);
    const bool reported = baseline_in_proximity(baseline_cell(origin, delta, a), baseline_cell(origin, delta, b));
    if (truth && reported) ++est.tp;
    else if (reported) ++est.fp;
    else if (truth) ++est.fn;
    else ++est.tn;
  }
  return est;
}

}  // namespace proxguard
