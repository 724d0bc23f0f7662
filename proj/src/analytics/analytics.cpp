#include "proxguard/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "proxguard/error.hpp"
#include "proxguard/random.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

namespace {

// Unit cells around the requester's cell [0,1)^2, wide enough to hold the
// disc and every cell a semantics can select.
struct Window {
  std::int64_t k;  // cells on each side of the requester's cell
  GridGranularity grid;

  explicit Window(double ratio)
      : k(static_cast<std::int64_t>(std::ceil(ratio)) + 1),
        grid({-static_cast<double>(k), -static_cast<double>(k)}, 1.0,
             static_cast<std::uint32_t>(2 * k + 1), static_cast<std::uint32_t>(2 * k + 1)) {}

  double span() const { return static_cast<double>(2 * k + 1); }
  Point sample(RandomSource& rng) const {
    const double lo = -static_cast<double>(k);
    return {lo + rng.uniform_unit() * span(), lo + rng.uniform_unit() * span()};
  }
};

void check_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ParameterError("ratio must be positive");
  if (ratio > 1000.0) throw ParameterError("ratio too large for the lattice window");
}

void check_lattice(int lattice) {
  if (lattice <= 0) throw ParameterError("offset lattice must be positive");
}

// Requester offsets on the lattice, restricted to x <= y <= 1/2. The cell
// and the semantics are symmetric under the square's 8 reflections/rotations,
// so this triangle reaches every value the full lattice does.
std::vector<Point> fundamental_offsets(int n) {
  std::vector<Point> out;
  const int half = (n - 1) / 2;
  for (int b = 0; b <= half; ++b) {
    for (int a = 0; a <= b; ++a) out.push_back({(a + 0.5) / n, (b + 0.5) / n});
  }
  return out;
}

double ratio_or_one(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

SemanticsCurvePoint minimum_curve(double ratio, Semantics semantics, std::uint64_t trials,
                                  const CurveOptions& options) {
  const Window w(ratio);
  DeterministicRandom rng(options.seed, "curve-buddies");
  std::vector<Point> buddies(trials);
  std::vector<std::uint32_t> cell(trials);
  for (std::uint64_t t = 0; t < trials; ++t) {
    buddies[t] = w.sample(rng);
    cell[t] = static_cast<std::uint32_t>(granule_of(w.grid, buddies[t]).value);
  }

  SemanticsCurvePoint out{ratio, semantics, 1.0, 1.0};
  std::vector<char> selected(w.grid.size());
  for (const Point& p : fundamental_offsets(options.lattice)) {
    std::fill(selected.begin(), selected.end(), 0);
    for (const GranuleIndex i : proximity_candidates(p, w.grid, ratio, semantics)) selected[i.value] = 1;
    std::uint64_t tp = 0, reported = 0, truth = 0;
    // squared form of ground_truth; this loop dominates the run time
    const double r2 = ratio * ratio;
    for (std::uint64_t t = 0; t < trials; ++t) {
      const bool r = selected[cell[t]] != 0;
      const double dx = buddies[t].x - p.x, dy = buddies[t].y - p.y;
      const bool in = dx * dx + dy * dy <= r2;
      reported += r;
      truth += in;
      tp += r && in;
    }
    out.precision = std::min(out.precision, ratio_or_one(tp, reported));
    out.recall = std::min(out.recall, ratio_or_one(tp, truth));
  }
  return out;
}

SemanticsCurvePoint pooled_curve(double ratio, Semantics semantics, std::uint64_t trials,
                                 const CurveOptions& options) {
  const Window w(ratio);
  DeterministicRandom rng(options.seed, "curve-pooled");
  std::uint64_t tp = 0, reported = 0, truth = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const Point p{rng.uniform_unit(), rng.uniform_unit()};
    const Point b = w.sample(rng);
    const bool r = in_proximity_of_cell(p, w.grid, granule_of(w.grid, b), ratio, semantics);
    const bool in = ground_truth(p, b, ratio);
    reported += r;
    truth += in;
    tp += r && in;
  }
  return {ratio, semantics, ratio_or_one(tp, reported), ratio_or_one(tp, truth)};
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

SemanticsCurvePoint expected_precision_recall(double ratio, Semantics semantics,
                                              std::uint64_t trials, const CurveOptions& options) {
  check_ratio(ratio);
  check_lattice(options.lattice);
  if (trials < kMinTrials) {
    throw ParameterError("at least " + std::to_string(kMinTrials) + " trials are required");
  }
  return options.aggregation == Aggregation::kMinimum ? minimum_curve(ratio, semantics, trials, options)
                                                      : pooled_curve(ratio, semantics, trials, options);
}

UncertaintyBound uncertainty_lower_bound(double ratio, Semantics semantics, int lattice) {
  check_ratio(ratio);
  check_lattice(lattice);
  const Window w(ratio);
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  for (const Point& p : fundamental_offsets(lattice)) {
    best = std::min<std::uint64_t>(best, proximity_candidates(p, w.grid, ratio, semantics).size());
  }
  // An empty S' still leaves the requester unsure of at least one cell.
  return {ratio, semantics, std::max<std::uint64_t>(best, 1)};
}

double EmpiricalLocationDistribution::total() const {
  double s = 0.0;
  for (const auto& [_, m] : mass) s += m;
  return s;
}

EmpiricalLocationDistribution empirical_distribution(const GridGranularity& g,
                                                     const std::vector<Trajectory>& trajectories) {
  std::map<GranuleIndex, std::uint64_t> counts;
  std::uint64_t n = 0;
  for (const auto& tr : trajectories) {
    for (const auto& s : tr.samples) {
      ++counts[granule_of(g, s.p)];
      ++n;
    }
  }
  EmpiricalLocationDistribution out;
  for (const auto& [i, c] : counts) out.mass[i] = static_cast<double>(c) / static_cast<double>(n);
  return out;
}

IndependenceResult independence_test(const std::vector<ScheduleObservation>& observations) {
  if (observations.size() < 2) throw ParameterError("independence test needs at least 2 trajectories");
  const UpdateSchedule& s0 = observations.front().schedule;
  for (const auto& o : observations) {
    if (o.schedule.period != s0.period || o.schedule.offset != s0.offset) {
      throw ParameterError("observations use different (T, t) schedules");
    }
  }
  auto reference = observations.front().emissions;
  std::sort(reference.begin(), reference.end());
  IndependenceResult out;
  for (std::size_t k = 1; k < observations.size(); ++k) {
    auto e = observations[k].emissions;
    std::sort(e.begin(), e.end());
    if (e != reference) ++out.mismatches;
  }
  out.pass = out.mismatches == 0;
  return out;
}

ScheduleObservation observe_schedule(const UpdateSchedule& s, const Trajectory& /*trajectory*/,
                                     double duration) {
  // The trajectory is deliberately unused: the policy never looks at it.
  return {s, emission_times(s, duration)};
}

void write_precision_csv(std::ostream& out, const std::vector<SemanticsCurvePoint>& rows) {
  out << "ratio,semantics,precision\n";
  for (const auto& r : rows) {
    out << format_ratio(r.ratio) << ',' << to_string(r.semantics) << ',' << format_value(r.precision) << '\n';
  }
}

void write_recall_csv(std::ostream& out, const std::vector<SemanticsCurvePoint>& rows) {
  out << "ratio,semantics,recall\n";
  for (const auto& r : rows) {
    out << format_ratio(r.ratio) << ',' << to_string(r.semantics) << ',' << format_value(r.recall) << '\n';
  }
}

void write_uncertainty_csv(std::ostream& out, const std::vector<UncertaintyBound>& rows) {
  out << "ratio,semantics,uncertainty_bound\n";
  for (const auto& r : rows) {
    out << format_ratio(r.ratio) << ',' << to_string(r.semantics) << ',' << r.granules << '\n';
  }
}

}  // namespace proxguard
