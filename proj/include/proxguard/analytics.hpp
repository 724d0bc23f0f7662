#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "proxguard/granularity.hpp"
#include "proxguard/protocol.hpp"

namespace proxguard {

struct Trajectory;

// How per-offset estimates are combined.
//   kMinimum: minimum over requester offsets on an n x n within-cell lattice,
//             each offset estimated on the same `trials` buddy placements.
//   kPooled:  requester offset and buddy both drawn per trial; the
//             population value a uniform snapshot measures.
enum class Aggregation { kMinimum, kPooled };

struct SemanticsCurvePoint {
  double ratio = 0.0;  // delta / l
  Semantics semantics = Semantics::kMinDist;
  double precision = 1.0;
  double recall = 1.0;
};

struct CurveOptions {
  Aggregation aggregation = Aggregation::kMinimum;
  std::uint64_t seed = 1;
  int lattice = kDefaultCoverageLattice;
};

inline constexpr std::uint64_t kMinTrials = 10000;

// Cells of edge 1, delta = ratio, buddy uniform around the requester.
// Throws ParameterError unless ratio > 0 and trials >= kMinTrials.
SemanticsCurvePoint expected_precision_recall(double ratio, Semantics semantics,
                                              std::uint64_t trials, const CurveOptions& options = {});

struct UncertaintyBound {
  double ratio = 0.0;
  Semantics semantics = Semantics::kMinDist;
  std::uint64_t granules = 0;  // min |S'| over the offset lattice
};

UncertaintyBound uncertainty_lower_bound(double ratio, Semantics semantics,
                                         int lattice = kDefaultCoverageLattice);

// Frequency of each granule over observed positions; sums to 1 when any
// position was seen.
struct EmpiricalLocationDistribution {
  std::map<GranuleIndex, double> mass;
  double total() const;
};

EmpiricalLocationDistribution empirical_distribution(const GridGranularity& g,
                                                     const std::vector<Trajectory>& trajectories);

struct ScheduleObservation {
  UpdateSchedule schedule;
  std::vector<double> emissions;
};

struct IndependenceResult {
  bool pass = true;
  std::size_t mismatches = 0;  // observations whose emission multiset differs from the first
};

// Exact structural check that emission times depend on (T, t) only.
// Throws ParameterError for fewer than 2 observations or differing (T, t).
IndependenceResult independence_test(const std::vector<ScheduleObservation>& observations);

// Emissions of the location-free policy for one trajectory.
ScheduleObservation observe_schedule(const UpdateSchedule& s, const Trajectory& trajectory,
                                     double duration);

void write_precision_csv(std::ostream& out, const std::vector<SemanticsCurvePoint>& rows);
void write_recall_csv(std::ostream& out, const std::vector<SemanticsCurvePoint>& rows);
void write_uncertainty_csv(std::ostream& out, const std::vector<UncertaintyBound>& rows);

}  // namespace proxguard
