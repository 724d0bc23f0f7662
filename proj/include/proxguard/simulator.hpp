#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proxguard/granularity.hpp"
#include "proxguard/messages.hpp"
#include "proxguard/transport.hpp"

namespace proxguard {

struct Sample {
  double t = 0.0;
  Point p;
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Positions sampled at a fixed period; between samples a user stays at the
// last sampled position.
struct Trajectory {
  UserId user = 0;
  std::vector<Sample> samples;

  // Position at time t (sample-and-hold; before the first sample, the first
  // sample). Throws ParameterError on an empty trajectory.
  Point at(double t) const;
  // Time of the sample in effect at t.
  double sample_time(double t) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class ProtocolKind { kNaive, kHideSeek, kHideHash, kPierre };

std::string_view to_string(ProtocolKind p);
// "naive", "c-hide-seek", "c-hide-hash", "pierre-baseline"; UsageError otherwise.
ProtocolKind parse_protocol(std::string_view name);

struct ScenarioConfig {
  std::uint32_t users = 200;
  std::uint32_t buddies = 20;
  double domain_width = 4800.0;
  double domain_height = 4800.0;
  double delta = 400.0;
  double cell_edge = 200.0;
  double update_interval = 240.0;
  double request_period = 600.0;
  double duration = 4 * 3600.0;
  double sampling_period = 120.0;
  double v_min = 0.5;
  double v_max = 3.0;
  double pause_max = 300.0;
  ProtocolKind protocol = ProtocolKind::kHideSeek;
  Semantics semantics = Semantics::kMinDist;
  std::uint64_t seed = 1;
  double latency = 0.0;
  // Ground truth uses each buddy's position at the update the protocol
  // consumed, which removes the time-dependent approximation.
  bool freeze_positions = false;
  // > 0 enables the velocity guard with this top speed (m/s).
  double max_velocity = 0.0;
  std::string group = "sim512";
  std::string trace_file;  // non-empty: ingest instead of generating

  void validate() const;
};

// Grid of the users' privacy requirement; columns/rows cover the domain.
GridGranularity scenario_granularity(const ScenarioConfig& c);

std::vector<Trajectory> random_waypoint(const ScenarioConfig& config, std::uint64_t seed);

inline constexpr std::string_view kTraceHeader = "#proxtrace v1";

// "user_id,t_seconds,x_m,y_m" lines after the header. Samples of a user must
// have strictly increasing times. Throws ParseError (with line number) or
// ValidationError. Points are checked against the bounds when given.
std::vector<Trajectory> parse_traces(std::istream& in, const std::optional<Rect>& bounds = {});
std::vector<Trajectory> ingest_traces(const std::string& path,
                                      const std::optional<Rect>& bounds = {});
void export_traces(std::ostream& out, const std::vector<Trajectory>& trajectories);

bool ground_truth(const Point& a, const Point& b, double delta);

// Grid-adjacency baseline: cell edge equals delta; in proximity iff the
// buddy's cell is the requester's or one of its 8 neighbours.
struct BaselineCell {
  std::int32_t col = 0;
  std::int32_t row = 0;
};
BaselineCell baseline_cell(const Point& origin, double delta, const Point& p);
bool baseline_in_proximity(const BaselineCell& a, const BaselineCell& b);

struct PlacementEstimate {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const;
  double recall() const;
};

// Requester uniform over the domain interior, buddy uniform over the 5 x 5
// block of baseline cells around the requester's cell.
PlacementEstimate baseline_uniform_placements(double delta, std::uint64_t trials,
                                              std::uint64_t seed);

struct GroundTruthEvent {
  UserId requester = 0;
  UserId buddy = 0;
  double time = 0.0;
  bool in_proximity = false;
};

struct AnswerEvent {
  UserId requester = 0;
  UserId buddy = 0;
  double time = 0.0;
  bool reported = false;
  bool unknown = false;
  double uncertainty_km2 = 0.0;  // area the requester cannot narrow the buddy below
};

struct RequestRecord {
  UserId requester = 0;
  double time = 0.0;
  std::size_t buddies = 0;
  std::size_t frames = 0;
  std::uint64_t request_bytes = 0;
  std::uint64_t response_bytes = 0;
};

struct MetricsReport {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0, unknown = 0;
  double precision = 1.0;
  double recall = 1.0;
  double accuracy = 1.0;
  std::uint64_t requests = 0;
  std::map<MessageType, CostLedger::Tally> costs;
  double mean_uncertainty_km2 = 0.0;
  double min_uncertainty_km2 = 0.0;
  std::uint64_t min_updates_per_user = 0;
  std::uint64_t max_updates_per_user = 0;
  std::uint64_t key_uses = 0;
  std::uint64_t distinct_keys = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct RunResult {
  MetricsReport report;
  std::vector<GroundTruthEvent> truths;
  std::vector<AnswerEvent> answers;
  std::vector<RequestRecord> requests;
  std::vector<FrameRecord> frames;
  std::map<UserId, std::vector<double>> emissions;  // location-update send times
};

// Runs the scenario on generated (or ingested) trajectories.
RunResult run(const ScenarioConfig& scenario);
// Runs on caller-supplied trajectories, one per user id 0..users-1.
RunResult run(const ScenarioConfig& scenario, const std::vector<Trajectory>& trajectories);

// One JSON object per answered (requester, buddy) pair, tagged with the
// scenario label when one is given.
void write_event_log(std::ostream& out, const RunResult& result, std::string_view scenario = {});

}  // namespace proxguard
