#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxguard/analytics.hpp"
#include "proxguard/keys.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

// A sweep: the base scenario plus list-valued axes expanded as a Cartesian
// product (protocol x semantics x cell edge x delta x buddies).
struct RunManifest {
  ScenarioConfig base;
  std::vector<ProtocolKind> protocols{ProtocolKind::kHideSeek};
  std::vector<Semantics> semantics{Semantics::kMinDist};
  std::vector<double> cell_edges{200.0};
  std::vector<double> deltas{400.0};
  std::vector<std::uint32_t> buddies{20};
  std::string output_dir = "out";
  bool event_log = false;
  unsigned jobs = 1;
};

// "key = value" lines, '#' comments. Throws ParseError naming the line, or
// UsageError for an unknown protocol or semantics name.
RunManifest parse_manifest(std::istream& in);
RunManifest load_manifest(const std::string& path);
void write_manifest(std::ostream& out, const RunManifest& m);

// PROXGUARD_SEED, when set, replaces the manifest seed.
void apply_seed_override(RunManifest& m);

std::vector<ScenarioConfig> expand(const RunManifest& m);

// Label used in the CSV "scenario" column.
std::string scenario_label(std::size_t index);

inline constexpr const char* kMetricsHeader =
    "scenario,protocol,semantics,cell_edge_m,delta_m,users,buddies,metric,value";

void write_metric_rows(std::ostream& out, const std::string& label, const ScenarioConfig& c,
                       const MetricsReport& r);

struct SweepOutcome {
  std::size_t runs = 0;
  std::size_t failures = 0;
};

// Writes <output_dir>/metrics.csv, failures.csv when a run fails, and
// events.jsonl when event logging is on. A failing run does not stop the
// sweep.
SweepOutcome cmd_simulate(const RunManifest& m);

struct AnalyzeRequest {
  std::vector<double> ratios;
  std::vector<Semantics> semantics;
  std::uint64_t trials = 100000;
  Aggregation aggregation = Aggregation::kMinimum;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
};

// fig8.csv (precision), fig9.csv (recall), fig10.csv (uncertainty bound).
// trials == 0 or an empty list is a UsageError.
void cmd_analyze(const AnalyzeRequest& req);

using KeyFile = std::map<UserId, SharedKey>;

// "user_id:hex_key" per line; '#' comments. Throws ParseError with the line.
KeyFile parse_key_file(std::istream& in);
KeyFile load_key_file(const std::string& path);
void write_key_file(std::ostream& out, const KeyFile& keys);

// One key per user 0..users-1. When a graph is given it must only mention
// those users. A seed makes the output reproducible.
KeyFile cmd_keygen(std::uint32_t users, const std::optional<std::string>& graph_path,
                   const std::optional<std::uint64_t>& seed);

struct ServeOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7400;
  std::string graph_path;
  std::string group = "sim512";
};

// Blocks until SIGTERM/SIGINT; prints "listening on host:port" first.
int cmd_serve(const ServeOptions& opts, std::ostream& out);

struct ClientOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7400;
  std::string key_path;
  std::string graph_path;
  std::string trace_path;
  ProtocolKind protocol = ProtocolKind::kHideSeek;
  Semantics semantics = Semantics::kMinDist;
  double delta = 400.0;
  double cell_edge = 200.0;
  double domain_width = 4800.0;
  double domain_height = 4800.0;
  double update_interval = 240.0;
  double request_period = 600.0;
  std::string group = "sim512";
  std::uint64_t seed = 1;
};

struct VerdictLine {
  double time = 0.0;
  UserId requester = 0;
  UserId buddy = 0;
  Outcome outcome = Outcome::kUnknown;
  friend bool operator==(const VerdictLine&, const VerdictLine&) = default;
};

std::string format_verdict(const VerdictLine& v);

using RoundTrip = std::function<Bytes(const Bytes&)>;

// Plays every user of the trace through the location-update and request
// sub-protocols, in time order, over `roundtrip`.
std::vector<VerdictLine> replay(const ClientOptions& opts, const KeyFile& keys, const RoundTrip& roundtrip);

// Loads keys, graph and trace before connecting, then replays against the
// live server and prints one verdict per line.
int cmd_client(const ClientOptions& opts, std::ostream& out);

}  // namespace proxguard
