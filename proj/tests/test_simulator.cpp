#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "proxguard/error.hpp"
#include "proxguard/protocol.hpp"
#include "proxguard/simulator.hpp"

using namespace proxguard;

namespace {

ScenarioConfig small(ProtocolKind p, Semantics s = Semantics::kMinDist) {
  ScenarioConfig c;
  c.users = 30;
  c.buddies = 6;
  c.domain_width = 2400.0;
  c.domain_height = 2400.0;
  c.delta = 400.0;
  c.cell_edge = 200.0;
  c.duration = 3600.0;
  c.protocol = p;
  c.semantics = s;
  c.seed = 11;
  return c;
}

std::vector<Trajectory> parse(const std::string& text, const std::optional<Rect>& bounds = {}) {
  std::istringstream in(text);
  return parse_traces(in, bounds);
}

}  // namespace

TEST(GroundTruth, InclusiveAtDelta) {
  EXPECT_TRUE(ground_truth({0, 0}, {3, 4}, 5.0));
  EXPECT_FALSE(ground_truth({0, 0}, {3, 4}, 4.999));
  EXPECT_TRUE(ground_truth({7, 7}, {7, 7}, 0.0));
}

TEST(Trajectory, SampleAndHold) {
  const Trajectory t{0, {{0.0, {1, 1}}, {10.0, {2, 2}}, {20.0, {3, 3}}}};
  EXPECT_EQ(t.at(-5.0), (Point{1, 1}));
  EXPECT_EQ(t.at(9.99), (Point{1, 1}));
  EXPECT_EQ(t.at(10.0), (Point{2, 2}));
  EXPECT_EQ(t.at(1e9), (Point{3, 3}));
  EXPECT_DOUBLE_EQ(t.sample_time(15.0), 10.0);
  EXPECT_THROW(Trajectory{}.at(0.0), ParameterError);
}

TEST(Waypoint, DeterministicBoundedAndSpeedLimited) {
  const ScenarioConfig c = small(ProtocolKind::kNaive);
  const auto a = random_waypoint(c, 5);
  EXPECT_EQ(a, random_waypoint(c, 5));
  EXPECT_NE(a, random_waypoint(c, 6));
  ASSERT_EQ(a.size(), c.users);
  for (const auto& t : a) {
    ASSERT_EQ(t.samples.size(), 31U);  // 0, 120, ..., 3600
    for (std::size_t k = 0; k < t.samples.size(); ++k) {
      const auto& s = t.samples[k];
      EXPECT_DOUBLE_EQ(s.t, 120.0 * k);
      EXPECT_GE(s.p.x, 0.0);
      EXPECT_LE(s.p.x, c.domain_width);
      EXPECT_GE(s.p.y, 0.0);
      EXPECT_LE(s.p.y, c.domain_height);
      if (k > 0) {
        EXPECT_LE(distance(s.p, t.samples[k - 1].p), c.v_max * 120.0 + 1e-9);
      }
    }
  }
}

TEST(Traces, ExportParseRoundTrip) {
  const auto a = random_waypoint(small(ProtocolKind::kNaive), 3);
  std::stringstream buf;
  export_traces(buf, a);
  EXPECT_EQ(buf.str().rfind(std::string(kTraceHeader), 0), 0U);
  EXPECT_EQ(parse_traces(buf), a);
}

TEST(Traces, Errors) {
  const std::string h = std::string(kTraceHeader) + "\n";
  EXPECT_TRUE(parse(h).empty());
  EXPECT_TRUE(parse("").empty());
  EXPECT_THROW(parse(h + "0,10,1,1\n0,10,2,2\n"), ValidationError);
  EXPECT_THROW(parse(h + "0,10,1,1\n0,5,2,2\n"), ValidationError);
  try {
    parse(h + "# note\n0,0,1,1\n0,1,2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse(h + "0,0,abc,1\n"), ParseError);
  EXPECT_THROW(parse(h + "0,0,50,1\n", Rect{0, 0, 10, 10}), ValidationError);
  EXPECT_NO_THROW(parse(h + "0,0,10,10\n", Rect{0, 0, 10, 10}));
  EXPECT_THROW(ingest_traces("/nonexistent.trace"), IoError);
}

TEST(Config, RejectsInvalidScenarios) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.buddies = c.users;
  EXPECT_THROW(c.validate(), ParameterError);
  c = small(ProtocolKind::kHideSeek);
  c.update_interval = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_THROW(parse_protocol("gossip"), UsageError);
  for (const auto p : {ProtocolKind::kNaive, ProtocolKind::kHideSeek, ProtocolKind::kHideHash, ProtocolKind::kPierre}) {
    EXPECT_EQ(parse_protocol(to_string(p)), p);
  }
}

TEST(Grid, ScenarioGranularityCoversTheDomain) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.cell_edge = 350.0;
  const GridGranularity g = scenario_granularity(c);
  EXPECT_EQ(g.cols(), 7U);
  EXPECT_GE(g.width(), c.domain_width);
}

TEST(Run, IsDeterministic) {
  const ScenarioConfig c = small(ProtocolKind::kHideSeek);
  const RunResult a = run(c);
  const RunResult b = run(c);
  EXPECT_EQ(a.report, b.report);
  EXPECT_GT(a.report.requests, 0U);
  ScenarioConfig d = c;
  d.seed = 12;
  EXPECT_NE(run(d).report, a.report);
}

TEST(Run, NaiveIsExact) {
  const MetricsReport r = run(small(ProtocolKind::kNaive)).report;
  EXPECT_GT(r.tp, 0U);
  EXPECT_EQ(r.fp, 0U);
  EXPECT_EQ(r.fn, 0U);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
}

TEST(Run, FrozenSemanticsBounds) {
  for (const auto p : {ProtocolKind::kHideSeek, ProtocolKind::kHideHash}) {
    ScenarioConfig c = small(p, Semantics::kMinDist);
    c.users = 20;
    c.buddies = 4;
    c.freeze_positions = true;
    const MetricsReport mn = run(c).report;
    EXPECT_GT(mn.tp, 0U);
    EXPECT_EQ(mn.fn, 0U) << to_string(p);
    c.semantics = Semantics::kMaxDist;
    const MetricsReport mx = run(c).report;
    EXPECT_EQ(mx.fp, 0U) << to_string(p);
  }
}

TEST(Run, FineGranulesApproachExactness) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.domain_width = c.domain_height = 1200.0;
  c.delta = 200.0;
  c.cell_edge = c.delta / 64.0;
  c.freeze_positions = true;
  c.users = 40;
  c.buddies = 10;
  const MetricsReport r = run(c).report;
  EXPECT_GT(r.tp, 100U);
  EXPECT_GT(r.precision, 0.95);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
}

TEST(Run, TwoFramesPerCentralisedRequest) {
  for (const auto p : {ProtocolKind::kHideSeek, ProtocolKind::kHideHash}) {
    ScenarioConfig c = small(p);
    c.users = 12;
    c.buddies = 5;
    const RunResult r = run(c);
    ASSERT_FALSE(r.requests.empty());
    for (const auto& rec : r.requests) {
      EXPECT_EQ(rec.buddies, 5U);
      EXPECT_EQ(rec.frames, 2U);
    }
  }
}

TEST(Run, PierreRelaysFourFramesPerBuddy) {
  ScenarioConfig c = small(ProtocolKind::kPierre);
  c.buddies = 7;
  const RunResult r = run(c);
  ASSERT_FALSE(r.requests.empty());
  for (const auto& rec : r.requests) EXPECT_EQ(rec.frames, 4U * rec.buddies);
  EXPECT_DOUBLE_EQ(r.report.recall, 1.0);
}

TEST(Run, UpdatesFollowTheScheduleAndKeysAreSingleUse) {
  ScenarioConfig c = small(ProtocolKind::kHideHash);
  c.users = 10;
  c.buddies = 3;
  const RunResult r = run(c);
  EXPECT_EQ(r.report.min_updates_per_user, 15U);
  EXPECT_EQ(r.report.max_updates_per_user, 15U);
  EXPECT_EQ(r.report.key_uses, 150U);
  EXPECT_EQ(r.report.distinct_keys, r.report.key_uses);
  for (const auto& [user, times] : r.emissions) {
    for (std::size_t k = 1; k < times.size(); ++k) EXPECT_NEAR(times[k] - times[k - 1], c.update_interval, 1e-9);
  }
}

TEST(Run, VelocityGuardKeepsTheSchedule) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.users = 12;
  c.buddies = 3;
  c.max_velocity = c.v_max;
  ScenarioConfig plain = c;
  plain.max_velocity = 0.0;
  const RunResult guarded = run(c);
  EXPECT_EQ(guarded.emissions, run(plain).emissions);
  EXPECT_EQ(guarded.report.key_uses, guarded.report.distinct_keys);
}

TEST(Run, UncertaintyNeverBelowOneGranule) {
  ScenarioConfig c = small(ProtocolKind::kHideHash);
  c.users = 12;
  c.buddies = 3;
  const RunResult r = run(c);
  const double cell_km2 = 0.2 * 0.2;
  ASSERT_FALSE(r.answers.empty());
  for (const auto& a : r.answers) {
    if (!a.unknown) {
      EXPECT_GE(a.uncertainty_km2, cell_km2 - 1e-12);
    }
  }
  EXPECT_GE(r.report.min_uncertainty_km2, cell_km2 - 1e-12);
}

TEST(Run, LatencyDelaysButKeepsCounts) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.latency = 0.25;
  const RunResult r = run(c);
  EXPECT_EQ(r.report.requests, r.requests.size());
  EXPECT_EQ(r.report.costs.at(MessageType::kProxRequestSeek).messages, r.report.requests);
  EXPECT_EQ(r.report.costs.at(MessageType::kProxResponseSeek).messages, r.report.requests);
}

TEST(Run, LedgerMatchesIndependentRecount) {
  const RunResult r = run(small(ProtocolKind::kPierre));
  std::map<MessageType, CostLedger::Tally> recount;
  for (const auto& f : r.frames) {
    ++recount[f.type].messages;
    recount[f.type].bytes += f.bytes;
  }
  EXPECT_EQ(recount, r.report.costs);
}

TEST(EventLog, OneObjectPerAnswer) {
  ScenarioConfig c = small(ProtocolKind::kHideSeek);
  c.users = 10;
  c.buddies = 2;
  const RunResult r = run(c);
  std::stringstream out;
  write_event_log(out, r, "run-0000");
  std::size_t lines = 0;
  for (std::string line; std::getline(out, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("scenario"), "run-0000");
    EXPECT_TRUE(j.contains("outcome"));
  }
  EXPECT_EQ(lines, r.answers.size());
}

TEST(Baseline, CellsAndNeighbourhood) {
  EXPECT_EQ(baseline_cell({0, 0}, 100.0, {250.0, -1.0}).col, 2);
  EXPECT_EQ(baseline_cell({0, 0}, 100.0, {250.0, -1.0}).row, -1);
  EXPECT_TRUE(baseline_in_proximity({3, 3}, {4, 2}));
  EXPECT_FALSE(baseline_in_proximity({3, 3}, {5, 3}));
}

TEST(Baseline, UniformPlacementsPrecisionNearPiOverNine) {
  const PlacementEstimate e = baseline_uniform_placements(100.0, 100000, 7);
  EXPECT_NEAR(e.precision(), M_PI / 9.0, 0.02);
  EXPECT_DOUBLE_EQ(e.recall(), 1.0);
}

TEST(Baseline, SendsNoLocationUpdates) {
  ScenarioConfig c = small(ProtocolKind::kPierre);
  c.users = 10;
  c.buddies = 2;
  const RunResult r = run(c);
  EXPECT_EQ(r.report.costs.count(MessageType::kLocationUpdate), 0U);
  EXPECT_GT(r.report.costs.at(MessageType::kBaselineRelay).messages, 0U);
}
