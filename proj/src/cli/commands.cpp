#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "proxguard/cli.hpp"
#include "proxguard/error.hpp"
#include "proxguard/net.hpp"
#include "proxguard/protocol.hpp"
#include "proxguard/server.hpp"
#include "proxguard/transport.hpp"

namespace proxguard {

namespace {

std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt_fraction(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

struct RunSlot {
  std::optional<RunResult> result;
  std::string error;
};

}  // namespace

void write_metric_rows(std::ostream& out, const std::string& label, const ScenarioConfig& c,
                       const MetricsReport& r) {
  const std::string prefix = label + ',' + std::string(to_string(c.protocol)) + ',' +
                             std::string(to_string(c.semantics)) + ',' + fmt_number(c.cell_edge) + ',' +
                             fmt_number(c.delta) + ',' + std::to_string(c.users) + ',' +
                             std::to_string(c.buddies) + ',';
  const auto row = [&](const std::string& metric, const std::string& value) {
    out << prefix << metric << ',' << value << '\n';
  };
  const auto count = [&](const std::string& metric, std::uint64_t v) { row(metric, std::to_string(v)); };
  row("precision", fmt_fraction(r.precision));
  row("recall", fmt_fraction(r.recall));
  row("accuracy", fmt_fraction(r.accuracy));
  count("tp", r.tp);
  count("fp", r.fp);
  count("tn", r.tn);
  count("fn", r.fn);
  count("unknown", r.unknown);
  count("requests", r.requests);
  row("mean_uncertainty_km2", fmt_fraction(r.mean_uncertainty_km2));
  row("min_uncertainty_km2", fmt_fraction(r.min_uncertainty_km2));
  count("min_updates_per_user", r.min_updates_per_user);
  count("max_updates_per_user", r.max_updates_per_user);
  count("key_uses", r.key_uses);
  count("distinct_keys", r.distinct_keys);
  CostLedger::Tally total;
  for (const auto& [type, tally] : r.costs) {
    count("messages." + std::string(to_string(type)), tally.messages);
    count("bytes." + std::string(to_string(type)), tally.bytes);
    total.messages += tally.messages;
    total.bytes += tally.bytes;
  }
  count("messages.total", total.messages);
  count("bytes.total", total.bytes);
}

SweepOutcome cmd_simulate(const RunManifest& m) {
  const std::vector<ScenarioConfig> configs = expand(m);
  make_dir(m.output_dir);

  std::vector<RunSlot> slots(configs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        slots[i].result = run(configs[i]);
      } catch (const Error& e) {
        slots[i].error = e.kind() + ": " + e.what();
      } catch (const std::exception& e) {
        slots[i].error = std::string("internal: ") + e.what();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(m.jobs, 1, static_cast<unsigned>(std::max<std::size_t>(configs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::filesystem::path dir(m.output_dir);
  {
    auto out = open_output(dir / "manifest.resolved");
    write_manifest(out, m);
  }
  SweepOutcome outcome{configs.size(), 0};
  auto metrics = open_output(dir / "metrics.csv");
  metrics << kMetricsHeader << '\n';
  std::ostringstream failures;
  std::ofstream events;
  if (m.event_log) events = open_output(dir / "events.jsonl");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string label = scenario_label(i);
    if (!slots[i].result) {
      ++outcome.failures;
      failures << label << ',' << to_string(configs[i].protocol) << ",\"" << slots[i].error << "\"\n";
      continue;
    }
    write_metric_rows(metrics, label, configs[i], slots[i].result->report);
    if (m.event_log) write_event_log(events, *slots[i].result, label);
  }
  if (outcome.failures > 0) {
    auto out = open_output(dir / "failures.csv");
    out << "scenario,protocol,error\n" << failures.str();
  }
  return outcome;
}

void cmd_analyze(const AnalyzeRequest& req) {
  if (req.trials == 0) throw UsageError("trials must be positive");
  if (req.trials < kMinTrials) throw UsageError("trials must be at least " + std::to_string(kMinTrials));
  if (req.ratios.empty()) throw UsageError("no ratios given");
  if (req.semantics.empty()) throw UsageError("no semantics given");
  for (const double r : req.ratios) {
    if (!(r > 0.0)) throw UsageError("ratios must be positive");
  }

  std::vector<SemanticsCurvePoint> curve;
  std::vector<UncertaintyBound> bounds;
  const CurveOptions options{req.aggregation, req.seed, kDefaultCoverageLattice};
  for (const Semantics s : req.semantics) {
    for (const double r : req.ratios) {
      curve.push_back(expected_precision_recall(r, s, req.trials, options));
      bounds.push_back(uncertainty_lower_bound(r, s));
    }
  }
  make_dir(req.output_dir);
  const std::filesystem::path dir(req.output_dir);
  {
    auto out = open_output(dir / "fig8.csv");
    write_precision_csv(out, curve);
  }
  {
    auto out = open_output(dir / "fig9.csv");
    write_recall_csv(out, curve);
  }
  auto out = open_output(dir / "fig10.csv");
  write_uncertainty_csv(out, bounds);
}

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;

extern "C" void on_stop_signal(int) { g_stop_requested = 1; }

}  // namespace

int cmd_serve(const ServeOptions& opts, std::ostream& out) {
  const BuddyGraph graph = BuddyGraph::load(opts.graph_path);
  const CommutativeGroup& group = CommutativeGroup::by_name(opts.group);
  SystemRandom rng;
  Server server(graph, group, rng);
  TcpServer tcp(server, opts.host, opts.port);

  g_stop_requested = 0;
  struct sigaction sa {};
  sa.sa_handler = on_stop_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGINT, &sa, nullptr);

  out << "listening on " << opts.host << ':' << tcp.port() << std::endl;
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_stop_requested != 0) {
        tcp.stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  try {
    tcp.serve();
  } catch (...) {
    done = true;
    watcher.join();
    throw;
  }
  done = true;
  watcher.join();
  out << "stopped" << std::endl;
  return 0;
}

std::string format_verdict(const VerdictLine& v) {
  const char* outcome = v.outcome == Outcome::kInProximity      ? "in-proximity"
                        : v.outcome == Outcome::kNotInProximity ? "not-in-proximity"
                                                                : "unknown";
  char buf[128];
  std::snprintf(buf, sizeof buf, "t=%.3f requester=%u buddy=%u verdict=%s", v.time, v.requester, v.buddy,
                outcome);
  return buf;
}

namespace {

Frame expect_reply(const Bytes& reply) {
  Frame f = decode(reply);
  if (const auto* err = std::get_if<ErrorMsg>(&f)) {
    throw ProtocolError("server error " + std::to_string(err->code) + ": " + err->reason);
  }
  return f;
}

}  // namespace

std::vector<VerdictLine> replay(const ClientOptions& opts, const KeyFile& keys, const RoundTrip& roundtrip) {
  if (opts.protocol != ProtocolKind::kHideSeek && opts.protocol != ProtocolKind::kHideHash) {
    throw UsageError("the client speaks c-hide-seek or c-hide-hash only");
  }
  ScenarioConfig shape;
  shape.domain_width = opts.domain_width;
  shape.domain_height = opts.domain_height;
  shape.cell_edge = opts.cell_edge;
  const GridGranularity grid = scenario_granularity(shape);
  const BuddyGraph graph = BuddyGraph::load(opts.graph_path);
  const auto trajectories = ingest_traces(opts.trace_path, Rect{0.0, 0.0, grid.width(), grid.height()});
  const CommutativeGroup& group = CommutativeGroup::by_name(opts.group);

  struct Player {
    const Trajectory* trajectory;
    PrivacyProfile profile;
    SharedKey key;
    UpdateSchedule schedule;
    double phase;
    std::vector<BuddyInfo> buddies;
  };
  DeterministicRandom sched(opts.seed, "replay-schedule");
  DeterministicRandom rng(opts.seed, "replay-client");
  std::vector<Player> players;
  double duration = 0.0;
  for (const auto& tr : trajectories) {
    const auto key = keys.find(tr.user);
    if (key == keys.end()) throw ValidationError("no key for user " + std::to_string(tr.user));
    Player p{&tr, PrivacyProfile{tr.user, grid, opts.delta, opts.semantics, std::nullopt}, key->second,
             UpdateSchedule{opts.update_interval, sched.uniform_unit() * opts.update_interval},
             sched.uniform_unit() * opts.request_period, {}};
    validate(p.schedule);
    if (graph.has_user(tr.user)) {
      for (const UserId b : graph.buddies_of(tr.user)) {
        const auto bk = keys.find(b);
        if (bk == keys.end()) throw ValidationError("no key for buddy " + std::to_string(b));
        p.buddies.push_back(BuddyInfo{b, grid, bk->second});
      }
    }
    duration = std::max(duration, tr.samples.back().t);
    players.push_back(std::move(p));
  }

  struct Step {
    double time;
    int kind;  // 0 update, 1 request
    std::size_t player;
    IntervalIndex ui;
  };
  std::vector<Step> steps;
  for (std::size_t k = 0; k < players.size(); ++k) {
    const Player& p = players[k];
    for (const double t : emission_times(p.schedule, duration)) steps.push_back({t, 0, k, interval_at(p.schedule, t)});
    if (p.buddies.empty()) continue;
    for (double t = opts.update_interval + p.phase; t < duration; t += opts.request_period) {
      steps.push_back({t, 1, k, 0});
    }
  }
  std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
    return std::tie(a.time, a.kind, a.player) < std::tie(b.time, b.kind, b.player);
  });

  const UpdateMode mode = opts.protocol == ProtocolKind::kHideHash ? UpdateMode::kHash : UpdateMode::kSeek;
  std::vector<VerdictLine> verdicts;
  for (const Step& s : steps) {
    Player& p = players[s.player];
    const Point here = p.trajectory->at(s.time);
    if (s.kind == 0) {
      const Frame f = expect_reply(roundtrip(encode(build_location_update(p.profile, p.key, here, s.ui, mode, rng))));
      if (!std::holds_alternative<Ack>(f)) throw ProtocolError("expected an ack for a location update");
      continue;
    }
    if (opts.protocol == ProtocolKind::kHideSeek) {
      const Frame f = expect_reply(roundtrip(encode(build_prox_request_hns(p.profile.user))));
      const auto* resp = std::get_if<SeekResponse>(&f);
      if (resp == nullptr || resp->entries.size() != p.buddies.size()) throw ProtocolError("malformed seek response");
      for (std::size_t b = 0; b < p.buddies.size(); ++b) {
        const auto v = decide_hns(resp->entries[b], p.buddies[b], p.profile, here);
        verdicts.push_back({s.time, p.profile.user, v.buddy, v.outcome});
      }
    } else {
      const IntervalIndex now_ui = interval_at(p.schedule, s.time);
      HashRequestBuild build = build_prox_request_hnh(p.profile, here, p.buddies, now_ui - 1, group, rng);
      const Frame f = expect_reply(roundtrip(encode(build.request)));
      const auto* resp = std::get_if<ProxResponse>(&f);
      if (resp == nullptr) throw ProtocolError("malformed hash response");
      for (const auto& v : decide_hnh(*resp, build.pending, group)) {
        verdicts.push_back({s.time, p.profile.user, v.buddy, v.outcome});
      }
    }
  }
  return verdicts;
}

int cmd_client(const ClientOptions& opts, std::ostream& out) {
  // Everything local is loaded before the first connection attempt.
  const KeyFile keys = load_key_file(opts.key_path);
  std::unique_ptr<TcpClient> client;
  const auto verdicts = replay(opts, keys, [&](const Bytes& frame) {
    if (!client) client = std::make_unique<TcpClient>(opts.host, opts.port);
    return client->roundtrip(frame);
  });
  for (const auto& v : verdicts) out << format_verdict(v) << '\n';
  out.flush();
  return 0;
}

}  // namespace proxguard
