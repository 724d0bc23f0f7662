#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "proxguard/commutative.hpp"
#include "proxguard/error.hpp"
#include "proxguard/protocol.hpp"
#include "proxguard/random.hpp"
#include "proxguard/server.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

namespace {

enum class EventKind { kUpdate = 0, kDeliver = 1, kRequest = 2 };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::kUpdate;
  std::uint64_t seq = 0;
  UserId user = 0;
  bool to_server = false;  // kDeliver: which side of the user's link receives
  IntervalIndex ui = 0;    // kUpdate

  // Min-heap on (time, kind, seq): at equal times updates go first, then
  // deliveries, then new requests.
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct Outstanding {
  std::size_t record = 0;  // index into RunResult::requests
  double time = 0.0;
  Point position;
  IntervalIndex ui_prev = 0;
  std::optional<PendingHashRequest> pending;
  std::set<UserId> awaiting;  // baseline replies still due
};

struct User {
  User(UserId u, PrivacyProfile p, SharedKey k) : id(u), profile(std::move(p)), key(k) {}

  UserId id = 0;
  PrivacyProfile profile;
  SharedKey key;
  UpdateSchedule schedule;
  double request_phase = 0.0;
  std::unique_ptr<DeterministicRandom> rng;
  std::shared_ptr<SimulatedEndpoint> client;
  std::shared_ptr<SimulatedEndpoint> server_side;
  VelocityGuardState guard;
  std::vector<UserId> buddies;
  std::vector<BuddyInfo> buddy_info;
  std::map<IntervalIndex, double> update_times;
  std::deque<std::size_t> awaiting_server;  // requests sent, not yet at the SP
  std::deque<Outstanding> outstanding;      // requests awaiting their answer
};

BuddyGraph sample_buddies(const ScenarioConfig& c) {
  DeterministicRandom rng(c.seed, "buddy-graph");
  BuddyGraph graph;
  for (UserId u = 0; u < c.users; ++u) {
    std::vector<UserId> others;
    others.reserve(c.users - 1);
    for (UserId v = 0; v < c.users; ++v) {
      if (v != u) others.push_back(v);
    }
    // partial Fisher-Yates: the first k slots are a uniform k-subset
    for (std::size_t i = 0; i < c.buddies; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform(others.size() - i));
      std::swap(others[i], others[j]);
    }
    graph.add(u, std::set<UserId>(others.begin(), others.begin() + c.buddies));
  }
  return graph;
}

class Simulation {
 public:
  Simulation(const ScenarioConfig& c, const std::vector<Trajectory>& trajectories)
      : c_(c),
        traj_(trajectories),
        grid_(scenario_granularity(c)),
        group_(CommutativeGroup::by_name(c.group)),
        server_rng_(c.seed, "server"),
        server_(sample_buddies(c), group_, server_rng_) {
    setup();
  }

  RunResult run() {
    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      try {
        dispatch(e);
      } catch (const Error& err) {
        std::ostringstream ctx;
        ctx << "t=" << e.time << " user=" << e.user << " event=" << event_name(e) << ": "
            << err.kind() << ": " << err.what();
        throw ProtocolError(ctx.str());
      }
    }
    finish();
    return std::move(result_);
  }

 private:
  static const char* event_name(const Event& e) {
    switch (e.kind) {
      case EventKind::kUpdate: return "location-update";
      case EventKind::kRequest: return "proximity-request";
      case EventKind::kDeliver: return e.to_server ? "deliver-to-server" : "deliver-to-client";
    }
    return "?";
  }

  void push(Event e) {
    e.seq = seq_++;
    events_.push(e);
  }

  void setup() {
    DeterministicRandom keys(c_.seed, "shared-keys");
    DeterministicRandom sched(c_.seed, "schedule");
    std::map<UserId, SharedKey> key_of;
    users_.reserve(c_.users);
    for (UserId u = 0; u < c_.users; ++u) {
      if (traj_[u].user != u || traj_[u].samples.empty()) {
        throw ParameterError("trajectory " + std::to_string(u) + " missing or empty");
      }
      const std::optional<double> vmax =
          c_.max_velocity > 0.0 ? std::optional<double>(c_.max_velocity) : std::nullopt;
      User user(u, PrivacyProfile{u, grid_, c_.delta, c_.semantics, vmax}, gen_shared_key(keys));
      user.schedule = UpdateSchedule{c_.update_interval, sched.uniform_unit() * c_.update_interval};
      user.request_phase = sched.uniform_unit() * c_.request_period;
      user.rng = std::make_unique<DeterministicRandom>(c_.seed, "client/" + std::to_string(u));
      auto [client, server_side] = SimulatedChannel::make(c_.latency, &ledger_, u);
      client->set_delivery_log(&log_);
      user.client = std::move(client);
      user.server_side = std::move(server_side);
      key_of[u] = user.key;
      users_.push_back(std::move(user));
    }
    for (User& user : users_) {
      const auto& bs = server_.graph().buddies_of(user.id);
      user.buddies.assign(bs.begin(), bs.end());
      for (const UserId b : user.buddies) user.buddy_info.push_back(BuddyInfo{b, grid_, key_of.at(b)});
    }

    for (const User& user : users_) {
      if (c_.protocol == ProtocolKind::kNaive) {
        for (std::size_t k = 0; k < traj_[user.id].samples.size(); ++k) {
          const double t = traj_[user.id].samples[k].t;
          if (t >= 0.0 && t < c_.duration) push({t, EventKind::kUpdate, 0, user.id, false, k});
        }
      } else if (c_.protocol != ProtocolKind::kPierre) {
        for (const double t : emission_times(user.schedule, c_.duration)) {
          push({t, EventKind::kUpdate, 0, user.id, false, interval_at(user.schedule, t)});
        }
      }
      // The first request waits for one complete update interval.
      for (double t = c_.update_interval + user.request_phase; t < c_.duration; t += c_.request_period) {
        push({t, EventKind::kRequest, 0, user.id, false, 0});
      }
    }
  }

  void send(User& u, bool from_client, const Frame& f, double now) {
    const Bytes bytes = encode(f);
    (from_client ? u.client : u.server_side)->send(bytes, now);
    push({now + c_.latency, EventKind::kDeliver, 0, u.id, from_client, 0});
  }

  void dispatch(const Event& e) {
    User& u = users_.at(e.user);
    switch (e.kind) {
      case EventKind::kUpdate: on_update(u, e.ui, e.time); break;
      case EventKind::kRequest: on_request(u, e.time); break;
      case EventKind::kDeliver: {
        auto frame = (e.to_server ? u.server_side : u.client)->receive(e.time);
        if (!frame) throw ProtocolError("scheduled delivery found no frame");
        if (e.to_server) on_server_frame(u, frame->bytes, e.time);
        else on_client_frame(u, frame->bytes, e.time);
        break;
      }
    }
  }

  void on_update(User& u, IntervalIndex ui, double now) {
    const Point p = traj_[u.id].at(now);
    u.update_times[ui] = now;
    result_.emissions[u.id].push_back(now);
    if (c_.protocol == ProtocolKind::kNaive) {
      send(u, true, build_plain_update(u.id, p, ui), now);
      return;
    }
    const GranuleIndex actual = granule_of(grid_, p);
    GranuleIndex reported = actual;
    if (u.profile.max_velocity) {
      reported = velocity_guard(u.guard, grid_, *u.profile.max_velocity, actual, now, *u.rng);
    }
    const UpdateMode mode = c_.protocol == ProtocolKind::kHideHash ? UpdateMode::kHash : UpdateMode::kSeek;
    send(u, true, build_location_update(u.profile, u.key, reported, ui, mode, *u.rng, &keys_), now);
  }

  void on_request(User& u, double now) {
    Outstanding o;
    o.record = result_.requests.size();
    o.time = now;
    o.position = traj_[u.id].at(now);
    result_.requests.push_back({u.id, now, u.buddies.size(), 0, 0, 0});
    RequestRecord& rec = result_.requests.back();

    Frame f;
    switch (c_.protocol) {
      case ProtocolKind::kNaive:
      case ProtocolKind::kHideSeek: f = build_prox_request_hns(u.id); break;
      case ProtocolKind::kHideHash: {
        const IntervalIndex now_ui = interval_at(u.schedule, now);
        if (now_ui == 0) throw ProtocolError("hash request before the first complete interval");
        o.ui_prev = now_ui - 1;
        HashRequestBuild b = build_prox_request_hnh(u.profile, o.position, u.buddy_info, o.ui_prev, group_, *u.rng);
        f = std::move(b.request);
        o.pending = std::move(b.pending);
        break;
      }
      case ProtocolKind::kPierre: {
        const BaselineCell cell = baseline_cell(grid_.origin(), c_.delta, o.position);
        for (const UserId b : u.buddies) {
          const Frame q = RelayMsg{u.id, b, RelayMsg::kQuery, cell.col, cell.row};
          rec.frames += 2;  // requester -> SP -> buddy
          rec.request_bytes += 2 * encode(q).size();
          send(u, true, q, now);
          o.awaiting.insert(b);
        }
        u.outstanding.push_back(std::move(o));
        return;
      }
    }
    const Bytes bytes = encode(f);
    ++rec.frames;
    rec.request_bytes += bytes.size();
    u.awaiting_server.push_back(o.record);
    u.outstanding.push_back(std::move(o));
    send(u, true, f, now);
  }

  void on_server_frame(User& u, const Bytes& bytes, double now) {
    if (static_cast<MessageType>(bytes[4]) == MessageType::kBaselineRelay) {
      const auto relay = std::get<RelayMsg>(decode(bytes));
      if (relay.from != u.id) throw AuthError("relay sender mismatch");
      User& target = users_.at(relay.to);
      send(target, false, relay, now);
      return;
    }
    const Bytes reply = handle_frame(server_, bytes);
    const auto in_type = static_cast<MessageType>(bytes[4]);
    if (in_type == MessageType::kProxRequestSeek || in_type == MessageType::kProxRequestHash) {
      if (u.awaiting_server.empty()) throw ProtocolError("request frame without a pending request");
      RequestRecord& rec = result_.requests[u.awaiting_server.front()];
      u.awaiting_server.pop_front();
      ++rec.frames;
      rec.response_bytes += reply.size();
    }
    u.server_side->send(reply, now);
    push({now + c_.latency, EventKind::kDeliver, 0, u.id, false, 0});
  }

  void on_client_frame(User& u, const Bytes& bytes, double now) {
    Frame f = decode(bytes);
    if (std::holds_alternative<Ack>(f)) return;
    if (const auto* err = std::get_if<ErrorMsg>(&f)) {
      throw ProtocolError("server error " + std::to_string(err->code) + ": " + err->reason);
    }
    if (const auto* relay = std::get_if<RelayMsg>(&f)) {
      on_relay(u, *relay, now);
      return;
    }
    if (u.outstanding.empty()) throw ProtocolError("response without an outstanding request");
    Outstanding o = std::move(u.outstanding.front());
    u.outstanding.pop_front();

    if (const auto* resp = std::get_if<SeekResponse>(&f)) {
      if (resp->entries.size() != u.buddies.size()) throw ProtocolError("seek response size mismatch");
      for (std::size_t k = 0; k < resp->entries.size(); ++k) {
        const SeekResponseEntry& entry = resp->entries[k];
        if (entry.buddy != u.buddy_info[k].id) throw ProtocolError("seek response order mismatch");
        const ProximityVerdict v = c_.protocol == ProtocolKind::kNaive
                                       ? decide_plain(entry, u.profile, o.position)
                                       : decide_hns(entry, u.buddy_info[k], u.profile, o.position);
        const double area = c_.protocol == ProtocolKind::kNaive ? 0.0 : area_km2(v.uncertainty_region.size());
        record(u, o, entry.buddy, v.outcome, entry.status == EntryStatus::kOk ? std::optional(entry.ui) : std::nullopt, area);
      }
      return;
    }
    if (const auto* resp = std::get_if<ProxResponse>(&f)) {
      if (!o.pending) throw ProtocolError("hash response to a non-hash request");
      for (const ProximityVerdict& v : decide_hnh(*resp, *o.pending, group_)) {
        record(u, o, v.buddy, v.outcome, o.ui_prev, area_km2(v.uncertainty_region.size()));
      }
      return;
    }
    throw ProtocolError("unexpected " + std::string(to_string(type_of(f))) + " frame at a client");
  }

  void on_relay(User& u, const RelayMsg& relay, double now) {
    if (relay.to != u.id) throw ProtocolError("relay delivered to the wrong user");
    if (relay.kind == RelayMsg::kQuery) {
      // The buddy answers with its own baseline cell.
      const BaselineCell cell = baseline_cell(grid_.origin(), c_.delta, traj_[u.id].at(now));
      User& requester = users_.at(relay.from);
      auto it = std::find_if(requester.outstanding.begin(), requester.outstanding.end(),
                             [&](const Outstanding& o) { return o.awaiting.contains(u.id); });
      if (it == requester.outstanding.end()) throw ProtocolError("baseline query without a request");
      const Frame reply = RelayMsg{u.id, relay.from, RelayMsg::kReply, cell.col, cell.row};
      RequestRecord& rec = result_.requests[it->record];
      rec.frames += 2;  // buddy -> SP -> requester
      rec.response_bytes += 2 * encode(reply).size();
      send(u, true, reply, now);
      reply_times_[{relay.from, u.id, it->record}] = now;
      return;
    }
    auto it = std::find_if(u.outstanding.begin(), u.outstanding.end(),
                           [&](const Outstanding& o) { return o.awaiting.contains(relay.from); });
    if (it == u.outstanding.end()) throw ProtocolError("baseline reply without a request");
    it->awaiting.erase(relay.from);
    const BaselineCell mine = baseline_cell(grid_.origin(), c_.delta, it->position);
    const bool reported = baseline_in_proximity(mine, {relay.col, relay.row});
    const double area = c_.delta * c_.delta / 1e6;
    record(u, *it, relay.from, reported ? Outcome::kInProximity : Outcome::kNotInProximity, std::nullopt, area,
           reply_times_.at({u.id, relay.from, it->record}));
    if (it->awaiting.empty()) u.outstanding.erase(it);
  }

  double area_km2(std::uint64_t granules) const {
    return static_cast<double>(granules) * c_.cell_edge * c_.cell_edge / 1e6;
  }

  // consumed_ui: the buddy update the answer was computed from, if any.
  void record(const User& u, const Outstanding& o, UserId buddy, Outcome outcome,
              std::optional<IntervalIndex> consumed_ui, double area_km2,
              std::optional<double> buddy_time = std::nullopt) {
    double t_buddy = o.time;
    if (c_.freeze_positions) {
      if (buddy_time) {
        t_buddy = *buddy_time;
      } else if (consumed_ui) {
        const auto& times = users_.at(buddy).update_times;
        const auto it = times.find(*consumed_ui);
        if (it == times.end()) throw ProtocolError("answer refers to an update that was never sent");
        t_buddy = it->second;
      }
    }
    const bool truth = ground_truth(o.position, traj_[buddy].at(t_buddy), u.profile.delta);
    result_.truths.push_back({u.id, buddy, o.time, truth});
    const bool unknown = outcome == Outcome::kUnknown;
    const bool reported = outcome == Outcome::kInProximity;
    result_.answers.push_back({u.id, buddy, o.time, reported, unknown, unknown ? 0.0 : area_km2});
  }

  void finish() {
    MetricsReport& m = result_.report;
    double area_sum = 0.0;
    std::uint64_t answered = 0;
    m.min_uncertainty_km2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < result_.answers.size(); ++k) {
      const AnswerEvent& a = result_.answers[k];
      if (a.unknown) {
        ++m.unknown;
        continue;
      }
      const bool truth = result_.truths[k].in_proximity;
      if (a.reported && truth) ++m.tp;
      else if (a.reported) ++m.fp;
      else if (truth) ++m.fn;
      else ++m.tn;
      area_sum += a.uncertainty_km2;
      m.min_uncertainty_km2 = std::min(m.min_uncertainty_km2, a.uncertainty_km2);
      ++answered;
    }
    const auto ratio = [](std::uint64_t num, std::uint64_t den) {
      return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
    m.mean_uncertainty_km2 = answered == 0 ? 0.0 : area_sum / static_cast<double>(answered);
    if (answered == 0) m.min_uncertainty_km2 = 0.0;
    m.requests = result_.requests.size();
    for (const auto t : {MessageType::kLocationUpdate, MessageType::kProxRequestSeek, MessageType::kProxRequestHash,
                         MessageType::kProxResponseSeek, MessageType::kProxResponseHash, MessageType::kAck,
                         MessageType::kError, MessageType::kBaselineRelay}) {
      const auto tally = ledger_.total(t);
      if (tally.messages > 0) m.costs[t] = tally;
    }
    m.min_updates_per_user = std::numeric_limits<std::uint64_t>::max();
    m.max_updates_per_user = 0;
    for (const User& u : users_) {
      const auto it = result_.emissions.find(u.id);
      const std::uint64_t n = it == result_.emissions.end() ? 0 : it->second.size();
      m.min_updates_per_user = std::min(m.min_updates_per_user, n);
      m.max_updates_per_user = std::max(m.max_updates_per_user, n);
    }
    m.key_uses = keys_.uses();
    m.distinct_keys = keys_.distinct();
    result_.frames = log_.records();
  }

  const ScenarioConfig& c_;
  const std::vector<Trajectory>& traj_;
  GridGranularity grid_;
  const CommutativeGroup& group_;
  DeterministicRandom server_rng_;
  Server server_;
  CostLedger ledger_;
  DeliveryLog log_;
  KeyUsageLedger keys_;
  std::vector<User> users_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::map<std::tuple<UserId, UserId, std::size_t>, double> reply_times_;
  RunResult result_;
};

}  // namespace

RunResult run(const ScenarioConfig& scenario, const std::vector<Trajectory>& trajectories) {
  scenario.validate();
  if (trajectories.size() != scenario.users) {
    throw ParameterError("scenario has " + std::to_string(scenario.users) + " users but " +
                         std::to_string(trajectories.size()) + " trajectories");
  }
  return Simulation(scenario, trajectories).run();
}

RunResult run(const ScenarioConfig& scenario) {
  scenario.validate();
  if (!scenario.trace_file.empty()) {
    const GridGranularity g = scenario_granularity(scenario);
    const auto traces = ingest_traces(scenario.trace_file, Rect{0.0, 0.0, g.width(), g.height()});
    return run(scenario, traces);
  }
  return run(scenario, random_waypoint(scenario, scenario.seed));
}

void write_event_log(std::ostream& out, const RunResult& result, std::string_view scenario) {
  for (std::size_t k = 0; k < result.answers.size(); ++k) {
    const AnswerEvent& a = result.answers[k];
    nlohmann::ordered_json j;
    if (!scenario.empty()) j["scenario"] = scenario;
    j["t"] = a.time;
    j["requester"] = a.requester;
    j["buddy"] = a.buddy;
    j["truth"] = result.truths[k].in_proximity;
    j["outcome"] = a.unknown ? "unknown" : (a.reported ? "in-proximity" : "not-in-proximity");
    j["uncertainty_km2"] = a.uncertainty_km2;
    out << j.dump() << '\n';
  }
}

}  // namespace proxguard
