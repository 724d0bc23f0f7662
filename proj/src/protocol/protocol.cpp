#include "proxguard/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>

#include "proxguard/error.hpp"

namespace proxguard {

void validate(const PrivacyProfile& profile) {
  if (!(profile.delta > 0.0) || !std::isfinite(profile.delta)) {
    throw ParameterError("proximity threshold must be positive");
  }
  if (profile.max_velocity && !(*profile.max_velocity > 0.0)) {
    throw ParameterError("max velocity must be positive");
  }
}

void validate(const UpdateSchedule& s) {
  if (!(s.period > 0.0) || !std::isfinite(s.period)) {
    throw ParameterError("update interval must be positive");
  }
  if (!(s.offset >= 0.0) || !(s.offset < s.period)) {
    throw ParameterError("update offset must lie in [0, T)");
  }
}

double update_time(const UpdateSchedule& s, IntervalIndex ui) {
  return static_cast<double>(ui) * s.period + s.offset;
}

IntervalIndex interval_at(const UpdateSchedule& s, double now) {
  if (now < 0.0) throw ParameterError("time must be non-negative");
  return static_cast<IntervalIndex>(std::floor(now / s.period));
}

double next_update_time(const UpdateSchedule& s, double now) {
  validate(s);
  if (now < 0.0) throw ParameterError("time must be non-negative");
  if (now < s.offset) return s.offset;
  auto ui = static_cast<IntervalIndex>(std::floor((now - s.offset) / s.period)) + 1;
  // Guard against floating-point landing exactly on `now`.
  while (update_time(s, ui) <= now) ++ui;
  while (ui > 0 && update_time(s, ui - 1) > now) --ui;
  return update_time(s, ui);
}

std::vector<double> emission_times(const UpdateSchedule& s, double duration) {
  validate(s);
  std::vector<double> out;
  for (IntervalIndex ui = 0;; ++ui) {
    const double t = update_time(s, ui);
    if (t >= duration) break;
    out.push_back(t);
  }
  return out;
}

void KeyUsageLedger::record(UserId owner, const IntervalKey& key) {
  ++uses_;
  if (!seen_.emplace(owner, key.bytes).second) {
    throw ProtocolError("interval key of user " + std::to_string(owner) + " used twice");
  }
}

LocationUpdateMsg build_location_update(const PrivacyProfile& profile, const SharedKey& key,
                                        GranuleIndex reported, IntervalIndex ui, UpdateMode mode,
                                        RandomSource& rng, KeyUsageLedger* ledger) {
  if (!profile.granularity.is_valid(reported)) {
    throw IndexError("reported granule is not valid for the user's granularity");
  }
  const IntervalKey k = derive_interval_key(key, ui);
  if (ledger != nullptr) ledger->record(profile.user, k);

  LocationUpdateMsg msg{profile.user, ui, mode, {}};
  switch (mode) {
    case UpdateMode::kSeek: msg.payload = enc(k, reported, rng); break;
    case UpdateMode::kHash: {
      const Digest d = salted_hash(k, reported.value);
      msg.payload.assign(d.bytes.begin(), d.bytes.end());
      break;
    }
    case UpdateMode::kPlain: throw ParameterError("plain updates carry coordinates, not granules");
  }
  return msg;
}

LocationUpdateMsg build_location_update(const PrivacyProfile& profile, const SharedKey& key,
                                        const Point& p, IntervalIndex ui, UpdateMode mode,
                                        RandomSource& rng, KeyUsageLedger* ledger) {
  return build_location_update(profile, key, granule_of(profile.granularity, p), ui, mode, rng,
                               ledger);
}

LocationUpdateMsg build_plain_update(UserId user, const Point& p, IntervalIndex ui) {
  LocationUpdateMsg msg{user, ui, UpdateMode::kPlain, Bytes(16)};
  const auto put = [&msg](std::size_t at, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) msg.payload[at + 7 - i] = static_cast<std::uint8_t>(bits >> (8 * i));
  };
  put(0, p.x);
  put(8, p.y);
  return msg;
}

Point plain_location(const LocationUpdateMsg& msg) {
  if (msg.mode != UpdateMode::kPlain || msg.payload.size() != 16) {
    throw ProtocolError("not a plain location update");
  }
  const auto get = [&msg](std::size_t at) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits = (bits << 8) | msg.payload[at + i];
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  };
  return {get(0), get(8)};
}

GranuleIndex velocity_guard(VelocityGuardState& state, const GridGranularity& g, double velocity,
                            GranuleIndex g_now, double now, RandomSource& rng) {
  if (!(velocity > 0.0)) throw ParameterError("velocity must be positive");
  state.last_randomized = false;
  GranuleIndex reported = g_now;

  if (!state.last_granule) {
    state.window.reset();
  } else if (state.window && g_now == state.window->to) {
    // still inside the window's target granule
  } else if (state.window && g_now == state.window->from) {
    state.window.reset();
  } else if (*state.last_granule != g_now) {
    // New crossing, or a third granule: the pair restarts from the granule of
    // the last update actually sent.
    state.window = VelocityGuardState::Window{*state.last_granule, g_now, state.last_time,
                                              t_max(g, *state.last_granule, g_now, velocity)};
  }

  if (state.window) {
    if (now - state.window->start < state.window->length) {
      reported = rng.coin() ? state.window->from : state.window->to;
      state.last_randomized = true;
    } else {
      state.window.reset();
    }
  }

  state.last_granule = g_now;
  state.last_time = now;
  return reported;
}

bool UncertaintyRegion::contains(GranuleIndex i) const {
  if (i.value >= universe) return false;
  const bool listed = std::binary_search(cells.begin(), cells.end(), i);
  return complement ? !listed : listed;
}

SeekRequest build_prox_request_hns(UserId requester) { return SeekRequest{requester}; }

namespace {

bool decide_cell(const PrivacyProfile& requester, const Point& p, const GridGranularity& g,
                 GranuleIndex i) {
  return in_proximity_of_cell(p, g, i, requester.delta, requester.semantics);
}

}  // namespace

ProximityVerdict decide_hns(const SeekResponseEntry& entry, const BuddyInfo& buddy,
                            const PrivacyProfile& requester, const Point& p) {
  ProximityVerdict v;
  v.buddy = entry.buddy;
  v.uncertainty_region.universe = buddy.granularity.size();
  if (entry.status == EntryStatus::kUnknown) {
    v.uncertainty_region.complement = true;
    return v;
  }
  if (entry.buddy != buddy.id) throw ProtocolError("response entry does not match buddy");
  if (entry.mode != UpdateMode::kSeek) throw ProtocolError("expected a sealed location update");

  GranuleIndex i;
  try {
    i = dec(derive_interval_key(buddy.key, entry.ui), entry.payload);
  } catch (const AuthenticationError& e) {
    throw ProtocolError("buddy " + std::to_string(buddy.id) + " undecidable: " + e.what());
  }
  if (!buddy.granularity.is_valid(i)) {
    throw ProtocolError("buddy " + std::to_string(buddy.id) + " reported a non-valid granule");
  }
  v.outcome = decide_cell(requester, p, buddy.granularity, i) ? Outcome::kInProximity
                                                              : Outcome::kNotInProximity;
  v.disclosed_granule = i;
  v.uncertainty_region.cells = {i};
  return v;
}

ProximityVerdict decide_plain(const SeekResponseEntry& entry, const PrivacyProfile& requester,
                              const Point& p) {
  ProximityVerdict v;
  v.buddy = entry.buddy;
  if (entry.status == EntryStatus::kUnknown) return v;
  const LocationUpdateMsg msg{entry.buddy, entry.ui, entry.mode, entry.payload};
  v.outcome = distance(p, plain_location(msg)) <= requester.delta ? Outcome::kInProximity
                                                                  : Outcome::kNotInProximity;
  return v;
}

std::pair<std::uint64_t, std::uint64_t> padding_range(const GridGranularity& g,
                                                      std::uint64_t smax) {
  const std::uint64_t n = g.size();
  return {n, n + std::max(n, smax)};
}

HashRequestBuild build_prox_request_hnh(const PrivacyProfile& profile, const Point& p,
                                        const std::vector<BuddyInfo>& buddies,
                                        IntervalIndex ui_prev, const CommutativeGroup& group,
                                        RandomSource& rng) {
  validate(profile);
  HashRequestBuild out;
  out.request.requester = profile.user;
  out.pending.k1 = group.gen_session_key(rng);

  std::vector<std::size_t> order(buddies.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);

  for (const std::size_t b : order) {
    const BuddyInfo& buddy = buddies[b];
    if (buddy.id == profile.user) throw ParameterError("a user cannot be their own buddy");
    const GridGranularity& g = buddy.granularity;
    const std::uint64_t smax = s_max(g, profile.delta);

    std::vector<GranuleIndex> valid = proximity_candidates(p, g, profile.delta, profile.semantics);
    if (valid.size() > smax) {
      throw ProtocolError("candidate set exceeds sMax: geometry bound violated");
    }

    std::vector<std::uint64_t> indexes;
    indexes.reserve(smax);
    for (auto i : valid) indexes.push_back(i.value);
    const auto [pad_lo, pad_hi] = padding_range(g, smax);
    std::unordered_set<std::uint64_t> padding;
    while (indexes.size() < smax) {
      const std::uint64_t candidate = pad_lo + rng.uniform(pad_hi - pad_lo);
      if (padding.insert(candidate).second) indexes.push_back(candidate);
    }
    shuffle(indexes, rng);

    const IntervalKey k = derive_interval_key(buddy.key, ui_prev);
    ProxRequestEntry entry{buddy.id, ui_prev, {}};
    entry.elements.reserve(indexes.size());
    for (const std::uint64_t i : indexes) {
      entry.elements.push_back(group.comm_enc(out.pending.k1, group.map_digest(salted_hash(k, i))));
    }
    out.request.entries.push_back(std::move(entry));
    out.pending.buddies.push_back(buddy.id);
    out.pending.candidates.push_back(std::move(valid));
    out.pending.universe.push_back(g.size());
  }
  return out;
}

std::vector<ProximityVerdict> decide_hnh(const ProxResponse& resp,
                                         const PendingHashRequest& pending,
                                         const CommutativeGroup& group) {
  if (resp.entries.size() != pending.buddies.size()) {
    throw ProtocolError("response has " + std::to_string(resp.entries.size()) +
                        " entries, request had " + std::to_string(pending.buddies.size()));
  }
  std::vector<ProximityVerdict> out;
  out.reserve(resp.entries.size());
  for (std::size_t e = 0; e < resp.entries.size(); ++e) {
    const ProxResponseEntry& entry = resp.entries[e];
    if (entry.buddy != pending.buddies[e]) throw ProtocolError("response entry order mismatch");

    ProximityVerdict v;
    v.buddy = entry.buddy;
    v.uncertainty_region.universe = pending.universe[e];
    if (entry.status == EntryStatus::kUnknown) {
      v.uncertainty_region.complement = true;
      out.push_back(std::move(v));
      continue;
    }

    CommutativeCiphertext h2;
    try {
      h2 = group.comm_enc(pending.k1, entry.h);
    } catch (const ParameterError& err) {
      throw ProtocolError(std::string("malformed response element: ") + err.what());
    }
    const bool hit = std::find(entry.elements.begin(), entry.elements.end(), h2) != entry.elements.end();
    v.outcome = hit ? Outcome::kInProximity : Outcome::kNotInProximity;
    v.uncertainty_region.cells = pending.candidates[e];
    v.uncertainty_region.complement = !hit;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace proxguard
