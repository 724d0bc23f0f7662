#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "proxguard/commutative.hpp"
#include "proxguard/granularity.hpp"
#include "proxguard/keys.hpp"
#include "proxguard/messages.hpp"
#include "proxguard/random.hpp"

namespace proxguard {

struct PrivacyProfile {
  UserId user = 0;
  GridGranularity granularity;
  double delta = 0.0;
  Semantics semantics = Semantics::kMinDist;
  std::optional<double> max_velocity;  // enables the velocity guard
};

void validate(const PrivacyProfile& profile);

// Fixed-length update intervals; one update per interval at offset t.
struct UpdateSchedule {
  double period = 240.0;
  double offset = 0.0;
};

void validate(const UpdateSchedule& s);
// Earliest update instant strictly after `now`.
double next_update_time(const UpdateSchedule& s, double now);
double update_time(const UpdateSchedule& s, IntervalIndex ui);
IntervalIndex interval_at(const UpdateSchedule& s, double now);
// All update instants in [0, duration).
std::vector<double> emission_times(const UpdateSchedule& s, double duration);

// What a requester knows about one buddy.
struct BuddyInfo {
  UserId id = 0;
  GridGranularity granularity;
  SharedKey key;
};

// Records every interval key a user spends on one of their own location
// updates; a second use of the same key is a protocol violation.
class KeyUsageLedger {
 public:
  // Throws ProtocolError on reuse.
  void record(UserId owner, const IntervalKey& key);
  std::size_t uses() const { return uses_; }
  std::size_t distinct() const { return seen_.size(); }

 private:
  std::set<std::pair<UserId, std::array<std::uint8_t, kKeyBytes>>> seen_;
  std::size_t uses_ = 0;
};

// E_{K^ui}(i) (seek) or H_{K^ui}(i) (hash) for an already-chosen granule.
LocationUpdateMsg build_location_update(const PrivacyProfile& profile, const SharedKey& key,
                                        GranuleIndex reported, IntervalIndex ui, UpdateMode mode,
                                        RandomSource& rng, KeyUsageLedger* ledger = nullptr);
// Same, locating p in the profile's granularity first.
LocationUpdateMsg build_location_update(const PrivacyProfile& profile, const SharedKey& key,
                                        const Point& p, IntervalIndex ui, UpdateMode mode,
                                        RandomSource& rng, KeyUsageLedger* ledger = nullptr);
// Naive baseline update with raw coordinates.
LocationUpdateMsg build_plain_update(UserId user, const Point& p, IntervalIndex ui);
Point plain_location(const LocationUpdateMsg& msg);

// Temporal generalisation of granule crossings against a known top speed.
struct VelocityGuardState {
  struct Window {
    GranuleIndex from;
    GranuleIndex to;
    double start = 0.0;   // last update sent from within `from`
    double length = 0.0;  // tMax(from, to)
  };
  std::optional<GranuleIndex> last_granule;  // physical granule of the last update
  double last_time = 0.0;
  std::optional<Window> window;
  bool last_randomized = false;

  bool active() const { return window.has_value(); }
};

// Called once per location update. While now - start < tMax(g1, g2) the
// report is g1 or g2 with probability 1/2 each; otherwise the true granule.
GranuleIndex velocity_guard(VelocityGuardState& state, const GridGranularity& g, double velocity,
                            GranuleIndex g_now, double now, RandomSource& rng);

// The set of locations an observer cannot tell apart after a verdict.
struct UncertaintyRegion {
  std::vector<GranuleIndex> cells;  // ascending
  bool complement = false;          // true: every valid granule except `cells`
  std::uint64_t universe = 0;       // number of valid granules

  std::uint64_t size() const { return complement ? universe - cells.size() : cells.size(); }
  bool contains(GranuleIndex i) const;
};

enum class Outcome { kInProximity, kNotInProximity, kUnknown };

struct ProximityVerdict {
  UserId buddy = 0;
  Outcome outcome = Outcome::kUnknown;
  std::optional<GranuleIndex> disclosed_granule;  // C-Hide&Seek only
  UncertaintyRegion uncertainty_region;

  bool in_proximity() const { return outcome == Outcome::kInProximity; }
};

// Location-free request; the body is the requester id alone.
SeekRequest build_prox_request_hns(UserId requester);

// Decrypts the buddy's stored granule and applies the requester's semantics.
// Unknown entries yield Outcome::kUnknown; authentication failures raise
// ProtocolError.
ProximityVerdict decide_hns(const SeekResponseEntry& entry, const BuddyInfo& buddy,
                            const PrivacyProfile& requester, const Point& p);
// Naive baseline over a plaintext entry.
ProximityVerdict decide_plain(const SeekResponseEntry& entry, const PrivacyProfile& requester,
                              const Point& p);

// Client state kept between step (i) and step (iii).
struct PendingHashRequest {
  SessionKey k1;
  std::vector<UserId> buddies;                        // request entry order
  std::vector<std::vector<GranuleIndex>> candidates;  // S' per entry
  std::vector<std::uint64_t> universe;                // |G_B| per entry
};

struct HashRequestBuild {
  ProxRequest request;
  PendingHashRequest pending;
};

// Step (i): per buddy, S' padded to sMax with non-valid indexes, hashed under
// the buddy's K^{ui_prev}, then encrypted under a fresh K1. Entry and element
// order are shuffled.
HashRequestBuild build_prox_request_hnh(const PrivacyProfile& profile, const Point& p,
                                        const std::vector<BuddyInfo>& buddies,
                                        IntervalIndex ui_prev, const CommutativeGroup& group,
                                        RandomSource& rng);

// Step (iii): h'' = C_K1(h'); B is in proximity iff h'' is in ES'.
std::vector<ProximityVerdict> decide_hnh(const ProxResponse& resp,
                                         const PendingHashRequest& pending,
                                         const CommutativeGroup& group);

// Padding indexes live in [N, N + max(N, sMax)) for N valid granules.
std::pair<std::uint64_t, std::uint64_t> padding_range(const GridGranularity& g, std::uint64_t smax);

}  // namespace proxguard
