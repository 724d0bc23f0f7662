#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "proxguard/commutative.hpp"
#include "proxguard/messages.hpp"
#include "proxguard/random.hpp"

namespace proxguard {

// user -> buddies whose locations the user may query. Irreflexive; need not
// be symmetric.
class BuddyGraph {
 public:
  BuddyGraph() = default;

  // Throws ParameterError on a self edge.
  void add(UserId user, std::set<UserId> buddies);
  bool has_user(UserId user) const { return edges_.contains(user); }
  const std::set<UserId>& buddies_of(UserId user) const;
  std::vector<UserId> users() const;
  std::size_t size() const { return edges_.size(); }

  // "user_id: buddy_id, buddy_id, ..." per line; '#' starts a comment.
  // Throws ParseError naming the offending line.
  static BuddyGraph parse(std::istream& in);
  static BuddyGraph load(const std::string& path);
  void write(std::ostream& out) const;

  friend bool operator==(const BuddyGraph&, const BuddyGraph&) = default;

 private:
  std::map<UserId, std::set<UserId>> edges_;
};

// Latest and previous encrypted update of each user. Holds ciphertexts and
// digests only.
class EncryptedLocationStore {
 public:
  // Throws StaleUpdateError if msg.ui is older than the stored latest.
  void store(const LocationUpdateMsg& msg);
  std::optional<LocationUpdateMsg> latest(UserId user) const;
  std::optional<LocationUpdateMsg> at(UserId user, IntervalIndex ui) const;
  std::size_t entries(UserId user) const;

 private:
  struct Slots {
    std::optional<LocationUpdateMsg> current;
    std::optional<LocationUpdateMsg> previous;
  };
  mutable std::shared_mutex mutex_;
  std::map<UserId, Slots> slots_;
};

// The untrusted service provider. Sees only LocationUpdateMsg payloads and
// commutative ciphertexts; it never holds a shared or interval key.
class Server {
 public:
  Server(BuddyGraph graph, const CommutativeGroup& group, RandomSource& rng);

  void store_update(const LocationUpdateMsg& msg);

  // Last known encrypted location of each buddy; absent buddies come back as
  // EntryStatus::kUnknown. Throws AuthError for an unknown requester.
  SeekResponse answer_hns(UserId requester) const;

  // Step (ii): re-encrypts every ES under a fresh K2 and returns C_K2(h_B)
  // for the stored digest at the requested ui. Throws AuthError for unknown
  // requesters or non-buddy entries and ProtocolError for malformed elements.
  ProxResponse answer_hnh(const ProxRequest& req);

  const BuddyGraph& graph() const { return graph_; }
  const EncryptedLocationStore& store() const { return store_; }
  const CommutativeGroup& group() const { return group_; }

 private:
  BuddyGraph graph_;
  const CommutativeGroup& group_;
  RandomSource& rng_;
  std::mutex rng_mutex_;
  EncryptedLocationStore store_;
};

}  // namespace proxguard
