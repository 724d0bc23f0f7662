#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proxguard/commutative.hpp"

namespace proxguard {

using UserId = std::uint32_t;
using IntervalIndex = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;

// How a location update payload was produced.
enum class UpdateMode : std::uint8_t {
  kSeek = 0,   // E_{K^ui}(i), sealed granule index
  kHash = 1,   // H_{K^ui}(i), salted digest
  kPlain = 2,  // naive baseline: raw coordinates
};

// <user, ui, payload>. Seek and hash payloads carry no plaintext coordinate or
// index.
struct LocationUpdateMsg {
  UserId user = 0;
  IntervalIndex ui = 0;
  UpdateMode mode = UpdateMode::kSeek;
  Bytes payload;

  friend bool operator==(const LocationUpdateMsg&, const LocationUpdateMsg&) = default;
};

// C-Hide&Seek proximity request. Deliberately carries nothing but the id.
struct SeekRequest {
  UserId requester = 0;
  friend bool operator==(const SeekRequest&, const SeekRequest&) = default;
};

struct ProxRequestEntry {
  UserId buddy = 0;
  IntervalIndex ui = 0;
  std::vector<CommutativeCiphertext> elements;  // ES, |ES| = sMax(G_B, delta_A)
  friend bool operator==(const ProxRequestEntry&, const ProxRequestEntry&) = default;
};

struct ProxRequest {
  UserId requester = 0;
  std::vector<ProxRequestEntry> entries;
  friend bool operator==(const ProxRequest&, const ProxRequest&) = default;
};

enum class EntryStatus : std::uint8_t { kOk = 0, kUnknown = 1 };

struct SeekResponseEntry {
  UserId buddy = 0;
  EntryStatus status = EntryStatus::kOk;
  IntervalIndex ui = 0;
  UpdateMode mode = UpdateMode::kSeek;
  Bytes payload;
  friend bool operator==(const SeekResponseEntry&, const SeekResponseEntry&) = default;
};

struct SeekResponse {
  std::vector<SeekResponseEntry> entries;
  friend bool operator==(const SeekResponse&, const SeekResponse&) = default;
};

struct ProxResponseEntry {
  UserId buddy = 0;
  EntryStatus status = EntryStatus::kOk;
  std::vector<CommutativeCiphertext> elements;  // ES' = C_K2(ES)
  CommutativeCiphertext h;                       // C_K2(h_B)
  friend bool operator==(const ProxResponseEntry&, const ProxResponseEntry&) = default;
};

struct ProxResponse {
  std::vector<ProxResponseEntry> entries;
  friend bool operator==(const ProxResponse&, const ProxResponse&) = default;
};

struct Ack {
  std::uint8_t status = 0;
  friend bool operator==(const Ack&, const Ack&) = default;
};

struct ErrorMsg {
  std::uint8_t code = 0;
  std::string reason;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

// Grid-adjacency baseline: query/reply relayed by the SP between two buddies.
struct RelayMsg {
  enum Kind : std::uint8_t { kQuery = 0, kReply = 1 };
  UserId from = 0;
  UserId to = 0;
  std::uint8_t kind = kQuery;
  std::int32_t col = 0;
  std::int32_t row = 0;
  friend bool operator==(const RelayMsg&, const RelayMsg&) = default;
};

}  // namespace proxguard
