#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "proxguard/messages.hpp"

namespace proxguard {

class Server;
class DeliveryLog;

// Wire schema (all integers big-endian):
//   frame   := u32 length | u8 type | body        (length = |body| + 1)
//   bytes   := u16 n | n octets
//   set     := u16 count | count * bytes
//   0x01 location-update      u32 user | u64 ui | u8 mode | bytes payload
//   0x02 prox-request-seek    u32 requester
//   0x03 prox-request-hash    u32 requester | u16 count |
//                             count * (u32 buddy | u64 ui | set ES)
//   0x04 prox-response-seek   u16 count |
//                             count * (u32 buddy | u8 status | u64 ui | u8 mode | bytes payload)
//   0x05 prox-response-hash   u16 count |
//                             count * (u32 buddy | u8 status | set ES' | bytes h')
//   0x06 ack                  u8 status
//   0x07 error                u8 code | bytes utf8 reason
//   0x08 baseline-relay       u32 from | u32 to | u8 kind | i32 col | i32 row
enum class MessageType : std::uint8_t {
  kLocationUpdate = 0x01,
  kProxRequestSeek = 0x02,
  kProxRequestHash = 0x03,
  kProxResponseSeek = 0x04,
  kProxResponseHash = 0x05,
  kAck = 0x06,
  kError = 0x07,
  kBaselineRelay = 0x08,
};

std::string_view to_string(MessageType t);

using Frame = std::variant<LocationUpdateMsg, SeekRequest, ProxRequest, SeekResponse,
                           ProxResponse, Ack, ErrorMsg, RelayMsg>;

MessageType type_of(const Frame& f);

inline constexpr std::size_t kFrameHeaderBytes = 5;

Bytes encode(const Frame& f);
// Throws DecodeError on truncation, trailing bytes, length mismatch or an
// unknown type.
Frame decode(std::span<const std::uint8_t> bytes);

// Reads the u32 length prefix; total frame size is prefix + 4.
std::uint32_t frame_length_prefix(std::span<const std::uint8_t> header);

// Per user and per message family: count and total bytes.
class CostLedger {
 public:
  struct Tally {
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    friend bool operator==(const Tally&, const Tally&) = default;
  };

  void record(UserId user, MessageType type, std::uint64_t bytes);
  Tally total(MessageType type) const;
  Tally total() const;
  Tally of(UserId user, MessageType type) const;
  std::map<std::pair<UserId, MessageType>, Tally> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<UserId, MessageType>, Tally> tallies_;
};

struct DeliveredFrame {
  double time = 0.0;
  Bytes bytes;
};

// One side of an in-process FIFO link with fixed latency.
class SimulatedEndpoint {
 public:
  // Enqueues for the peer; arrival at now + latency.
  void send(Bytes frame, double now);
  // Front frame if it has arrived by `now`; logged to the ledger on delivery.
  std::optional<DeliveredFrame> receive(double now);
  std::optional<double> next_arrival() const;
  std::size_t pending() const;
  // Every delivery on this link (both directions) is also appended to `log`.
  void set_delivery_log(DeliveryLog* log);

  struct Link;

 private:
  friend struct SimulatedChannel;
  std::shared_ptr<Link> link_;
  int side_ = 0;
};

struct FrameRecord {
  UserId user;
  MessageType type;
  std::size_t bytes;
};

struct SimulatedChannel {
  // Frames on this link are attributed to `user` in the ledger.
  static std::pair<std::shared_ptr<SimulatedEndpoint>, std::shared_ptr<SimulatedEndpoint>> make(
      double latency, CostLedger* ledger, UserId user);
};

// Shared log of every frame any simulated link delivered, for independent
// recounts of the ledger.
class DeliveryLog {
 public:
  void append(UserId user, MessageType type, std::size_t bytes);
  std::vector<FrameRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::vector<FrameRecord> records_;
};

// Decodes a client frame, runs it against the server and encodes the reply.
// Failures become error frames carrying the error kind.
Bytes handle_frame(Server& server, std::span<const std::uint8_t> request);

}  // namespace proxguard
