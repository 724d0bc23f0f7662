#include <deque>

#include "proxguard/error.hpp"
#include "proxguard/server.hpp"
#include "proxguard/transport.hpp"

namespace proxguard {

void CostLedger::record(UserId user, MessageType type, std::uint64_t bytes) {
  std::lock_guard lock(mutex_);
  Tally& t = tallies_[{user, type}];
  ++t.messages;
  t.bytes += bytes;
}

CostLedger::Tally CostLedger::total(MessageType type) const {
  std::lock_guard lock(mutex_);
  Tally out;
  for (const auto& [key, t] : tallies_) {
    if (key.second != type) continue;
    out.messages += t.messages;
    out.bytes += t.bytes;
  }
  return out;
}

CostLedger::Tally CostLedger::total() const {
  std::lock_guard lock(mutex_);
  Tally out;
  for (const auto& [key, t] : tallies_) {
    out.messages += t.messages;
    out.bytes += t.bytes;
  }
  return out;
}

CostLedger::Tally CostLedger::of(UserId user, MessageType type) const {
  std::lock_guard lock(mutex_);
  const auto it = tallies_.find({user, type});
  return it == tallies_.end() ? Tally{} : it->second;
}

std::map<std::pair<UserId, MessageType>, CostLedger::Tally> CostLedger::snapshot() const {
  std::lock_guard lock(mutex_);
  return tallies_;
}

void DeliveryLog::append(UserId user, MessageType type, std::size_t bytes) {
  std::lock_guard lock(mutex_);
  records_.push_back({user, type, bytes});
}

std::vector<FrameRecord> DeliveryLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

struct SimulatedEndpoint::Link {
  double latency = 0.0;
  CostLedger* ledger = nullptr;
  DeliveryLog* log = nullptr;
  UserId user = 0;
  std::deque<DeliveredFrame> inbox[2];
};

void SimulatedEndpoint::send(Bytes frame, double now) {
  if (frame.size() < kFrameHeaderBytes) throw ParameterError("cannot send a partial frame");
  auto& queue = link_->inbox[1 - side_];
  const double arrival = now + link_->latency;
  // FIFO even if a caller's clock goes backwards.
  const double at = queue.empty() ? arrival : std::max(arrival, queue.back().time);
  queue.push_back({at, std::move(frame)});
}

std::optional<DeliveredFrame> SimulatedEndpoint::receive(double now) {
  auto& queue = link_->inbox[side_];
  if (queue.empty() || queue.front().time > now) return std::nullopt;
  DeliveredFrame f = std::move(queue.front());
  queue.pop_front();
  const auto type = static_cast<MessageType>(f.bytes[4]);
  if (link_->ledger != nullptr) link_->ledger->record(link_->user, type, f.bytes.size());
  if (link_->log != nullptr) link_->log->append(link_->user, type, f.bytes.size());
  return f;
}

std::optional<double> SimulatedEndpoint::next_arrival() const {
  const auto& queue = link_->inbox[side_];
  if (queue.empty()) return std::nullopt;
  return queue.front().time;
}

std::size_t SimulatedEndpoint::pending() const { return link_->inbox[side_].size(); }

void SimulatedEndpoint::set_delivery_log(DeliveryLog* log) { link_->log = log; }

std::pair<std::shared_ptr<SimulatedEndpoint>, std::shared_ptr<SimulatedEndpoint>>
SimulatedChannel::make(double latency, CostLedger* ledger, UserId user) {
  if (!(latency >= 0.0)) throw ParameterError("latency must be non-negative");
  auto link = std::make_shared<SimulatedEndpoint::Link>();
  link->latency = latency;
  link->ledger = ledger;
  link->user = user;
  auto a = std::make_shared<SimulatedEndpoint>();
  auto b = std::make_shared<SimulatedEndpoint>();
  a->link_ = link;
  a->side_ = 0;
  b->link_ = link;
  b->side_ = 1;
  return {a, b};
}

namespace {

std::uint8_t error_code(const std::string& kind) {
  if (kind == "decode") return 1;
  if (kind == "auth") return 2;
  if (kind == "stale-update") return 3;
  if (kind == "protocol") return 4;
  return 5;
}

Bytes error_frame(std::uint8_t code, std::string reason) {
  return encode(Frame{ErrorMsg{code, std::move(reason)}});
}

}  // namespace

Bytes handle_frame(Server& server, std::span<const std::uint8_t> request) {
  try {
    Frame in = decode(request);
    if (auto* m = std::get_if<LocationUpdateMsg>(&in)) {
      server.store_update(*m);
      return encode(Frame{Ack{0}});
    }
    if (auto* m = std::get_if<SeekRequest>(&in)) return encode(Frame{server.answer_hns(m->requester)});
    if (auto* m = std::get_if<ProxRequest>(&in)) return encode(Frame{server.answer_hnh(*m)});
    return error_frame(4, "protocol: unexpected " + std::string(to_string(type_of(in))) +
                              " frame from a client");
  } catch (const Error& e) {
    return error_frame(error_code(e.kind()), e.kind() + ": " + e.what());
  }
}

}  // namespace proxguard
