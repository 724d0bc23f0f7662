#include <limits>
#include <string>

#include "proxguard/error.hpp"
#include "proxguard/transport.hpp"

namespace proxguard {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }

  void bytes(std::span<const std::uint8_t> b) {
    u16(checked_u16(b.size(), "byte string"));
    out_.insert(out_.end(), b.begin(), b.end());
  }

  void set(const std::vector<CommutativeCiphertext>& elements) {
    u16(checked_u16(elements.size(), "element set"));
    for (const auto& e : elements) bytes(e.bytes);
  }

  void count(std::size_t n) { u16(checked_u16(n, "entry list")); }

  Bytes finish(MessageType type) {
    Bytes frame;
    frame.reserve(out_.size() + kFrameHeaderBytes);
    const auto length = static_cast<std::uint32_t>(out_.size() + 1);
    for (int i = 3; i >= 0; --i) frame.push_back(static_cast<std::uint8_t>(length >> (8 * i)));
    frame.push_back(static_cast<std::uint8_t>(type));
    frame.insert(frame.end(), out_.begin(), out_.end());
    return frame;
  }

 private:
  static std::uint16_t checked_u16(std::size_t n, const char* what) {
    if (n > std::numeric_limits<std::uint16_t>::max()) {
      throw ParameterError(std::string(what) + " too long for the wire schema");
    }
    return static_cast<std::uint16_t>(n);
  }

  void put(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }

  Bytes bytes() {
    const std::size_t n = u16();
    need(n);
    Bytes out(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  std::vector<CommutativeCiphertext> set() {
    const std::size_t n = u16();
    std::vector<CommutativeCiphertext> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({bytes()});
    return out;
  }

  void expect_end() const {
    if (pos_ != in_.size()) throw DecodeError("trailing bytes after frame body");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DecodeError("truncated frame body");
  }

  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += width;
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

UpdateMode read_mode(Reader& r) {
  const std::uint8_t m = r.u8();
  if (m > static_cast<std::uint8_t>(UpdateMode::kPlain)) {
    throw DecodeError("unknown update mode " + std::to_string(m));
  }
  return static_cast<UpdateMode>(m);
}

EntryStatus read_status(Reader& r) {
  const std::uint8_t s = r.u8();
  if (s > static_cast<std::uint8_t>(EntryStatus::kUnknown)) {
    throw DecodeError("unknown entry status " + std::to_string(s));
  }
  return static_cast<EntryStatus>(s);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::kLocationUpdate: return "location-update";
    case MessageType::kProxRequestSeek: return "prox-request-seek";
    case MessageType::kProxRequestHash: return "prox-request-hash";
    case MessageType::kProxResponseSeek: return "prox-response-seek";
    case MessageType::kProxResponseHash: return "prox-response-hash";
    case MessageType::kAck: return "ack";
    case MessageType::kError: return "error";
    case MessageType::kBaselineRelay: return "baseline-relay";
  }
  return "unknown";
}

MessageType type_of(const Frame& f) {
  return std::visit(Overloaded{
                        [](const LocationUpdateMsg&) { return MessageType::kLocationUpdate; },
                        [](const SeekRequest&) { return MessageType::kProxRequestSeek; },
                        [](const ProxRequest&) { return MessageType::kProxRequestHash; },
                        [](const SeekResponse&) { return MessageType::kProxResponseSeek; },
                        [](const ProxResponse&) { return MessageType::kProxResponseHash; },
                        [](const Ack&) { return MessageType::kAck; },
                        [](const ErrorMsg&) { return MessageType::kError; },
                        [](const RelayMsg&) { return MessageType::kBaselineRelay; },
                    },
                    f);
}

Bytes encode(const Frame& f) {
  Writer w;
  std::visit(Overloaded{
                 [&w](const LocationUpdateMsg& m) {
                   w.u32(m.user);
                   w.u64(m.ui);
                   w.u8(static_cast<std::uint8_t>(m.mode));
                   w.bytes(m.payload);
                 },
                 [&w](const SeekRequest& m) { w.u32(m.requester); },
                 [&w](const ProxRequest& m) {
                   w.u32(m.requester);
                   w.count(m.entries.size());
                   for (const auto& e : m.entries) {
                     w.u32(e.buddy);
                     w.u64(e.ui);
                     w.set(e.elements);
                   }
                 },
                 [&w](const SeekResponse& m) {
                   w.count(m.entries.size());
                   for (const auto& e : m.entries) {
                     w.u32(e.buddy);
                     w.u8(static_cast<std::uint8_t>(e.status));
                     w.u64(e.ui);
                     w.u8(static_cast<std::uint8_t>(e.mode));
                     w.bytes(e.payload);
                   }
                 },
                 [&w](const ProxResponse& m) {
                   w.count(m.entries.size());
                   for (const auto& e : m.entries) {
                     w.u32(e.buddy);
                     w.u8(static_cast<std::uint8_t>(e.status));
                     w.set(e.elements);
                     w.bytes(e.h.bytes);
                   }
                 },
                 [&w](const Ack& m) { w.u8(m.status); },
                 [&w](const ErrorMsg& m) {
                   w.u8(m.code);
                   w.bytes({reinterpret_cast<const std::uint8_t*>(m.reason.data()), m.reason.size()});
                 },
                 [&w](const RelayMsg& m) {
                   w.u32(m.from);
                   w.u32(m.to);
                   w.u8(m.kind);
                   w.i32(m.col);
                   w.i32(m.row);
                 },
             },
             f);
  return w.finish(type_of(f));
}

std::uint32_t frame_length_prefix(std::span<const std::uint8_t> header) {
  if (header.size() < 4) throw DecodeError("truncated length prefix");
  return (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
         (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
}

Frame decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) throw DecodeError("frame shorter than its header");
  const std::uint32_t length = frame_length_prefix(bytes);
  if (std::size_t{length} + 4 != bytes.size()) {
    throw DecodeError("length prefix " + std::to_string(length) + " does not match frame of " +
                      std::to_string(bytes.size()) + " bytes");
  }
  Reader r(bytes.subspan(kFrameHeaderBytes));
  Frame out;
  switch (static_cast<MessageType>(bytes[4])) {
    case MessageType::kLocationUpdate: {
      LocationUpdateMsg m;
      m.user = r.u32();
      m.ui = r.u64();
      m.mode = read_mode(r);
      m.payload = r.bytes();
      out = std::move(m);
      break;
    }
    case MessageType::kProxRequestSeek: out = SeekRequest{r.u32()}; break;
    case MessageType::kProxRequestHash: {
      ProxRequest m;
      m.requester = r.u32();
      const std::size_t n = r.u16();
      m.entries.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        ProxRequestEntry e;
        e.buddy = r.u32();
        e.ui = r.u64();
        e.elements = r.set();
        m.entries.push_back(std::move(e));
      }
      out = std::move(m);
      break;
    }
    case MessageType::kProxResponseSeek: {
      SeekResponse m;
      const std::size_t n = r.u16();
      m.entries.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        SeekResponseEntry e;
        e.buddy = r.u32();
        e.status = read_status(r);
        e.ui = r.u64();
        e.mode = read_mode(r);
        e.payload = r.bytes();
        m.entries.push_back(std::move(e));
      }
      out = std::move(m);
      break;
    }
    case MessageType::kProxResponseHash: {
      ProxResponse m;
      const std::size_t n = r.u16();
      m.entries.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        ProxResponseEntry e;
        e.buddy = r.u32();
        e.status = read_status(r);
        e.elements = r.set();
        e.h.bytes = r.bytes();
        m.entries.push_back(std::move(e));
      }
      out = std::move(m);
      break;
    }
    case MessageType::kAck: out = Ack{r.u8()}; break;
    case MessageType::kError: {
      ErrorMsg m;
      m.code = r.u8();
      const Bytes reason = r.bytes();
      m.reason.assign(reason.begin(), reason.end());
      out = std::move(m);
      break;
    }
    case MessageType::kBaselineRelay: {
      RelayMsg m;
      m.from = r.u32();
      m.to = r.u32();
      m.kind = r.u8();
      if (m.kind > RelayMsg::kReply) throw DecodeError("unknown relay kind");
      m.col = r.i32();
      m.row = r.i32();
      out = m;
      break;
    }
    default: throw DecodeError("unknown message type " + std::to_string(bytes[4]));
  }
  r.expect_end();
  return out;
}

}  // namespace proxguard
