#include "proxguard/server.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "proxguard/digest.hpp"
#include "proxguard/error.hpp"

namespace proxguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

UserId parse_user(std::string_view token, std::size_t line) {
  token = trim(token);
  UserId v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError("buddy graph line " + std::to_string(line) + ": invalid user id '" +
                     std::string(token) + "'");
  }
  return v;
}

}  // namespace

void BuddyGraph::add(UserId user, std::set<UserId> buddies) {
  if (buddies.contains(user)) {
    throw ParameterError("user " + std::to_string(user) + " cannot be their own buddy");
  }
  edges_[user].merge(buddies);
}

const std::set<UserId>& BuddyGraph::buddies_of(UserId user) const {
  const auto it = edges_.find(user);
  if (it == edges_.end()) throw AuthError("unknown user " + std::to_string(user));
  return it->second;
}

std::vector<UserId> BuddyGraph::users() const {
  std::vector<UserId> out;
  out.reserve(edges_.size());
  for (const auto& [user, _] : edges_) out.push_back(user);
  return out;
}

BuddyGraph BuddyGraph::parse(std::istream& in) {
  BuddyGraph graph;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("buddy graph line " + std::to_string(line_no) + ": missing ':'");
    }
    const UserId user = parse_user(line.substr(0, colon), line_no);
    std::set<UserId> buddies;
    std::string_view rest = trim(line.substr(colon + 1));
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      buddies.insert(parse_user(rest.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (buddies.contains(user)) {
      throw ParseError("buddy graph line " + std::to_string(line_no) + ": self edge for user " +
                       std::to_string(user));
    }
    graph.add(user, std::move(buddies));
  }
  return graph;
}

BuddyGraph BuddyGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open buddy graph '" + path + "'");
  return parse(in);
}

void BuddyGraph::write(std::ostream& out) const {
  for (const auto& [user, buddies] : edges_) {
    out << user << ':';
    bool first = true;
    for (const UserId b : buddies) {
      out << (first ? " " : ", ") << b;
      first = false;
    }
    out << '\n';
  }
}

void EncryptedLocationStore::store(const LocationUpdateMsg& msg) {
  std::unique_lock lock(mutex_);
  Slots& s = slots_[msg.user];
  if (s.current && msg.ui < s.current->ui) {
    throw StaleUpdateError("update for interval " + std::to_string(msg.ui) + " from user " +
                           std::to_string(msg.user) + " is older than stored interval " +
                           std::to_string(s.current->ui));
  }
  if (s.current && msg.ui == s.current->ui) {
    s.current = msg;
    return;
  }
  s.previous = std::move(s.current);
  s.current = msg;
}

std::optional<LocationUpdateMsg> EncryptedLocationStore::latest(UserId user) const {
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(user);
  if (it == slots_.end()) return std::nullopt;
  return it->second.current;
}

std::optional<LocationUpdateMsg> EncryptedLocationStore::at(UserId user, IntervalIndex ui) const {
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(user);
  if (it == slots_.end()) return std::nullopt;
  for (const auto* slot : {&it->second.current, &it->second.previous}) {
    if (*slot && (*slot)->ui == ui) return *slot;
  }
  return std::nullopt;
}

std::size_t EncryptedLocationStore::entries(UserId user) const {
  std::shared_lock lock(mutex_);
  const auto it = slots_.find(user);
  if (it == slots_.end()) return 0;
  return (it->second.current ? 1U : 0U) + (it->second.previous ? 1U : 0U);
}

Server::Server(BuddyGraph graph, const CommutativeGroup& group, RandomSource& rng)
    : graph_(std::move(graph)), group_(group), rng_(rng) {}

void Server::store_update(const LocationUpdateMsg& msg) { store_.store(msg); }

SeekResponse Server::answer_hns(UserId requester) const {
  SeekResponse resp;
  for (const UserId buddy : graph_.buddies_of(requester)) {
    SeekResponseEntry entry;
    entry.buddy = buddy;
    if (auto stored = store_.latest(buddy)) {
      entry.ui = stored->ui;
      entry.mode = stored->mode;
      entry.payload = std::move(stored->payload);
    } else {
      entry.status = EntryStatus::kUnknown;
    }
    resp.entries.push_back(std::move(entry));
  }
  return resp;
}

ProxResponse Server::answer_hnh(const ProxRequest& req) {
  const std::set<UserId>& allowed = graph_.buddies_of(req.requester);
  for (const auto& entry : req.entries) {
    if (!allowed.contains(entry.buddy)) {
      throw AuthError("user " + std::to_string(entry.buddy) + " is not a buddy of " +
                      std::to_string(req.requester));
    }
    for (const auto& e : entry.elements) {
      if (!group_.is_element(e.bytes)) {
        throw ProtocolError("request element for buddy " + std::to_string(entry.buddy) +
                            " is not a group element");
      }
    }
  }

  SessionKey k2;
  {
    std::lock_guard lock(rng_mutex_);
    k2 = group_.gen_session_key(rng_);
  }

  ProxResponse resp;
  resp.entries.reserve(req.entries.size());
  for (const auto& entry : req.entries) {
    ProxResponseEntry out;
    out.buddy = entry.buddy;
    const auto stored = store_.at(entry.buddy, entry.ui);
    if (!stored || stored->mode != UpdateMode::kHash || stored->payload.size() != kDigestBytes) {
      out.status = EntryStatus::kUnknown;
      resp.entries.push_back(std::move(out));
      continue;
    }
    out.elements.reserve(entry.elements.size());
    for (const auto& e : entry.elements) out.elements.push_back(group_.comm_enc(k2, e));

    Digest h_b;
    std::copy(stored->payload.begin(), stored->payload.end(), h_b.bytes.begin());
    out.h = group_.comm_enc(k2, group_.map_digest(h_b));
    resp.entries.push_back(std::move(out));
  }
  return resp;
}

}  // namespace proxguard
