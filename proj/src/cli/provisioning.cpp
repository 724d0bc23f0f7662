#include <charconv>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>

#include "proxguard/cli.hpp"
#include "proxguard/error.hpp"
#include "proxguard/random.hpp"
#include "proxguard/server.hpp"

namespace proxguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyFile parse_key_file(std::istream& in) {
  KeyFile keys;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = "key file line " + std::to_string(line_no) + ": ";
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(where + "expected 'user_id:hex_key'");
    const std::string_view id_text = trim(line.substr(0, colon));
    UserId user = 0;
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), user);
    if (id_text.empty() || ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
      throw ParseError(where + "invalid user id '" + std::string(id_text) + "'");
    }
    SharedKey key;
    try {
      key = shared_key_from_hex(trim(line.substr(colon + 1)));
    } catch (const Error& e) {
      throw ParseError(where + e.what());
    }
    if (!keys.emplace(user, key).second) throw ParseError(where + "duplicate user " + std::to_string(user));
  }
  return keys;
}

KeyFile load_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open key file '" + path + "'");
  return parse_key_file(in);
}

void write_key_file(std::ostream& out, const KeyFile& keys) {
  for (const auto& [user, key] : keys) out << user << ':' << to_hex(key.bytes) << '\n';
}

KeyFile cmd_keygen(std::uint32_t users, const std::optional<std::string>& graph_path,
                   const std::optional<std::uint64_t>& seed) {
  if (users == 0) throw UsageError("keygen needs at least one user");
  if (graph_path) {
    const BuddyGraph graph = BuddyGraph::load(*graph_path);
    for (const UserId u : graph.users()) {
      if (u >= users) throw ValidationError("buddy graph mentions user " + std::to_string(u) + " beyond --users");
      for (const UserId b : graph.buddies_of(u)) {
        if (b >= users) throw ValidationError("buddy graph mentions user " + std::to_string(b) + " beyond --users");
      }
    }
  }
  std::unique_ptr<RandomSource> rng;
  if (seed) rng = std::make_unique<DeterministicRandom>(*seed, "keygen");
  else rng = std::make_unique<SystemRandom>();
  KeyFile keys;
  for (UserId u = 0; u < users; ++u) keys[u] = gen_shared_key(*rng);
  return keys;
}

}  // namespace proxguard
