#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "proxguard/digest.hpp"
#include "proxguard/error.hpp"
#include "proxguard/server.hpp"

using namespace proxguard;

namespace {

BuddyGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return BuddyGraph::parse(in);
}

LocationUpdateMsg update(UserId u, IntervalIndex ui, UpdateMode mode, std::uint8_t fill) {
  return LocationUpdateMsg{u, ui, mode, Bytes(mode == UpdateMode::kHash ? kDigestBytes : 36, fill)};
}

std::string error_of(const std::string& text) {
  try {
    parse_graph(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

CommutativeCiphertext element(const CommutativeGroup& g, std::uint8_t v) {
  Digest d{};
  d.bytes[31] = v;
  return g.map_digest(d);
}

}  // namespace

TEST(BuddyGraph, ParsesAndWritesBack) {
  const BuddyGraph g = parse_graph("# comment\n0: 1, 2\n\n1: 0\n2:\n");
  EXPECT_EQ(g.size(), 3U);
  EXPECT_EQ(g.buddies_of(0), (std::set<UserId>{1, 2}));
  EXPECT_TRUE(g.buddies_of(2).empty());
  std::ostringstream out;
  g.write(out);
  EXPECT_EQ(parse_graph(out.str()), g);
}

TEST(BuddyGraph, EdgesNeedNotBeSymmetric) {
  const BuddyGraph g = parse_graph("0: 1\n1: 2\n");
  EXPECT_TRUE(g.buddies_of(0).contains(1));
  EXPECT_FALSE(g.buddies_of(1).contains(0));
}

TEST(BuddyGraph, ErrorsNameTheLine) {
  EXPECT_NE(error_of("0: 1\n1 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("0: 1\n\n3: x\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("0: 1, 0\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("-1: 2\n").find("line 1"), std::string::npos);
  EXPECT_THROW(BuddyGraph::load("/nonexistent/graph.txt"), IoError);
  BuddyGraph g;
  EXPECT_THROW(g.add(4, {4}), ParameterError);
}

TEST(Store, KeepsLatestAndPreviousRejectsStale) {
  EncryptedLocationStore s;
  s.store(update(1, 5, UpdateMode::kHash, 1));
  s.store(update(1, 6, UpdateMode::kHash, 2));
  EXPECT_EQ(s.entries(1), 2U);
  EXPECT_EQ(s.latest(1)->ui, 6U);
  EXPECT_EQ(s.at(1, 5)->payload[0], 1);
  EXPECT_FALSE(s.at(1, 4).has_value());
  EXPECT_THROW(s.store(update(1, 5, UpdateMode::kHash, 3)), StaleUpdateError);
  s.store(update(1, 8, UpdateMode::kHash, 4));
  EXPECT_FALSE(s.at(1, 5).has_value());
  EXPECT_EQ(s.at(1, 6)->payload[0], 2);
  EXPECT_FALSE(s.latest(9).has_value());
}

TEST(Server, SeekAnswersCarryStoredCiphertextsOrUnknown) {
  DeterministicRandom rng(1);
  Server srv(parse_graph("0: 1, 2\n1: 0\n"), CommutativeGroup::sim512(), rng);
  srv.store_update(update(1, 3, UpdateMode::kSeek, 0xaa));
  const SeekResponse r = srv.answer_hns(0);
  ASSERT_EQ(r.entries.size(), 2U);
  EXPECT_EQ(r.entries[0].buddy, 1U);
  EXPECT_EQ(r.entries[0].status, EntryStatus::kOk);
  EXPECT_EQ(r.entries[0].payload, Bytes(36, 0xaa));
  EXPECT_EQ(r.entries[1].buddy, 2U);
  EXPECT_EQ(r.entries[1].status, EntryStatus::kUnknown);
  EXPECT_THROW(srv.answer_hns(7), AuthError);
}

TEST(Server, HashAnswersReencryptUnderOneSessionKey) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  DeterministicRandom rng(2);
  Server srv(parse_graph("0: 1, 2\n"), g, rng);
  Digest stored{};
  stored.bytes.fill(7);
  srv.store_update(LocationUpdateMsg{1, 4, UpdateMode::kHash, Bytes(stored.bytes.begin(), stored.bytes.end())});
  srv.store_update(update(2, 4, UpdateMode::kSeek, 1));  // wrong mode reads as unknown

  // the stored digest itself sits in ES, so one k2 makes it collide with h
  ProxRequest req{0, {{1, 4, {element(g, 1), g.map_digest(stored), element(g, 2)}}, {2, 4, {element(g, 3)}}}};
  const ProxResponse r = srv.answer_hnh(req);
  ASSERT_EQ(r.entries.size(), 2U);
  EXPECT_EQ(r.entries[0].status, EntryStatus::kOk);
  EXPECT_EQ(r.entries[1].status, EntryStatus::kUnknown);
  ASSERT_EQ(r.entries[0].elements.size(), 3U);
  EXPECT_EQ(r.entries[0].elements[1], r.entries[0].h);
  EXPECT_NE(r.entries[0].elements[0], r.entries[0].h);
  EXPECT_NE(r.entries[0].elements[0], element(g, 1));
  EXPECT_NE(r.entries[0].h, g.map_digest(stored));

  // a fresh k2 per request
  const ProxResponse again = srv.answer_hnh(req);
  EXPECT_NE(again.entries[0].h, r.entries[0].h);

  // a stale interval reads as unknown
  ProxRequest old{0, {{1, 3, {element(g, 1)}}}};
  EXPECT_EQ(srv.answer_hnh(old).entries[0].status, EntryStatus::kUnknown);
}

TEST(Server, HashGuardsAuthorisationAndElements) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  DeterministicRandom rng(4);
  Server srv(parse_graph("0: 1\n2: 0\n"), g, rng);
  EXPECT_THROW(srv.answer_hnh(ProxRequest{0, {{2, 1, {element(g, 1)}}}}), AuthError);
  EXPECT_THROW(srv.answer_hnh(ProxRequest{5, {}}), AuthError);
  CommutativeCiphertext bad;
  bad.bytes.assign(g.element_bytes(), 0);
  EXPECT_THROW(srv.answer_hnh(ProxRequest{0, {{1, 1, {bad}}}}), ProtocolError);
}

TEST(Server, SourceNeverTouchesKeyMaterial) {
  for (const char* rel : {"/include/proxguard/server.hpp", "/src/server/server.cpp"}) {
    std::ifstream in(std::string(PROXGUARD_SOURCE_DIR) + rel);
    ASSERT_TRUE(in) << rel;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::smatch m;
    std::string rest = text;
    const std::regex include_re(R"(#include\s+[<"]([^>"]+)[>"])");
    while (std::regex_search(rest, m, include_re)) {
      const std::string header = m[1];
      EXPECT_NE(header, "proxguard/keys.hpp") << rel;
      EXPECT_NE(header, "proxguard/protocol.hpp") << rel;
      rest = m.suffix();
    }
    for (const char* symbol : {"SharedKey", "IntervalKey", "derive_interval_key", "dec("}) {
      EXPECT_EQ(text.find(symbol), std::string::npos) << rel << " mentions " << symbol;
    }
  }
}
