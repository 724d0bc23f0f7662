#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "proxguard/commutative.hpp"
#include "proxguard/digest.hpp"
#include "proxguard/error.hpp"
#include "proxguard/keys.hpp"
#include "proxguard/random.hpp"

using namespace proxguard;

namespace {

SharedKey fixed_key(std::uint8_t fill) {
  SharedKey k;
  k.bytes.fill(fill);
  return k;
}

Digest digest_of(std::uint64_t v) {
  Digest d{};
  for (int i = 0; i < 8; ++i) d.bytes[31 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return d;
}

}  // namespace

TEST(Random, DeterministicStreamsRepeatAndSeparate) {
  DeterministicRandom a(7, "x"), b(7, "x"), c(7, "y"), d(8, "x");
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
    EXPECT_NE(va, d.next_u64());
  }
}

TEST(Random, UniformIsUnbiasedOverSmallRanges) {
  DeterministicRandom rng(1);
  constexpr int kBins = 6, kDraws = 60000;
  int counts[kBins] = {};
  for (int i = 0; i < kDraws; ++i) ++counts[rng.uniform(kBins)];
  double chi2 = 0.0;
  const double expect = static_cast<double>(kDraws) / kBins;
  for (const int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 20.5);  // 5 dof, p ~ 0.001
  EXPECT_THROW(rng.uniform(0), ParameterError);
}

TEST(Random, UnitIntervalStaysHalfOpen) {
  DeterministicRandom rng(2);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Random, SystemRandomProducesDistinctKeys) {
  SystemRandom rng;
  EXPECT_NE(gen_shared_key(rng), gen_shared_key(rng));
}

TEST(Keys, IntervalKeysDifferPerIntervalAndUser) {
  const SharedKey a = fixed_key(1), b = fixed_key(2);
  std::set<std::array<std::uint8_t, kKeyBytes>> seen;
  for (IntervalIndex ui = 0; ui < 500; ++ui) {
    EXPECT_TRUE(seen.insert(derive_interval_key(a, ui).bytes).second);
    EXPECT_TRUE(seen.insert(derive_interval_key(b, ui).bytes).second);
  }
  EXPECT_EQ(derive_interval_key(a, 42), derive_interval_key(a, 42));
}

TEST(Keys, SealedIndexRoundTrips) {
  DeterministicRandom rng(3);
  const IntervalKey k = derive_interval_key(fixed_key(9), 17);
  for (const std::uint64_t i : {0ULL, 1ULL, 255ULL, 1ULL << 40, ~0ULL}) {
    const Bytes sealed = enc(k, GranuleIndex{i}, rng);
    EXPECT_EQ(sealed.size(), kSealedIndexBytes);
    EXPECT_EQ(dec(k, sealed), GranuleIndex{i});
  }
}

TEST(Keys, EqualPlaintextsSealDifferently) {
  DeterministicRandom rng(4);
  const IntervalKey k = derive_interval_key(fixed_key(9), 1);
  EXPECT_NE(enc(k, GranuleIndex{5}, rng), enc(k, GranuleIndex{5}, rng));
}

TEST(Keys, TamperingAndWrongKeysFailAuthentication) {
  DeterministicRandom rng(5);
  const IntervalKey k = derive_interval_key(fixed_key(9), 1);
  const Bytes sealed = enc(k, GranuleIndex{77}, rng);
  for (std::size_t pos = 0; pos < sealed.size(); ++pos) {
    Bytes bad = sealed;
    bad[pos] ^= 0x01;
    EXPECT_THROW(dec(k, bad), AuthenticationError) << "byte " << pos;
  }
  EXPECT_THROW(dec(derive_interval_key(fixed_key(9), 2), sealed), AuthenticationError);
  EXPECT_THROW(dec(k, Bytes(sealed.begin(), sealed.end() - 1)), AuthenticationError);
}

TEST(Keys, SaltedHashIsKeyedAndDeterministic) {
  const IntervalKey k1 = derive_interval_key(fixed_key(1), 3);
  const IntervalKey k2 = derive_interval_key(fixed_key(1), 4);
  EXPECT_EQ(salted_hash(k1, 10), salted_hash(k1, 10));
  EXPECT_NE(salted_hash(k1, 10), salted_hash(k1, 11));
  EXPECT_NE(salted_hash(k1, 10), salted_hash(k2, 10));
}

TEST(Keys, HexRoundTripAndErrors) {
  const SharedKey k = fixed_key(0xab);
  EXPECT_EQ(shared_key_from_hex(to_hex(k.bytes)), k);
  EXPECT_EQ(to_hex(Bytes{0x00, 0x0f, 0xa0}), "000fa0");
  EXPECT_THROW(shared_key_from_hex("abcd"), ParseError);
  EXPECT_THROW(shared_key_from_hex(std::string(64, 'g')), ParseError);
}

TEST(Commutative, CommutesOnRandomTriples) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  DeterministicRandom rng(6);
  for (int t = 0; t < 1000; ++t) {
    const SessionKey k1 = g.gen_session_key(rng), k2 = g.gen_session_key(rng);
    const CommutativeCiphertext x = g.map_digest(digest_of(rng.next_u64()));
    EXPECT_EQ(g.comm_enc(k1, g.comm_enc(k2, x)), g.comm_enc(k2, g.comm_enc(k1, x)));
  }
}

TEST(Commutative, CommutesInTheDefaultGroup) {
  const CommutativeGroup& g = CommutativeGroup::modp2048();
  EXPECT_EQ(g.bits(), 2048U);
  EXPECT_EQ(g.element_bytes(), 256U);
  DeterministicRandom rng(7);
  for (int t = 0; t < 10; ++t) {
    const SessionKey k1 = g.gen_session_key(rng), k2 = g.gen_session_key(rng);
    const CommutativeCiphertext x = g.map_digest(digest_of(rng.next_u64()));
    EXPECT_EQ(g.comm_enc(k1, g.comm_enc(k2, x)), g.comm_enc(k2, g.comm_enc(k1, x)));
  }
}

TEST(Commutative, EncryptionIsInjectiveOnSmallSets) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  DeterministicRandom rng(8);
  const SessionKey k = g.gen_session_key(rng);
  std::set<CommutativeCiphertext> seen;
  for (std::uint64_t v = 0; v < 300; ++v) {
    EXPECT_TRUE(seen.insert(g.comm_enc(k, g.map_digest(digest_of(v)))).second);
  }
}

TEST(Commutative, ElementsStayInRange) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  DeterministicRandom rng(9);
  for (int t = 0; t < 200; ++t) {
    const auto x = g.map_digest(digest_of(rng.next_u64()));
    EXPECT_TRUE(g.is_element(x.bytes));
    EXPECT_EQ(x.bytes.size(), g.element_bytes());
    EXPECT_TRUE(g.is_valid_session_key(g.gen_session_key(rng)));
  }
  EXPECT_FALSE(g.is_element(std::vector<std::uint8_t>(g.element_bytes(), 0)));
  EXPECT_FALSE(g.is_element(std::vector<std::uint8_t>(g.element_bytes(), 0xff)));
  EXPECT_FALSE(g.is_element(std::vector<std::uint8_t>(3, 7)));
  EXPECT_THROW(g.element(std::vector<std::uint8_t>(3, 7)), ParameterError);
}

TEST(Commutative, EvenExponentsAreRejected) {
  const CommutativeGroup& g = CommutativeGroup::sim512();
  EXPECT_THROW(g.session_key(2), ParameterError);  // p - 1 is even
  EXPECT_NO_THROW(g.session_key(65537));
}

TEST(Commutative, UnknownGroupName) {
  EXPECT_EQ(&CommutativeGroup::by_name("sim512"), &CommutativeGroup::sim512());
  EXPECT_THROW(CommutativeGroup::by_name("p256"), ParameterError);
}
