#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxguard/digest.hpp"
#include "proxguard/granularity.hpp"
#include "proxguard/random.hpp"

namespace proxguard {

inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kTagBytes = 16;
inline constexpr std::size_t kIndexBytes = 8;
// nonce || AES-256-GCM(be64 index) || tag
inline constexpr std::size_t kSealedIndexBytes = kNonceBytes + kIndexBytes + kTagBytes;

using IntervalIndex = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;

// Key a user shares with all of their buddies. Provisioned out of band.
struct SharedKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};
  friend bool operator==(const SharedKey&, const SharedKey&) = default;
};

// Single-use key for one update interval, derived from a SharedKey.
struct IntervalKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};
  friend bool operator==(const IntervalKey&, const IntervalKey&) = default;
};

SharedKey gen_shared_key(RandomSource& rng);

// HMAC-SHA256(k, "interval" || be64(ui)).
IntervalKey derive_interval_key(const SharedKey& k, IntervalIndex ui);

// AES-256-GCM over the fixed-width index encoding; output is always
// kSealedIndexBytes long.
Bytes enc(const IntervalKey& k, GranuleIndex i, RandomSource& rng);
// Throws AuthenticationError on tag mismatch or malformed ciphertext.
GranuleIndex dec(const IntervalKey& k, std::span<const std::uint8_t> sealed);

// HMAC-SHA256(k, be64(i)).
Digest salted_hash(const IntervalKey& k, std::uint64_t i);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);
SharedKey shared_key_from_hex(std::string_view hex);

}  // namespace proxguard
