#pragma once

#include <array>
#include <compare>
#include <cstdint>

namespace proxguard {

inline constexpr std::size_t kDigestBytes = 32;

// Output of the salted hash H_K(i).
struct Digest {
  std::array<std::uint8_t, kDigestBytes> bytes{};
  friend auto operator<=>(const Digest&, const Digest&) = default;
};

}  // namespace proxguard
