#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

namespace proxguard {

// Byte-oriented randomness source. Key material, session exponents, nonces,
// padding indexes and shuffles all draw from one of these.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform_unit();
  bool coin() { return (next_u64() & 1U) != 0; }
};

// Operating-system CSPRNG (OpenSSL RAND_bytes). Throws RandomnessError when
// the generator cannot produce output.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Seeded AES-256-CTR keystream. Reproducible, used by the simulator and by
// keygen when a seed is given.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed, std::string_view stream = {});
  ~DeterministicRandom() override;
  DeterministicRandom(const DeterministicRandom&) = delete;
  DeterministicRandom& operator=(const DeterministicRandom&) = delete;

  void fill(std::span<std::uint8_t> out) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Fisher-Yates shuffle driven by a RandomSource.
template <typename Container>
void shuffle(Container& items, RandomSource& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace proxguard
