#include "proxguard/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <array>
#include <climits>
#include <cstring>
#include <vector>

#include "proxguard/error.hpp"

namespace proxguard {

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> buf{};
  fill(buf);
  std::uint64_t v = 0;
  for (auto b : buf) v = (v << 8) | b;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("uniform bound must be positive");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double RandomSource::uniform_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw RandomnessError("RAND_bytes failed");
  }
}

struct DeterministicRandom::Impl {
  EVP_CIPHER_CTX* ctx = nullptr;
  std::vector<std::uint8_t> zeros;
};

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view stream)
    : impl_(std::make_unique<Impl>()) {
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) seed_bytes[7 - i] = static_cast<std::uint8_t>(seed >> (8 * i));

  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> key{};
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  const bool hashed = md != nullptr && EVP_DigestInit_ex(md, EVP_sha256(), nullptr) == 1 &&
                      EVP_DigestUpdate(md, "proxguard-drbg", 14) == 1 &&
                      EVP_DigestUpdate(md, seed_bytes.data(), seed_bytes.size()) == 1 &&
                      EVP_DigestUpdate(md, stream.data(), stream.size()) == 1 &&
                      EVP_DigestFinal_ex(md, key.data(), nullptr) == 1;
  EVP_MD_CTX_free(md);
  if (!hashed) throw RandomnessError("cannot derive generator key");

  const std::array<std::uint8_t, 16> iv{};
  impl_->ctx = EVP_CIPHER_CTX_new();
  if (impl_->ctx == nullptr ||
      EVP_EncryptInit_ex(impl_->ctx, EVP_aes_256_ctr(), nullptr, key.data(), iv.data()) != 1) {
    throw RandomnessError("cannot initialise deterministic generator");
  }
}

DeterministicRandom::~DeterministicRandom() { EVP_CIPHER_CTX_free(impl_->ctx); }

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (impl_->zeros.size() < out.size()) impl_->zeros.resize(out.size(), 0);
  int written = 0;
  if (EVP_EncryptUpdate(impl_->ctx, out.data(), &written, impl_->zeros.data(),
                        static_cast<int>(out.size())) != 1 ||
      written != static_cast<int>(out.size())) {
    throw RandomnessError("deterministic generator failed");
  }
}

}  // namespace proxguard
