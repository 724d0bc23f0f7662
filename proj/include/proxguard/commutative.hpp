#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxguard/random.hpp"

namespace proxguard {

struct Digest;

// Element of Z_p^* in [2, p-2], big-endian, padded to the group width.
struct CommutativeCiphertext {
  std::vector<std::uint8_t> bytes;
  friend auto operator<=>(const CommutativeCiphertext&, const CommutativeCiphertext&) = default;
};

// Exponent k with gcd(k, p-1) = 1, big-endian. Fresh per proximity request.
struct SessionKey {
  std::vector<std::uint8_t> exponent;
};

// Pohlig-Hellman style commutative cipher C_k(x) = x^k mod p over a fixed
// public safe prime p.
class CommutativeGroup {
 public:
  // RFC 3526 2048-bit MODP group (a safe prime). The protocol default.
  static const CommutativeGroup& modp2048();
  // 512-bit safe prime for simulation sweeps and bulk tests, where thousands
  // of exponentiations per request would otherwise dominate the run time.
  static const CommutativeGroup& sim512();
  // "modp2048" or "sim512"; throws ParameterError otherwise.
  static const CommutativeGroup& by_name(std::string_view name);

  ~CommutativeGroup();
  CommutativeGroup(const CommutativeGroup&) = delete;
  CommutativeGroup& operator=(const CommutativeGroup&) = delete;

  const std::string& name() const { return name_; }
  std::size_t element_bytes() const { return element_bytes_; }
  std::size_t bits() const;

  // 2 + (digest mod (p-3)); injective whenever p - 3 exceeds 2^256.
  CommutativeCiphertext map_digest(const Digest& d) const;

  // Throws ParameterError if x is not a width-exact value in [2, p-2].
  CommutativeCiphertext comm_enc(const SessionKey& k, const CommutativeCiphertext& x) const;

  bool is_element(std::span<const std::uint8_t> bytes) const;
  // Validating constructor for wire input; throws ParameterError.
  CommutativeCiphertext element(std::span<const std::uint8_t> bytes) const;

  // Uniform in [2, p-2], rejected until coprime to p-1.
  SessionKey gen_session_key(RandomSource& rng) const;
  // Arbitrary exponent; throws ParameterError unless gcd(k, p-1) = 1.
  SessionKey session_key(std::uint64_t exponent) const;
  bool is_valid_session_key(const SessionKey& k) const;

 private:
  CommutativeGroup(std::string name, std::string_view prime_hex);

  struct Impl;
  std::string name_;
  std::size_t element_bytes_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace proxguard
