#include "proxguard/keys.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <memory>

#include "proxguard/error.hpp"

namespace proxguard {

namespace {

std::array<std::uint8_t, 8> be64(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[7 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> msg) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(),
           out.data(), &len) == nullptr ||
      len != out.size()) {
    throw Error("crypto", "HMAC-SHA256 failed");
  }
  return out;
}

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw Error("crypto", "EVP_CIPHER_CTX_new failed");
  return ctx;
}

}  // namespace

SharedKey gen_shared_key(RandomSource& rng) {
  SharedKey k;
  rng.fill(k.bytes);
  return k;
}

IntervalKey derive_interval_key(const SharedKey& k, IntervalIndex ui) {
  std::array<std::uint8_t, 16> msg{'i', 'n', 't', 'e', 'r', 'v', 'a', 'l'};
  const auto idx = be64(ui);
  std::copy(idx.begin(), idx.end(), msg.begin() + 8);
  IntervalKey out;
  out.bytes = hmac_sha256(k.bytes, msg);
  return out;
}

Bytes enc(const IntervalKey& k, GranuleIndex i, RandomSource& rng) {
  Bytes out(kSealedIndexBytes);
  std::span<std::uint8_t> nonce(out.data(), kNonceBytes);
  rng.fill(nonce);
  const auto plain = be64(i.value);

  auto ctx = new_ctx();
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, k.bytes.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data() + kNonceBytes, &len, plain.data(),
                        static_cast<int>(plain.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceBytes + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes,
                          out.data() + kNonceBytes + kIndexBytes) != 1) {
    throw Error("crypto", "AES-GCM encryption failed");
  }
  return out;
}

GranuleIndex dec(const IntervalKey& k, std::span<const std::uint8_t> sealed) {
  if (sealed.size() != kSealedIndexBytes) {
    throw AuthenticationError("sealed index has length " + std::to_string(sealed.size()));
  }
  std::array<std::uint8_t, kIndexBytes> plain{};
  std::array<std::uint8_t, kTagBytes> tag{};
  std::copy_n(sealed.begin() + kNonceBytes + kIndexBytes, kTagBytes, tag.begin());

  auto ctx = new_ctx();
  int len = 0;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, k.bytes.data(), sealed.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), plain.data(), &len, sealed.data() + kNonceBytes,
                        kIndexBytes) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) != 1) {
    throw Error("crypto", "AES-GCM decryption setup failed");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1) {
    throw AuthenticationError("sealed index failed authentication");
  }
  std::uint64_t v = 0;
  for (auto b : plain) v = (v << 8) | b;
  return {v};
}

Digest salted_hash(const IntervalKey& k, std::uint64_t i) {
  Digest d;
  d.bytes = hmac_sha256(k.bytes, be64(i));
  return d;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  const auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ParseError(std::string("invalid hex digit '") + c + "'");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

SharedKey shared_key_from_hex(std::string_view hex) {
  const Bytes raw = from_hex(hex);
  if (raw.size() != kKeyBytes) {
    throw ParseError("shared key must be " + std::to_string(kKeyBytes) + " bytes, got " +
                     std::to_string(raw.size()));
  }
  SharedKey k;
  std::copy(raw.begin(), raw.end(), k.bytes.begin());
  return k;
}

}  // namespace proxguard
