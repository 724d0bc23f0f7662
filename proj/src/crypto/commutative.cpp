#include "proxguard/commutative.hpp"

#include <openssl/bn.h>

#include "proxguard/error.hpp"
#include "proxguard/digest.hpp"

namespace proxguard {

namespace {

constexpr std::string_view kSim512Prime =
    "F05CE9F219959A9DD01B6F988F1E3714D6A223FF42D6EFF8F5A08D5351DDEA5A"
    "DAF8BD84B679AAF815B9268AE2EF41FBCFD60734F16AC03C0FBE193FC2394473";

struct BnFree {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnFree>;

struct BnCtxFree {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};

BN_CTX* scratch() {
  thread_local std::unique_ptr<BN_CTX, BnCtxFree> ctx(BN_CTX_new());
  if (!ctx) throw Error("crypto", "BN_CTX_new failed");
  return ctx.get();
}

Bn make_bn() {
  Bn b(BN_new());
  if (!b) throw Error("crypto", "BN_new failed");
  return b;
}

Bn bn_from(std::span<const std::uint8_t> bytes) {
  Bn b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!b) throw Error("crypto", "BN_bin2bn failed");
  return b;
}

std::vector<std::uint8_t> bn_bytes(const BIGNUM* b, std::size_t width) {
  std::vector<std::uint8_t> out(width);
  if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0) {
    throw Error("crypto", "BN_bn2binpad overflow");
  }
  return out;
}

}  // namespace

struct CommutativeGroup::Impl {
  Bn p;
  Bn p_minus_1;
  Bn p_minus_2;
  Bn p_minus_3;
  BN_MONT_CTX* mont = nullptr;

  ~Impl() { BN_MONT_CTX_free(mont); }

  bool in_range(const BIGNUM* x) const {
    return BN_cmp(x, BN_value_one()) > 0 && BN_cmp(x, p_minus_2.get()) <= 0;
  }

  bool coprime(const BIGNUM* k) const {
    Bn g = make_bn();
    if (BN_gcd(g.get(), k, p_minus_1.get(), scratch()) != 1) {
      throw Error("crypto", "BN_gcd failed");
    }
    return BN_is_one(g.get());
  }
};

CommutativeGroup::CommutativeGroup(std::string name, std::string_view prime_hex)
    : name_(std::move(name)), impl_(std::make_unique<Impl>()) {
  if (prime_hex.empty()) {
    impl_->p.reset(BN_get_rfc3526_prime_2048(nullptr));
  } else {
    BIGNUM* raw = nullptr;
    const std::string hex(prime_hex);
    if (BN_hex2bn(&raw, hex.c_str()) == 0) throw Error("crypto", "invalid group prime");
    impl_->p.reset(raw);
  }
  if (!impl_->p) throw Error("crypto", "cannot load group prime");

  auto minus = [this](unsigned long w) {
    Bn r(BN_dup(impl_->p.get()));
    if (!r || BN_sub_word(r.get(), w) != 1) throw Error("crypto", "BN_sub_word failed");
    return r;
  };
  impl_->p_minus_1 = minus(1);
  impl_->p_minus_2 = minus(2);
  impl_->p_minus_3 = minus(3);

  impl_->mont = BN_MONT_CTX_new();
  if (impl_->mont == nullptr || BN_MONT_CTX_set(impl_->mont, impl_->p.get(), scratch()) != 1) {
    throw Error("crypto", "BN_MONT_CTX_set failed");
  }
  element_bytes_ = static_cast<std::size_t>(BN_num_bytes(impl_->p.get()));
}

CommutativeGroup::~CommutativeGroup() = default;

const CommutativeGroup& CommutativeGroup::modp2048() {
  static const CommutativeGroup group("modp2048", {});
  return group;
}

const CommutativeGroup& CommutativeGroup::sim512() {
  static const CommutativeGroup group("sim512", kSim512Prime);
  return group;
}

const CommutativeGroup& CommutativeGroup::by_name(std::string_view name) {
  if (name == "modp2048") return modp2048();
  if (name == "sim512") return sim512();
  throw ParameterError("unknown commutative group '" + std::string(name) + "'");
}

std::size_t CommutativeGroup::bits() const {
  return static_cast<std::size_t>(BN_num_bits(impl_->p.get()));
}

CommutativeCiphertext CommutativeGroup::map_digest(const Digest& d) const {
  Bn x = bn_from(d.bytes);
  Bn r = make_bn();
  if (BN_nnmod(r.get(), x.get(), impl_->p_minus_3.get(), scratch()) != 1 ||
      BN_add_word(r.get(), 2) != 1) {
    throw Error("crypto", "digest mapping failed");
  }
  return {bn_bytes(r.get(), element_bytes_)};
}

bool CommutativeGroup::is_element(std::span<const std::uint8_t> bytes) const {
  if (bytes.size() != element_bytes_) return false;
  Bn x = bn_from(bytes);
  return impl_->in_range(x.get());
}

CommutativeCiphertext CommutativeGroup::element(std::span<const std::uint8_t> bytes) const {
  if (!is_element(bytes)) throw ParameterError("value is not an element of the " + name_ + " group");
  return {std::vector<std::uint8_t>(bytes.begin(), bytes.end())};
}

CommutativeCiphertext CommutativeGroup::comm_enc(const SessionKey& k,
                                                 const CommutativeCiphertext& x) const {
  if (x.bytes.size() != element_bytes_) {
    throw ParameterError("group element has width " + std::to_string(x.bytes.size()));
  }
  Bn base = bn_from(x.bytes);
  if (!impl_->in_range(base.get())) throw ParameterError("group element outside [2, p-2]");
  Bn exponent = bn_from(k.exponent);
  Bn out = make_bn();
  if (BN_mod_exp_mont(out.get(), base.get(), exponent.get(), impl_->p.get(), scratch(),
                      impl_->mont) != 1) {
    throw Error("crypto", "BN_mod_exp_mont failed");
  }
  return {bn_bytes(out.get(), element_bytes_)};
}

SessionKey CommutativeGroup::gen_session_key(RandomSource& rng) const {
  std::vector<std::uint8_t> buf(element_bytes_);
  const int top_bits = BN_num_bits(impl_->p.get()) % 8;
  for (;;) {
    rng.fill(buf);
    if (top_bits != 0) buf[0] &= static_cast<std::uint8_t>((1U << top_bits) - 1U);
    Bn k = bn_from(buf);
    if (impl_->in_range(k.get()) && impl_->coprime(k.get())) {
      return {bn_bytes(k.get(), element_bytes_)};
    }
  }
}

SessionKey CommutativeGroup::session_key(std::uint64_t exponent) const {
  Bn k = make_bn();
  if (BN_set_word(k.get(), exponent) != 1) throw Error("crypto", "BN_set_word failed");
  if (!impl_->coprime(k.get())) throw ParameterError("exponent not coprime to p-1");
  return {bn_bytes(k.get(), element_bytes_)};
}

bool CommutativeGroup::is_valid_session_key(const SessionKey& k) const {
  if (k.exponent.empty()) return false;
  Bn e = bn_from(k.exponent);
  return !BN_is_zero(e.get()) && impl_->coprime(e.get());
}

}  // namespace proxguard
