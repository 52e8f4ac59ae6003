#include "medshare/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/obj_mac.h>

#include <cstring>
#include <memory>

#include "medshare/serial.hpp"

namespace medshare::crypto {

// ---------------------------------------------------------------------------
// key chain
// ---------------------------------------------------------------------------

KeyChain derive_key_chain(const SymKey& sk1, size_t k) {
  if (k < 1) throw std::invalid_argument("key chain: k must be >= 1");
  KeyChain chain;
  chain.keys.reserve(k);
  chain.keys.push_back(sk1);
  for (size_t i = 1; i < k; ++i) {
    chain.keys.push_back(sha256(ByteView(chain.keys.back().data(), 32)));
  }
  return chain;
}

// ---------------------------------------------------------------------------
// AES-256-GCM
// ---------------------------------------------------------------------------

namespace {

constexpr uint8_t kAeadVersion = 0x01;
constexpr size_t kNonceLen = 12;
constexpr size_t kTagLen = 16;

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

}  // namespace

Bytes sym_encrypt(const SymKey& key, ByteView plaintext, Rng& rng) {
  Bytes out;
  out.reserve(1 + kNonceLen + plaintext.size() + kTagLen);
  out.push_back(kAeadVersion);
  Bytes nonce = rng.bytes(kNonceLen);
  append(out, nonce);

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1)
    throw std::runtime_error("aead: init failure");

  out.resize(1 + kNonceLen + plaintext.size());
  int len = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data() + 1 + kNonceLen, &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1)
    throw std::runtime_error("aead: encrypt failure");
  int fin = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + 1 + kNonceLen + len, &fin) != 1)
    throw std::runtime_error("aead: finalize failure");

  uint8_t tag[kTagLen];
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen, tag) != 1)
    throw std::runtime_error("aead: tag failure");
  out.insert(out.end(), tag, tag + kTagLen);
  return out;
}

Bytes sym_decrypt(const SymKey& key, ByteView ciphertext) {
  if (ciphertext.size() < 1 + kNonceLen + kTagLen) throw MalformedInput("aead: ciphertext too short");
  if (ciphertext[0] != kAeadVersion) throw MalformedInput("aead: unknown version byte");
  const uint8_t* nonce = ciphertext.data() + 1;
  const uint8_t* body = ciphertext.data() + 1 + kNonceLen;
  size_t body_len = ciphertext.size() - 1 - kNonceLen - kTagLen;
  const uint8_t* tag = ciphertext.data() + ciphertext.size() - kTagLen;

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1)
    throw std::runtime_error("aead: init failure");

  Bytes out(body_len);
  int len = 0;
  if (body_len > 0 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, body, static_cast<int>(body_len)) != 1)
    throw AuthenticationError("aead: decrypt failure");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, const_cast<uint8_t*>(tag)) != 1)
    throw std::runtime_error("aead: tag set failure");
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1)
    throw AuthenticationError("aead: authentication failed");
  return out;
}

// ---------------------------------------------------------------------------
// secp256k1
// ---------------------------------------------------------------------------

namespace {

struct BnFree {
  void operator()(BIGNUM* p) const { BN_free(p); }
};
using Bn = std::unique_ptr<BIGNUM, BnFree>;

struct BnCtxFree {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
using BnCtx = std::unique_ptr<BN_CTX, BnCtxFree>;

struct PointFree {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
using Point = std::unique_ptr<EC_POINT, PointFree>;

class Curve {
 public:
  Curve() {
    group_ = EC_GROUP_new_by_curve_name(NID_secp256k1);
    if (!group_) throw std::runtime_error("secp256k1: group init failure");
    BnCtx ctx(BN_CTX_new());
    order_ = Bn(BN_dup(EC_GROUP_get0_order(group_)));
    field_p_ = Bn(BN_new());
    BIGNUM *a = BN_new(), *b = BN_new();
    EC_GROUP_get_curve(group_, field_p_.get(), a, b, ctx.get());
    BN_free(a);
    BN_free(b);
    half_order_ = Bn(BN_new());
    BN_rshift1(half_order_.get(), order_.get());
  }

  const EC_GROUP* group() const { return group_; }
  const BIGNUM* order() const { return order_.get(); }
  const BIGNUM* field_p() const { return field_p_.get(); }

 private:
  EC_GROUP* group_ = nullptr;
  Bn order_, field_p_, half_order_;
};

const Curve& curve() {
  static const Curve c;
  return c;
}

Bn bn_from_be(ByteView b) {
  Bn out(BN_bin2bn(b.data(), static_cast<int>(b.size()), nullptr));
  if (!out) throw std::runtime_error("bignum: alloc failure");
  return out;
}

std::array<uint8_t, 32> bn_to_be32(const BIGNUM* v) {
  std::array<uint8_t, 32> out{};
  if (BN_bn2binpad(v, out.data(), 32) != 32) throw std::runtime_error("bignum: encode failure");
  return out;
}

Bytes point_to_compressed(const EC_POINT* p, BN_CTX* ctx) {
  Bytes out(33);
  size_t n = EC_POINT_point2oct(curve().group(), p, POINT_CONVERSION_COMPRESSED, out.data(),
                                out.size(), ctx);
  if (n != 33) throw std::runtime_error("secp256k1: point encode failure");
  return out;
}

Point point_from_compressed(ByteView pub33, BN_CTX* ctx) {
  Point p(EC_POINT_new(curve().group()));
  if (pub33.size() != 33 ||
      EC_POINT_oct2point(curve().group(), p.get(), pub33.data(), pub33.size(), ctx) != 1)
    throw MalformedInput("secp256k1: invalid compressed point");
  return p;
}

// nonce/scalar drawn as sha256 of domain-tagged input, rejected until in
// [1, n-1]
Bn scalar_from_hash(const std::string& tag, ByteView seed_material) {
  Bytes material(seed_material.begin(), seed_material.end());
  material.push_back(0);
  for (uint32_t ctr = 0;; ++ctr) {
    material.back() = static_cast<uint8_t>(ctr);
    Hash256 h = tagged_hash(tag, material);
    Bn k = bn_from_be(ByteView(h.data(), h.size()));
    if (!BN_is_zero(k.get()) && BN_cmp(k.get(), curve().order()) < 0) return k;
  }
}

}  // namespace

Address address_of_pub(ByteView pub33) { return address_from(pub33); }

KeyPair keypair_from_private(const std::array<uint8_t, 32>& pr) {
  BnCtx ctx(BN_CTX_new());
  Bn d = bn_from_be(ByteView(pr.data(), pr.size()));
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve().order()) >= 0)
    throw std::invalid_argument("keypair: private scalar out of range");
  Point pub(EC_POINT_new(curve().group()));
  if (EC_POINT_mul(curve().group(), pub.get(), d.get(), nullptr, nullptr, ctx.get()) != 1)
    throw std::runtime_error("secp256k1: scalar multiply failure");
  KeyPair kp;
  kp.pr = pr;
  kp.pub = point_to_compressed(pub.get(), ctx.get());
  kp.address = address_of_pub(kp.pub);
  return kp;
}

KeyPair keypair_generate(Rng& rng) {
  for (;;) {
    auto pr = rng.fixed<32>();
    Bn d = bn_from_be(ByteView(pr.data(), pr.size()));
    if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve().order()) >= 0) continue;
    return keypair_from_private(pr);
  }
}

Bytes Signature::serialize() const {
  serial::Writer w;
  w.u8(0x01);
  w.fixed(r);
  w.fixed(s);
  w.u8(recovery);
  w.u64(timestamp);
  return w.take();
}

Signature Signature::deserialize(ByteView data) {
  try {
    serial::Reader rd(data);
    if (rd.u8() != 0x01) throw MalformedInput("signature: unknown version");
    Signature sig;
    sig.r = rd.fixed<32>();
    sig.s = rd.fixed<32>();
    sig.recovery = rd.u8();
    sig.timestamp = rd.u64();
    rd.expect_end();
    return sig;
  } catch (const serial::DecodeError& e) {
    throw MalformedInput(std::string("signature: ") + e.what());
  }
}

Signature sign_digest(const std::array<uint8_t, 32>& pr, const Hash256& msg, uint64_t timestamp) {
  BnCtx ctx(BN_CTX_new());
  Bn d = bn_from_be(ByteView(pr.data(), pr.size()));
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve().order()) >= 0)
    throw std::invalid_argument("sign: private scalar out of range");
  Bn z = bn_from_be(ByteView(msg.data(), msg.size()));
  const BIGNUM* n = curve().order();

  Bytes nonce_material(pr.begin(), pr.end());
  append(nonce_material, ByteView(msg.data(), msg.size()));

  for (uint32_t attempt = 0;; ++attempt) {
    Bytes material = nonce_material;
    material.push_back(static_cast<uint8_t>(attempt));
    Bn k = scalar_from_hash("medshare.ecdsa.nonce.v1", material);

    Point R(EC_POINT_new(curve().group()));
    if (EC_POINT_mul(curve().group(), R.get(), k.get(), nullptr, nullptr, ctx.get()) != 1)
      throw std::runtime_error("sign: nonce point failure");
    Bn rx(BN_new()), ry(BN_new());
    EC_POINT_get_affine_coordinates(curve().group(), R.get(), rx.get(), ry.get(), ctx.get());

    Bn r(BN_new());
    BN_nnmod(r.get(), rx.get(), n, ctx.get());
    if (BN_is_zero(r.get())) continue;  // Eq. of the scheme: resample when r == 0

    // s = k^-1 (z + r*d) mod n
    Bn kinv(BN_new());
    if (!BN_mod_inverse(kinv.get(), k.get(), n, ctx.get())) continue;
    Bn rd_(BN_new()), sum(BN_new()), s(BN_new());
    BN_mod_mul(rd_.get(), r.get(), d.get(), n, ctx.get());
    BN_mod_add(sum.get(), z.get(), rd_.get(), n, ctx.get());
    BN_mod_mul(s.get(), sum.get(), kinv.get(), n, ctx.get());
    if (BN_is_zero(s.get())) continue;  // resample when s == 0

    Signature sig;
    sig.r = bn_to_be32(r.get());
    sig.s = bn_to_be32(s.get());
    sig.recovery = static_cast<uint8_t>((BN_is_odd(ry.get()) ? 1 : 0) |
                                        (BN_cmp(rx.get(), n) >= 0 ? 2 : 0));
    sig.timestamp = timestamp;
    return sig;
  }
}

std::pair<Hash256, Signature> sign_timestamped(const KeyPair& signer, ByteView staff_id,
                                               uint64_t timestamp) {
  Bytes buf(staff_id.begin(), staff_id.end());
  for (int i = 7; i >= 0; --i) buf.push_back(static_cast<uint8_t>(timestamp >> (8 * i)));
  Hash256 msg = sha256(buf);
  return {msg, sign_digest(signer.pr, msg, timestamp)};
}

Address recover(const Hash256& msg, const Signature& sig) {
  BnCtx ctx(BN_CTX_new());
  const BIGNUM* n = curve().order();
  Bn r = bn_from_be(ByteView(sig.r.data(), 32));
  Bn s = bn_from_be(ByteView(sig.s.data(), 32));
  if (BN_is_zero(r.get()) || BN_is_zero(s.get()))
    throw RecoveryError("recover: zero signature component");
  if (BN_cmp(r.get(), n) >= 0 || BN_cmp(s.get(), n) >= 0)
    throw RecoveryError("recover: signature component exceeds group order");
  if (sig.recovery > 3) throw RecoveryError("recover: invalid recovery hint");

  // reconstruct the nonce point from r and the recovery hint
  Bn x(BN_dup(r.get()));
  if (sig.recovery & 2) {
    BN_add(x.get(), x.get(), n);
    if (BN_cmp(x.get(), curve().field_p()) >= 0) throw RecoveryError("recover: x out of field");
  }
  Point R(EC_POINT_new(curve().group()));
  if (EC_POINT_set_compressed_coordinates(curve().group(), R.get(), x.get(), sig.recovery & 1,
                                          ctx.get()) != 1)
    throw RecoveryError("recover: point not on curve");

  // Q = r^-1 (s*R - z*G)
  Bn z = bn_from_be(ByteView(msg.data(), msg.size()));
  Bn rinv(BN_new());
  if (!BN_mod_inverse(rinv.get(), r.get(), n, ctx.get()))
    throw RecoveryError("recover: r not invertible");
  Bn u1(BN_new()), u2(BN_new()), zneg(BN_new()), zero(BN_new());
  BN_zero(zero.get());
  BN_mod_sub(zneg.get(), zero.get(), z.get(), n, ctx.get());
  BN_mod_mul(u1.get(), zneg.get(), rinv.get(), n, ctx.get());
  BN_mod_mul(u2.get(), s.get(), rinv.get(), n, ctx.get());

  Point Q(EC_POINT_new(curve().group()));
  if (EC_POINT_mul(curve().group(), Q.get(), u1.get(), R.get(), u2.get(), ctx.get()) != 1)
    throw RecoveryError("recover: point combination failure");
  if (EC_POINT_is_at_infinity(curve().group(), Q.get()))
    throw RecoveryError("recover: recovered point at infinity");

  return address_of_pub(point_to_compressed(Q.get(), ctx.get()));
}

// ---------------------------------------------------------------------------
// hybrid asymmetric envelope
// ---------------------------------------------------------------------------

namespace {

constexpr uint8_t kEnvelopeVersion = 0x01;

SymKey ecdh_key(const EC_POINT* shared, ByteView eph_pub, BN_CTX* ctx) {
  Bn sx(BN_new()), sy(BN_new());
  EC_POINT_get_affine_coordinates(curve().group(), shared, sx.get(), sy.get(), ctx);
  Bytes material(64 + eph_pub.size());
  auto xb = bn_to_be32(sx.get());
  auto yb = bn_to_be32(sy.get());
  std::memcpy(material.data(), xb.data(), 32);
  std::memcpy(material.data() + 32, yb.data(), 32);
  std::memcpy(material.data() + 64, eph_pub.data(), eph_pub.size());
  return tagged_hash("medshare.ecies.v1", material);
}

}  // namespace

Bytes asym_encrypt(ByteView recipient_pub33, ByteView payload, Rng& rng) {
  BnCtx ctx(BN_CTX_new());
  Point recipient = point_from_compressed(recipient_pub33, ctx.get());
  KeyPair eph = keypair_generate(rng);
  Bn d = bn_from_be(ByteView(eph.pr.data(), 32));

  Point shared(EC_POINT_new(curve().group()));
  if (EC_POINT_mul(curve().group(), shared.get(), nullptr, recipient.get(), d.get(), ctx.get()) != 1 ||
      EC_POINT_is_at_infinity(curve().group(), shared.get()))
    throw std::runtime_error("envelope: shared point failure");

  SymKey key = ecdh_key(shared.get(), eph.pub, ctx.get());
  Bytes out;
  out.push_back(kEnvelopeVersion);
  append(out, eph.pub);
  Bytes body = sym_encrypt(key, payload, rng);
  append(out, body);
  return out;
}

Bytes asym_decrypt(const std::array<uint8_t, 32>& pr, ByteView ciphertext) {
  if (ciphertext.size() < 1 + 33) throw MalformedInput("envelope: too short");
  if (ciphertext[0] != kEnvelopeVersion) throw MalformedInput("envelope: unknown version");
  BnCtx ctx(BN_CTX_new());
  ByteView eph_pub = ciphertext.subspan(1, 33);
  Point eph = point_from_compressed(eph_pub, ctx.get());
  Bn d = bn_from_be(ByteView(pr.data(), 32));
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve().order()) >= 0)
    throw std::invalid_argument("envelope: private scalar out of range");

  Point shared(EC_POINT_new(curve().group()));
  if (EC_POINT_mul(curve().group(), shared.get(), nullptr, eph.get(), d.get(), ctx.get()) != 1 ||
      EC_POINT_is_at_infinity(curve().group(), shared.get()))
    throw AuthenticationError("envelope: shared point failure");

  SymKey key = ecdh_key(shared.get(), eph_pub, ctx.get());
  return sym_decrypt(key, ciphertext.subspan(1 + 33));
}

}  // namespace medshare::crypto
