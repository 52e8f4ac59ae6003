#pragma once

#include <map>

#include "medshare/bytes.hpp"
#include "medshare/hash.hpp"
#include "medshare/policy.hpp"
#include "medshare/rng.hpp"

namespace medshare::crypto {

using SymKey = std::array<uint8_t, 32>;

// Authenticated ciphertext failed to verify: wrong key or tampered bytes.
class AuthenticationError : public std::runtime_error {
 public:
  explicit AuthenticationError(const std::string& what) : std::runtime_error(what) {}
};

// Input does not parse as a ciphertext/signature at all (distinct from a
// well-formed ciphertext that fails authentication).
class MalformedInput : public std::runtime_error {
 public:
  explicit MalformedInput(const std::string& what) : std::runtime_error(what) {}
};

class RecoveryError : public std::runtime_error {
 public:
  explicit RecoveryError(const std::string& what) : std::runtime_error(what) {}
};

class AbeError : public std::runtime_error {
 public:
  explicit AbeError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Hash-chained level keys: keys[i+1] = sha256(keys[i]). Holding keys[i]
// derives every lower-privilege key but none of the higher ones.
// ---------------------------------------------------------------------------
struct KeyChain {
  std::vector<SymKey> keys;  // keys[0] is sk_1
};

KeyChain derive_key_chain(const SymKey& sk1, size_t k);  // throws on k < 1

// ---------------------------------------------------------------------------
// Symmetric AEAD (AES-256-GCM). Output: version byte, 12-byte nonce,
// ciphertext, 16-byte tag. Fresh nonce per call from the injected rng.
// ---------------------------------------------------------------------------
Bytes sym_encrypt(const SymKey& key, ByteView plaintext, Rng& rng);
// Throws AuthenticationError on wrong key / tampering, MalformedInput on
// inputs too short to carry a nonce and tag.
Bytes sym_decrypt(const SymKey& key, ByteView ciphertext);

// ---------------------------------------------------------------------------
// secp256k1 keypairs and recoverable ECDSA. Addresses are the last 20 bytes
// of sha256(compressed public key), recomputable from the key alone.
// ---------------------------------------------------------------------------
struct KeyPair {
  std::array<uint8_t, 32> pr{};  // private scalar, big-endian
  Bytes pub;                     // 33-byte compressed SEC1 point
  Address address{};
};

KeyPair keypair_generate(Rng& rng);
KeyPair keypair_from_private(const std::array<uint8_t, 32>& pr);
Address address_of_pub(ByteView pub33);

struct Signature {
  std::array<uint8_t, 32> r{};
  std::array<uint8_t, 32> s{};
  uint8_t recovery = 0;   // bit 0: y parity of the nonce point, bit 1: x overflow
  uint64_t timestamp = 0; // simulated-clock tick the signature was made at

  Bytes serialize() const;
  static Signature deserialize(ByteView data);  // throws MalformedInput
};

// msg = sha256(staff_id || timestamp_be8); the timestamp rides inside the
// signed digest and in the signature record so verifiers can check freshness.
std::pair<Hash256, Signature> sign_timestamped(const KeyPair& signer, ByteView staff_id,
                                               uint64_t timestamp);

// Deterministic ECDSA over an arbitrary 32-byte digest (nonce derived from
// key and digest, re-drawn until r and s are nonzero).
Signature sign_digest(const std::array<uint8_t, 32>& pr, const Hash256& msg, uint64_t timestamp);

// Public-key recovery: returns the signer's address or throws RecoveryError
// (zero r or s, point off curve, or no key recoverable).
Address recover(const Hash256& msg, const Signature& sig);

// ---------------------------------------------------------------------------
// Asymmetric encryption to a public key: ECIES-style hybrid envelope
// (ephemeral secp256k1 point + AEAD under the ECDH-derived key).
// ---------------------------------------------------------------------------
Bytes asym_encrypt(ByteView recipient_pub33, ByteView payload, Rng& rng);
Bytes asym_decrypt(const std::array<uint8_t, 32>& pr, ByteView ciphertext);

// ---------------------------------------------------------------------------
// Attribute-based encryption over threshold policy trees.
//
// Reference construction: the root secret is a field element, Shamir-split
// recursively down the policy tree; each leaf share is AEAD-encrypted under a
// per-attribute key sha256-derived from a token carried in the public
// parameters. The token itself is a one-way derivation of the master key, so
// holders of the public parameters can encrypt for any attribute while the
// master key never leaves the key-issuer. Not collusion-resistant across
// users pooling attribute keys; level enforcement against colluding staff is
// a contract-layer property, not a property of this construction.
// ---------------------------------------------------------------------------
struct AbePublicParams {
  uint32_t kappa = 256;               // accepted security parameters: 128, 256
  std::array<uint8_t, 32> modulus{};  // Shamir field modulus, big-endian
  Hash256 attribute_token{};          // one-way derived from the master key

  Bytes serialize() const;
  static AbePublicParams deserialize(ByteView data);
};

struct AbeMasterKey {
  std::array<uint8_t, 32> master{};
};

std::pair<AbePublicParams, AbeMasterKey> abe_setup(uint32_t kappa, Rng& rng);

struct AbeSecretKey {
  policy::AttributeSet attrs;
  std::map<policy::Attribute, SymKey> per_attr_keys;

  Bytes serialize() const;
  static AbeSecretKey deserialize(ByteView data);  // throws MalformedInput
};

AbeSecretKey abe_keygen(const AbeMasterKey& mk, const policy::AttributeSet& attrs);

struct AbeCiphertext {
  policy::AccessPolicy policy;
  std::vector<Bytes> leaf_shares;  // AEAD blobs, one per leaf in depth-first order
  Bytes payload;                   // AEAD under a key derived from the root secret

  Bytes serialize() const;
  static AbeCiphertext deserialize(ByteView data);
};

AbeCiphertext abe_encrypt(const AbePublicParams& pk, ByteView message,
                          const policy::AccessPolicy& policy, Rng& rng);

// Returns the message iff sk.attrs satisfies the ciphertext policy; a failed
// policy and a corrupted share are indistinguishable (both throw AbeError).
Bytes abe_decrypt(const AbeCiphertext& ct, const AbeSecretKey& sk);

}  // namespace medshare::crypto
