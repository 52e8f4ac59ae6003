#include "medshare/crypto.hpp"
#include "medshare/field.hpp"
#include "medshare/serial.hpp"
#include "medshare/shamir.hpp"

namespace medshare::crypto {

namespace {

using field::Fe;
using policy::PolicyNode;

SymKey attr_key_from_token(const Hash256& token, const policy::Attribute& attr) {
  Bytes material(token.begin(), token.end());
  append(material, to_bytes(attr.name()));
  return tagged_hash("medshare.abe.attr.v1", material);
}

Hash256 token_from_master(const AbeMasterKey& mk) {
  return tagged_hash("medshare.abe.token.v1", ByteView(mk.master.data(), 32));
}

SymKey payload_key(const Fe& root_secret) {
  auto s = root_secret.to_bytes();
  return tagged_hash("medshare.abe.payload.v1", ByteView(s.data(), 32));
}

// Shamir-split `secret` down the tree; a gate with threshold t over n
// children uses a degree t-1 polynomial, child j takes the evaluation at
// x = j. Leaf shares are AEAD-encrypted under the leaf attribute key and
// appended in depth-first order.
void split_tree(const PolicyNode& node, const Fe& secret, const Hash256& token, Rng& rng,
                std::vector<Bytes>& out) {
  if (node.is_leaf()) {
    SymKey key = attr_key_from_token(token, *node.attribute);
    auto bytes = secret.to_bytes();
    out.push_back(sym_encrypt(key, ByteView(bytes.data(), 32), rng));
    return;
  }
  auto shares = shamir::split(secret, node.threshold, static_cast<uint32_t>(node.children.size()), rng);
  for (size_t j = 0; j < node.children.size(); ++j) {
    split_tree(node.children[j], shares[j].y, token, rng, out);
  }
}

// Bottom-up reconstruction mirroring split_tree. Always walks the whole tree
// so `cursor` stays aligned with the depth-first share list regardless of
// which subtrees resolve.
std::optional<Fe> reconstruct_tree(const PolicyNode& node, const AbeSecretKey& sk,
                                   const std::vector<Bytes>& shares, size_t& cursor) {
  if (node.is_leaf()) {
    const Bytes& blob = shares.at(cursor++);
    auto it = sk.per_attr_keys.find(*node.attribute);
    if (it == sk.per_attr_keys.end()) return std::nullopt;
    try {
      Bytes plain = sym_decrypt(it->second, blob);
      if (plain.size() != 32) return std::nullopt;
      std::array<uint8_t, 32> be{};
      std::copy(plain.begin(), plain.end(), be.begin());
      return Fe::from_bytes(be);
    } catch (const std::runtime_error&) {
      return std::nullopt;  // wrong key or corrupted share: fail closed
    }
  }
  std::vector<shamir::Share> resolved;
  for (size_t j = 0; j < node.children.size(); ++j) {
    auto v = reconstruct_tree(node.children[j], sk, shares, cursor);
    if (v) resolved.push_back({static_cast<uint32_t>(j + 1), *v});
  }
  if (resolved.size() < node.threshold) return std::nullopt;
  resolved.resize(node.threshold);  // any t suffice; take the first in child order
  return shamir::reconstruct(resolved);
}

}  // namespace

// ---------------------------------------------------------------------------
// setup / keygen
// ---------------------------------------------------------------------------

std::pair<AbePublicParams, AbeMasterKey> abe_setup(uint32_t kappa, Rng& rng) {
  if (kappa != 128 && kappa != 256)
    throw std::invalid_argument("abe: unsupported security parameter " + std::to_string(kappa));
  AbeMasterKey mk;
  mk.master = rng.fixed<32>();
  AbePublicParams pk;
  pk.kappa = kappa;
  {
    field::Int p = field::modulus();
    for (int i = 31; i >= 0; --i) {
      pk.modulus[i] = static_cast<uint8_t>(p & 0xff);
      p >>= 8;
    }
  }
  pk.attribute_token = token_from_master(mk);
  return {pk, mk};
}

AbeSecretKey abe_keygen(const AbeMasterKey& mk, const policy::AttributeSet& attrs) {
  if (attrs.empty()) throw std::invalid_argument("abe: empty attribute set");
  Hash256 token = token_from_master(mk);
  AbeSecretKey sk;
  sk.attrs = attrs;
  for (const auto& a : attrs) sk.per_attr_keys.emplace(a, attr_key_from_token(token, a));
  return sk;
}

// ---------------------------------------------------------------------------
// encrypt / decrypt
// ---------------------------------------------------------------------------

AbeCiphertext abe_encrypt(const AbePublicParams& pk, ByteView message,
                          const policy::AccessPolicy& pol, Rng& rng) {
  try {
    policy::validate_structure(policy::PrivilegeStructure{{pol}});
  } catch (const policy::StructureError& e) {
    throw AbeError(std::string("abe: invalid policy: ") + e.what());
  }
  Fe root_secret = Fe::random(rng);
  AbeCiphertext ct;
  ct.policy = pol;
  split_tree(pol.root, root_secret, pk.attribute_token, rng, ct.leaf_shares);
  ct.payload = sym_encrypt(payload_key(root_secret), message, rng);
  return ct;
}

Bytes abe_decrypt(const AbeCiphertext& ct, const AbeSecretKey& sk) {
  size_t cursor = 0;
  std::optional<Fe> root;
  try {
    root = reconstruct_tree(ct.policy.root, sk, ct.leaf_shares, cursor);
  } catch (const std::out_of_range&) {
    throw AbeError("abe: malformed ciphertext (share count mismatch)");
  }
  if (!root) throw AbeError("abe: decryption failed");
  try {
    return sym_decrypt(payload_key(*root), ct.payload);
  } catch (const std::runtime_error&) {
    throw AbeError("abe: decryption failed");
  }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

Bytes AbePublicParams::serialize() const {
  serial::Writer w;
  w.u8(0x01);
  w.u32(kappa);
  w.fixed(modulus);
  w.fixed(attribute_token);
  return w.take();
}

AbePublicParams AbePublicParams::deserialize(ByteView data) {
  serial::Reader r(data);
  if (r.u8() != 0x01) throw MalformedInput("abe params: unknown version");
  AbePublicParams pk;
  pk.kappa = r.u32();
  pk.modulus = r.fixed<32>();
  pk.attribute_token = r.fixed<32>();
  r.expect_end();
  return pk;
}

Bytes AbeSecretKey::serialize() const {
  serial::Writer w;
  w.u8(0x01);
  w.u32(static_cast<uint32_t>(per_attr_keys.size()));
  for (const auto& [attr, key] : per_attr_keys) {  // std::map order: sorted, stable
    w.str(attr.name());
    w.fixed(key);
  }
  return w.take();
}

AbeSecretKey AbeSecretKey::deserialize(ByteView data) {
  try {
    serial::Reader r(data);
    if (r.u8() != 0x01) throw MalformedInput("abe key: unknown version");
    uint32_t count = r.u32();
    AbeSecretKey sk;
    for (uint32_t i = 0; i < count; ++i) {
      auto attr = policy::Attribute::canonicalize(r.str());
      auto key = r.fixed<32>();
      sk.attrs.insert(attr);
      sk.per_attr_keys.emplace(attr, key);
    }
    r.expect_end();
    return sk;
  } catch (const serial::DecodeError& e) {
    throw MalformedInput(std::string("abe key: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedInput(std::string("abe key: ") + e.what());
  }
}

Bytes AbeCiphertext::serialize() const {
  serial::Writer w;
  w.u8(0x01);
  policy::encode_node(w, policy.root);
  w.u32(static_cast<uint32_t>(leaf_shares.size()));
  for (const auto& s : leaf_shares) w.blob(s);
  w.blob(payload);
  return w.take();
}

AbeCiphertext AbeCiphertext::deserialize(ByteView data) {
  try {
    serial::Reader r(data);
    if (r.u8() != 0x01) throw MalformedInput("abe ciphertext: unknown version");
    AbeCiphertext ct;
    ct.policy.root = policy::decode_node(r);
    ct.policy.source = policy::to_dsl(ct.policy.root);
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) ct.leaf_shares.push_back(r.blob());
    ct.payload = r.blob();
    r.expect_end();
    if (count != ct.policy.leaf_count())
      throw MalformedInput("abe ciphertext: share count does not match policy leaves");
    return ct;
  } catch (const serial::DecodeError& e) {
    throw MalformedInput(std::string("abe ciphertext: ") + e.what());
  }
}

}  // namespace medshare::crypto
