#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>

#include "json.hpp"
#include "medshare/bytes.hpp"
#include "medshare/hash.hpp"
#include "medshare/rng.hpp"

namespace medshare::cas {

class NotFoundError : public std::runtime_error {
 public:
  explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

// Every replica of an object failed its digest check.
class TamperError : public std::runtime_error {
 public:
  TamperError(const std::string& what, Hash256 digest)
      : std::runtime_error(what), digest(digest) {}
  Hash256 digest;
};

// Node identity: sha256 of the node public key, plus the proof-of-work tag
// that gated identity generation (difficulty 0 in simulation by default).
struct NodeId {
  Hash256 id{};
  auto operator<=>(const NodeId&) const = default;
};

// Chunked storage unit. digest == sha256(version || link_count || links ||
// content); leaves carry content, the root carries the ordered leaf links.
struct CasObject {
  Bytes content;
  std::vector<Hash256> links;

  Bytes serialize() const;
  Hash256 digest() const { return sha256(serialize()); }
  static CasObject deserialize(ByteView data);
};

constexpr size_t kDefaultChunkSize = 262144;  // 256 KB
constexpr size_t kInlineLimit = 1024;         // values this small also live on the DHT
constexpr size_t kSaltLen = 32;

// Pure chunker: ceil(len/chunk_size) leaves plus a root linking them in
// order. Data that fits one chunk yields just the leaf; empty data yields a
// single empty leaf. The root is always the last element.
std::vector<CasObject> chunk(ByteView data, size_t chunk_size = kDefaultChunkSize);

struct DhtRecords {
  std::map<Hash256, std::set<NodeId>> providers;
  std::map<Hash256, Bytes> small_values;  // serialized objects <= kInlineLimit
};

struct NetworkConfig {
  uint64_t seed = 0;
  size_t chunk_size = kDefaultChunkSize;
  uint32_t pow_difficulty = 0;  // leading zero bits required of the identity PoW tag
};

// In-process simulation of a content-addressed storage network: identities,
// provider records, replicated object placement, digest-verified retrieval.
// Writes are serialized through an internal mutex (single-writer store);
// reads of stored objects are safe concurrently.
class Network {
 public:
  explicit Network(NetworkConfig config = {});

  NodeId add_node(Rng& rng);
  // Drops the node and scrubs it from all provider records.
  void remove_node(const NodeId& id);

  // Stores all chunk objects on `replication` distinct nodes each (selected
  // deterministically from the digest and run seed) and registers provider
  // records. Objects small enough also get an inline DHT copy. Returns the
  // root digest. Throws std::invalid_argument when fewer than `replication`
  // nodes exist.
  Hash256 put(ByteView data, size_t replication);

  // Privacy-preserving variant: stores data || salt, so the resulting
  // address is a function of the salt and the plain content address of
  // `data` never appears in the DHT.
  Hash256 put_salted(ByteView data, const std::array<uint8_t, kSaltLen>& salt, size_t replication);

  // Reassembles the object tree under `digest`. Every fetched object is
  // re-hashed before use; a corrupted replica is skipped in favor of a clean
  // one, and if no clean copy survives a TamperError names the object.
  Bytes get(const Hash256& digest) const;

  // get() for salted objects; strips the trailing salt.
  Bytes get_salted(const Hash256& digest) const;

  std::set<NodeId> providers(const Hash256& digest) const;

  std::vector<NodeId> node_ids() const;
  size_t node_count() const;
  const DhtRecords& dht() const { return dht_; }

  // Node identity fields, for verification on connection.
  struct NodeInfo {
    Bytes pub;
    uint64_t pow_nonce = 0;
    Hash256 pow_tag{};
  };
  std::optional<NodeInfo> node_info(const NodeId& id) const;
  static bool verify_identity(const NodeId& id, const NodeInfo& info, uint32_t difficulty);

  // Fault-injection hooks for integrity tests: XOR one byte of a stored
  // replica / inline copy. Returns false when the target is absent.
  bool corrupt_replica(const NodeId& node, const Hash256& digest, size_t byte_offset);
  bool corrupt_inline(const Hash256& digest, size_t byte_offset);

  // Whole-store snapshot as a JSON document (digests in lowercase hex);
  // import rebuilds an identical store, for test fixtures and audits.
  nlohmann::json export_json() const;
  static std::unique_ptr<Network> import_json(const nlohmann::json& doc);

 private:
  struct StorageNode {
    NodeInfo info;
    std::map<Hash256, Bytes> objects;  // digest -> serialized object
  };

  void store_object(const CasObject& obj, size_t replication);
  std::optional<Bytes> fetch_verified(const Hash256& digest, bool& saw_corrupt) const;
  Bytes assemble(const Hash256& digest, size_t depth) const;

  NetworkConfig config_;
  std::map<NodeId, StorageNode> nodes_;
  DhtRecords dht_;
  mutable std::mutex write_mu_;
};

}  // namespace medshare::cas
