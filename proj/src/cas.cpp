#include "medshare/cas.hpp"

#include "medshare/crypto.hpp"
#include "medshare/serial.hpp"

namespace medshare::cas {

namespace {
constexpr uint8_t kObjectVersion = 0x01;

uint32_t leading_zero_bits(const Hash256& h) {
  uint32_t bits = 0;
  for (uint8_t byte : h) {
    if (byte == 0) {
      bits += 8;
      continue;
    }
    for (int i = 7; i >= 0; --i) {
      if (byte & (1u << i)) return bits;
      ++bits;
    }
  }
  return bits;
}
}  // namespace

Bytes CasObject::serialize() const {
  serial::Writer w;
  w.u8(kObjectVersion);
  w.u32(static_cast<uint32_t>(links.size()));
  for (const auto& l : links) w.fixed(l);
  w.raw(content);
  return w.take();
}

CasObject CasObject::deserialize(ByteView data) {
  serial::Reader r(data);
  if (r.u8() != kObjectVersion) throw serial::DecodeError("cas object: unknown version");
  uint32_t count = r.u32();
  CasObject obj;
  obj.links.reserve(count);
  for (uint32_t i = 0; i < count; ++i) obj.links.push_back(r.fixed<32>());
  obj.content = r.raw(r.remaining());
  return obj;
}

std::vector<CasObject> chunk(ByteView data, size_t chunk_size) {
  if (chunk_size < 1) throw std::invalid_argument("chunk: chunk size must be >= 1");
  std::vector<CasObject> objects;
  size_t n_leaves = data.empty() ? 1 : (data.size() + chunk_size - 1) / chunk_size;
  if (n_leaves == 1) {
    objects.push_back(CasObject{Bytes(data.begin(), data.end()), {}});
    return objects;  // single leaf doubles as the root
  }
  CasObject root;
  for (size_t i = 0; i < n_leaves; ++i) {
    size_t off = i * chunk_size;
    size_t len = std::min(chunk_size, data.size() - off);
    CasObject leaf{Bytes(data.begin() + off, data.begin() + off + len), {}};
    root.links.push_back(leaf.digest());
    objects.push_back(std::move(leaf));
  }
  objects.push_back(std::move(root));
  return objects;
}

Network::Network(NetworkConfig config) : config_(config) {}

NodeId Network::add_node(Rng& rng) {
  std::lock_guard lock(write_mu_);
  auto kp = crypto::keypair_generate(rng);
  NodeInfo info;
  info.pub = kp.pub;
  // identity PoW: grind a nonce until the tag clears the difficulty bar
  for (uint64_t nonce = 0;; ++nonce) {
    Bytes material = info.pub;
    for (int i = 0; i < 8; ++i) material.push_back(static_cast<uint8_t>(nonce >> (8 * i)));
    Hash256 tag = sha256(material);
    if (leading_zero_bits(tag) >= config_.pow_difficulty) {
      info.pow_nonce = nonce;
      info.pow_tag = tag;
      break;
    }
  }
  NodeId id{sha256(info.pub)};
  nodes_[id] = StorageNode{std::move(info), {}};
  return id;
}

bool Network::verify_identity(const NodeId& id, const NodeInfo& info, uint32_t difficulty) {
  if (sha256(info.pub) != id.id) return false;
  Bytes material = info.pub;
  for (int i = 0; i < 8; ++i) material.push_back(static_cast<uint8_t>(info.pow_nonce >> (8 * i)));
  Hash256 tag = sha256(material);
  return tag == info.pow_tag && leading_zero_bits(tag) >= difficulty;
}

void Network::remove_node(const NodeId& id) {
  std::lock_guard lock(write_mu_);
  nodes_.erase(id);
  for (auto& [digest, set] : dht_.providers) set.erase(id);
}

void Network::store_object(const CasObject& obj, size_t replication) {
  Bytes serialized = obj.serialize();
  Hash256 digest = sha256(serialized);

  // deterministic placement: consecutive nodes in id order, start offset
  // derived from (digest, seed)
  std::vector<NodeId> ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, _] : nodes_) ids.push_back(id);
  Bytes pick_material(digest.begin(), digest.end());
  for (int i = 0; i < 8; ++i) pick_material.push_back(static_cast<uint8_t>(config_.seed >> (8 * i)));
  Hash256 pick = sha256(pick_material);
  uint64_t start = 0;
  for (int i = 0; i < 8; ++i) start = (start << 8) | pick[i];
  start %= ids.size();

  for (size_t i = 0; i < replication; ++i) {
    const NodeId& node = ids[(start + i) % ids.size()];
    nodes_[node].objects[digest] = serialized;  // idempotent: same digest, same bytes
    dht_.providers[digest].insert(node);
  }
  if (serialized.size() <= kInlineLimit) {
    dht_.small_values[digest] = serialized;
  }
}

Hash256 Network::put(ByteView data, size_t replication) {
  std::lock_guard lock(write_mu_);
  if (replication < 1) throw std::invalid_argument("put: replication must be >= 1");
  if (nodes_.size() < replication)
    throw std::invalid_argument("put: network has " + std::to_string(nodes_.size()) +
                                " nodes, need " + std::to_string(replication));
  auto objects = chunk(data, config_.chunk_size);
  for (const auto& obj : objects) store_object(obj, replication);
  return objects.back().digest();
}

Hash256 Network::put_salted(ByteView data, const std::array<uint8_t, kSaltLen>& salt,
                            size_t replication) {
  Bytes salted(data.begin(), data.end());
  append(salted, ByteView(salt.data(), salt.size()));
  return put(salted, replication);
}

std::optional<Bytes> Network::fetch_verified(const Hash256& digest, bool& saw_corrupt) const {
  auto inline_it = dht_.small_values.find(digest);
  if (inline_it != dht_.small_values.end()) {
    if (sha256(inline_it->second) == digest) return inline_it->second;
    saw_corrupt = true;
  }
  auto prov_it = dht_.providers.find(digest);
  if (prov_it != dht_.providers.end()) {
    for (const NodeId& node : prov_it->second) {
      auto node_it = nodes_.find(node);
      if (node_it == nodes_.end()) continue;
      auto obj_it = node_it->second.objects.find(digest);
      if (obj_it == node_it->second.objects.end()) continue;
      if (sha256(obj_it->second) == digest) return obj_it->second;
      saw_corrupt = true;  // replica failed verification; try the next one
    }
  }
  return std::nullopt;
}

Bytes Network::assemble(const Hash256& digest, size_t depth) const {
  if (depth > 16) throw NotFoundError("get: link depth exceeded");
  bool saw_corrupt = false;
  auto serialized = fetch_verified(digest, saw_corrupt);
  if (!serialized) {
    if (saw_corrupt)
      throw TamperError("get: all replicas of object " + hex_encode(digest) + " failed verification",
                        digest);
    throw NotFoundError("get: object " + hex_encode(digest) + " not found");
  }
  CasObject obj = CasObject::deserialize(*serialized);
  if (obj.links.empty()) return obj.content;
  Bytes out;
  for (const auto& link : obj.links) append(out, assemble(link, depth + 1));
  return out;
}

Bytes Network::get(const Hash256& digest) const { return assemble(digest, 0); }

Bytes Network::get_salted(const Hash256& digest) const {
  Bytes salted = get(digest);
  if (salted.size() < kSaltLen) throw NotFoundError("get: salted object shorter than its salt");
  salted.resize(salted.size() - kSaltLen);
  return salted;
}

std::set<NodeId> Network::providers(const Hash256& digest) const {
  auto it = dht_.providers.find(digest);
  if (it == dht_.providers.end()) return {};
  return it->second;
}

std::vector<NodeId> Network::node_ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  for (const auto& [id, _] : nodes_) out.push_back(id);
  return out;
}

size_t Network::node_count() const { return nodes_.size(); }

std::optional<Network::NodeInfo> Network::node_info(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) return std::nullopt;
  return it->second.info;
}

bool Network::corrupt_replica(const NodeId& node, const Hash256& digest, size_t byte_offset) {
  std::lock_guard lock(write_mu_);
  auto node_it = nodes_.find(node);
  if (node_it == nodes_.end()) return false;
  auto obj_it = node_it->second.objects.find(digest);
  if (obj_it == node_it->second.objects.end() || obj_it->second.empty()) return false;
  obj_it->second[byte_offset % obj_it->second.size()] ^= 0x01;
  return true;
}

bool Network::corrupt_inline(const Hash256& digest, size_t byte_offset) {
  std::lock_guard lock(write_mu_);
  auto it = dht_.small_values.find(digest);
  if (it == dht_.small_values.end() || it->second.empty()) return false;
  it->second[byte_offset % it->second.size()] ^= 0x01;
  return true;
}

nlohmann::json Network::export_json() const {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [id, node] : nodes_) {
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& [digest, bytes] : node.objects) objects[hex_encode(digest)] = hex_encode(bytes);
    nodes[hex_encode(id.id)] = {{"pub", hex_encode(node.info.pub)},
                                {"pow_nonce", node.info.pow_nonce},
                                {"pow_tag", hex_encode(node.info.pow_tag)},
                                {"objects", std::move(objects)}};
  }
  nlohmann::json providers = nlohmann::json::object();
  for (const auto& [digest, set] : dht_.providers) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& id : set) ids.push_back(hex_encode(id.id));
    providers[hex_encode(digest)] = std::move(ids);
  }
  nlohmann::json small = nlohmann::json::object();
  for (const auto& [digest, bytes] : dht_.small_values) small[hex_encode(digest)] = hex_encode(bytes);
  return {{"config",
           {{"seed", config_.seed},
            {"chunk_size", config_.chunk_size},
            {"pow_difficulty", config_.pow_difficulty}}},
          {"nodes", std::move(nodes)},
          {"dht", {{"providers", std::move(providers)}, {"small_values", std::move(small)}}}};
}

std::unique_ptr<Network> Network::import_json(const nlohmann::json& doc) {
  NetworkConfig config;
  const auto& c = doc.at("config");
  config.seed = c.at("seed").get<uint64_t>();
  config.chunk_size = c.at("chunk_size").get<size_t>();
  config.pow_difficulty = c.at("pow_difficulty").get<uint32_t>();
  auto network = std::make_unique<Network>(config);

  for (const auto& [id_hex, entry] : doc.at("nodes").items()) {
    NodeId id{hex_decode_fixed<32>(id_hex)};
    StorageNode node;
    node.info.pub = hex_decode(entry.at("pub").get<std::string>());
    node.info.pow_nonce = entry.at("pow_nonce").get<uint64_t>();
    node.info.pow_tag = hex_decode_fixed<32>(entry.at("pow_tag").get<std::string>());
    for (const auto& [digest_hex, bytes_hex] : entry.at("objects").items()) {
      node.objects[hex_decode_fixed<32>(digest_hex)] = hex_decode(bytes_hex.get<std::string>());
    }
    network->nodes_.emplace(id, std::move(node));
  }
  const auto& dht = doc.at("dht");
  for (const auto& [digest_hex, ids] : dht.at("providers").items()) {
    auto& set = network->dht_.providers[hex_decode_fixed<32>(digest_hex)];
    for (const auto& id_hex : ids) set.insert(NodeId{hex_decode_fixed<32>(id_hex.get<std::string>())});
  }
  for (const auto& [digest_hex, bytes_hex] : dht.at("small_values").items()) {
    network->dht_.small_values[hex_decode_fixed<32>(digest_hex)] =
        hex_decode(bytes_hex.get<std::string>());
  }
  return network;
}

}  // namespace medshare::cas
