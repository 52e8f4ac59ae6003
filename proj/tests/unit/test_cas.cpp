#include "doctest.h"
#include "medshare/cas.hpp"
#include "support.hpp"

using namespace medshare;
using testsupport::Rng;

namespace {

std::unique_ptr<cas::Network> make_network(size_t nodes, Rng& rng, cas::NetworkConfig config = {}) {
  auto network = std::make_unique<cas::Network>(config);
  for (size_t i = 0; i < nodes; ++i) network->add_node(rng);
  return network;
}

}  // namespace

TEST_CASE("chunk: 600 KB with the default size yields 256/256/88 KB leaves") {
  Bytes data(600 * 1024, 0x5a);
  auto objects = cas::chunk(data);
  REQUIRE(objects.size() == 4);  // three leaves plus root
  CHECK(objects[0].content.size() == 256 * 1024);
  CHECK(objects[1].content.size() == 256 * 1024);
  CHECK(objects[2].content.size() == 88 * 1024);
  const auto& root = objects[3];
  CHECK(root.content.empty());
  REQUIRE(root.links.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(root.links[i] == objects[i].digest());
}

TEST_CASE("chunk: data within one chunk is a single unlinked object") {
  Bytes data(1000, 0x11);
  auto objects = cas::chunk(data);
  REQUIRE(objects.size() == 1);
  CHECK(objects[0].links.empty());
  CHECK(objects[0].content == data);
}

TEST_CASE("chunk: empty data becomes one empty leaf") {
  auto objects = cas::chunk({});
  REQUIRE(objects.size() == 1);
  CHECK(objects[0].content.empty());
  CHECK(objects[0].links.empty());
}

TEST_CASE("chunk is pure: identical input gives identical digests") {
  Bytes data(300000, 0x42);
  auto a = cas::chunk(data);
  auto b = cas::chunk(data);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].digest() == b[i].digest());
  CHECK_THROWS_AS(cas::chunk(data, 0), std::invalid_argument);
}

TEST_CASE("put/get round trip reassembles leaves in link order") {
  Rng rng(1);
  cas::NetworkConfig config;
  config.chunk_size = 4096;
  auto network = make_network(4, rng, config);
  Bytes data = rng.bytes(3 * 4096 + 123);
  Hash256 root = network->put(data, 3);
  CHECK(network->get(root) == data);
}

TEST_CASE("put registers exactly `replication` providers") {
  Rng rng(2);
  auto network = make_network(5, rng);
  Bytes data = rng.bytes(5000);
  Hash256 root = network->put(data, 3);
  CHECK(network->providers(root).size() == 3);
  CHECK(network->providers(Hash256{}).empty());
}

TEST_CASE("put is content-addressed: repeat stores deduplicate") {
  Rng rng(3);
  auto network = make_network(3, rng);
  Bytes data = rng.bytes(2000);
  Hash256 a = network->put(data, 3);
  Hash256 b = network->put(data, 3);
  CHECK(a == b);
  CHECK(network->providers(a).size() == 3);
}

TEST_CASE("small values are stored inline on the DHT") {
  Rng rng(4);
  auto network = make_network(3, rng);
  Bytes small = rng.bytes(100);  // leaf object: well under 1 KB
  Hash256 digest = network->put(small, 3);
  CHECK(network->dht().small_values.contains(digest));
  CHECK(network->get(digest) == small);

  Bytes big = rng.bytes(300000);
  network->put(big, 3);
  // 256 KB leaves exceed the inline bound; only the root record is small
  auto leaves = cas::chunk(big);
  CHECK_FALSE(network->dht().small_values.contains(leaves[0].digest()));
}

TEST_CASE("put requires enough nodes for the replication factor") {
  Rng rng(5);
  auto network = make_network(2, rng);
  CHECK_THROWS_AS(network->put(Bytes{1, 2, 3}, 3), std::invalid_argument);
  CHECK_THROWS_AS(network->put(Bytes{1, 2, 3}, 0), std::invalid_argument);
}

TEST_CASE("salted put: distinct salts give distinct addresses") {
  Rng rng(6);
  auto network = make_network(3, rng);
  Bytes data = rng.bytes(500);
  auto s1 = rng.fixed<32>();
  auto s2 = rng.fixed<32>();
  Hash256 a1 = network->put_salted(data, s1, 3);
  Hash256 a2 = network->put_salted(data, s2, 3);
  CHECK(a1 != a2);
  // retrieval needs only the digest, not the salt
  CHECK(network->get_salted(a1) == data);
  CHECK(network->get_salted(a2) == data);
}

TEST_CASE("salted address never equals the plain content hash") {
  Rng rng(7);
  auto network = make_network(3, rng);
  Bytes data = rng.bytes(256);
  Hash256 plain = sha256(data);
  for (int i = 0; i < 1000; ++i) {
    auto salt = rng.fixed<32>();
    Bytes salted(data);
    append(salted, ByteView(salt.data(), 32));
    CHECK(sha256(salted) != plain);
  }
  // and the unsalted content hash is never registered in the DHT
  auto salt = rng.fixed<32>();
  network->put_salted(data, salt, 3);
  CHECK_FALSE(network->dht().providers.contains(plain));
  CHECK_FALSE(network->dht().small_values.contains(plain));
}

TEST_CASE("get: unknown digest raises not-found") {
  Rng rng(8);
  auto network = make_network(3, rng);
  Hash256 unknown{};
  unknown[0] = 0xff;
  CHECK_THROWS_AS(network->get(unknown), cas::NotFoundError);
}

TEST_CASE("a corrupted replica is skipped in favor of a clean one") {
  Rng rng(9);
  cas::NetworkConfig config;
  config.chunk_size = 2048;
  auto network = make_network(4, rng, config);
  Bytes data = rng.bytes(6000);
  Hash256 root = network->put(data, 3);

  auto leaves = cas::chunk(data, 2048);
  Hash256 leaf = leaves[0].digest();
  auto providers = network->providers(leaf);
  REQUIRE(providers.size() == 3);
  REQUIRE(network->corrupt_replica(*providers.begin(), leaf, 17));
  CHECK(network->get(root) == data);
}

TEST_CASE("corrupting every replica yields a tamper error naming the object") {
  Rng rng(10);
  cas::NetworkConfig config;
  config.chunk_size = 2048;
  auto network = make_network(4, rng, config);
  Bytes data = rng.bytes(6000);
  Hash256 root = network->put(data, 3);

  auto leaves = cas::chunk(data, 2048);
  Hash256 leaf = leaves[1].digest();
  for (const auto& node : network->providers(leaf)) {
    REQUIRE(network->corrupt_replica(node, leaf, 5));
  }
  try {
    network->get(root);
    FAIL("expected TamperError");
  } catch (const cas::TamperError& e) {
    CHECK(e.digest == leaf);
  }
}

TEST_CASE("a corrupted inline copy falls back to node replicas") {
  Rng rng(11);
  auto network = make_network(3, rng);
  Bytes data = rng.bytes(200);
  Hash256 digest = network->put(data, 3);
  REQUIRE(network->corrupt_inline(digest, 3));
  CHECK(network->get(digest) == data);
}

TEST_CASE("node identities hash the public key; PoW difficulty is honored") {
  Rng rng(12);
  cas::Network network;
  auto id = network.add_node(rng);
  auto info = network.node_info(id);
  REQUIRE(info.has_value());
  CHECK(sha256(info->pub) == id.id);
  CHECK(cas::Network::verify_identity(id, *info, 0));

  cas::NetworkConfig hard;
  hard.pow_difficulty = 8;
  cas::Network hard_network(hard);
  auto hard_id = hard_network.add_node(rng);
  auto hard_info = hard_network.node_info(hard_id);
  REQUIRE(hard_info.has_value());
  CHECK(hard_info->pow_tag[0] == 0);  // 8 leading zero bits
  CHECK(cas::Network::verify_identity(hard_id, *hard_info, 8));
  // a wrong tag fails verification
  auto bad = *hard_info;
  bad.pow_nonce += 1;
  CHECK_FALSE(cas::Network::verify_identity(hard_id, bad, 8));
}

TEST_CASE("node ids stay distinct over a collision scan") {
  Rng rng(13);
  cas::Network network;
  std::set<cas::NodeId> seen;
  for (int i = 0; i < 200; ++i) CHECK(seen.insert(network.add_node(rng)).second);
}

TEST_CASE("removing a node shrinks provider records") {
  Rng rng(14);
  auto network = make_network(4, rng);
  Bytes data = rng.bytes(4000);
  Hash256 root = network->put(data, 3);
  auto providers = network->providers(root);
  REQUIRE(providers.size() == 3);
  network->remove_node(*providers.begin());
  CHECK(network->providers(root).size() == 2);
  CHECK(network->get(root) == data);  // surviving replicas still serve
}

TEST_CASE("store export/import round-trips and keeps content retrievable") {
  Rng rng(16);
  cas::NetworkConfig config;
  config.seed = 3;
  config.chunk_size = 2048;
  auto network = make_network(3, rng, config);
  Bytes data = rng.bytes(5000);
  Hash256 root = network->put(data, 2);

  auto doc = network->export_json();
  auto restored = cas::Network::import_json(doc);
  CHECK(restored->get(root) == data);
  CHECK(restored->providers(root) == network->providers(root));
  CHECK(restored->export_json() == doc);
  // digests render as 64 lowercase hex chars in the document
  for (const auto& [digest, _] : doc.at("dht").at("providers").items()) {
    CHECK(digest.size() == 64);
    CHECK(digest.find_first_not_of("0123456789abcdef") == std::string::npos);
  }
}

TEST_CASE("link closure: every digest reachable from the root resolves") {
  Rng rng(15);
  cas::NetworkConfig config;
  config.chunk_size = 1024;
  auto network = make_network(3, rng, config);
  Bytes data = rng.bytes(10 * 1024 + 7);
  network->put(data, 2);

  for (const auto& obj : cas::chunk(data, 1024)) {
    CHECK_NOTHROW(network->get(obj.digest()));
  }
}
