#include "doctest.h"
#include "medshare/actors.hpp"
#include "support.hpp"

using namespace medshare;
using namespace testsupport;
using actors::CertifierProfile;
using actors::IssuerProfile;
using actors::PatientProfile;
using actors::StaffProfile;

namespace {

// Whole-cast fixture around a k=3 structure.
struct World {
  explicit World(uint64_t validity_window = contracts::kDefaultValidityWindow) : rng(2718) {
    patient.keypair = crypto::keypair_generate(rng);
    certifier.keypair = crypto::keypair_generate(rng);
    auto [pk, mk] = crypto::abe_setup(256, rng);
    issuer = IssuerProfile{crypto::keypair_generate(rng), pk, mk, 0};

    patient.structure.levels = {policy::parse_policy("AND(doctor, cardiology)"),
                                policy::parse_policy("doctor"),
                                policy::parse_policy("OR(nurse, doctor)")};
    patient.record = {to_bytes("segment-1 most sensitive"), to_bytes("segment-2 moderate"),
                      to_bytes("segment-3 least sensitive")};

    cas::NetworkConfig net;
    net.seed = 7;
    network = std::make_unique<cas::Network>(net);
    for (int i = 0; i < 4; ++i) network->add_node(rng);

    std::vector<Address> accounts = {patient.keypair.address, certifier.keypair.address,
                                     issuer.keypair.address};
    for (const auto& spec : std::vector<std::pair<std::string, AttributeSet>>{
             {"ada", attrs({"doctor", "cardiology"})},
             {"ben", attrs({"doctor"})},
             {"cara", attrs({"nurse"})},
             {"dan", attrs({"janitor"})}}) {
      StaffProfile s;
      s.keypair = crypto::keypair_generate(rng);
      s.staff_id = to_bytes(spec.first);
      s.attrs = spec.second;
      accounts.push_back(s.keypair.address);
      staff.push_back(std::move(s));
    }
    chain = make_chain(accounts);

    auto smr_receipt = chain->deploy(contracts::kSmrKind,
                                     contracts::encode_smr_init(10, {certifier.keypair.address}),
                                     certifier.keypair.address, 10'000'000);
    REQUIRE(smr_receipt.ok());
    smr = *smr_receipt.deployed_address;
    auto gk_receipt =
        chain->deploy(contracts::kGkKind, contracts::encode_gk_init({issuer.keypair.address}),
                      issuer.keypair.address, 10'000'000);
    REQUIRE(gk_receipt.ok());
    gk = *gk_receipt.deployed_address;
    chain->mine_block();

    prepare_options.validity_window = validity_window;
    prepare_options.replication = 3;
  }

  Address prepare() {
    auto result = actors::patient_prepare_record(patient, *chain, *network, issuer.params, smr,
                                                 rng, prepare_options);
    avpa = result.avpa;
    locations = result.locations;
    chain->mine_block();
    return avpa;
  }

  void register_all() {
    for (const auto& s : staff) {
      REQUIRE(actors::certifier_register(certifier, *chain, smr, s).ok());
    }
    chain->mine_block();
  }

  void request_all() {
    for (const auto& s : staff) {
      REQUIRE(actors::staff_request_access(s, *chain, avpa, chain->now()).ok());
    }
    chain->mine_block();
  }

  Rng rng;
  PatientProfile patient;
  CertifierProfile certifier;
  IssuerProfile issuer;
  std::vector<StaffProfile> staff;  // ada L1, ben L2, cara L3, dan none
  std::unique_ptr<cas::Network> network;
  std::unique_ptr<ledger::Chain> chain;
  actors::PrepareOptions prepare_options;
  Address smr{}, gk{}, avpa{};
  std::vector<contracts::LevelLocations> locations;
};

}  // namespace

TEST_CASE("prepare: k digests of each kind, all resolvable, none equal to plaintext") {
  World w;
  w.prepare();
  REQUIRE(w.locations.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    Bytes er = w.network->get_salted(w.locations[i].er);
    Bytes esk = w.network->get_salted(w.locations[i].esk);
    CHECK(er != w.patient.record[i]);  // ciphertext, not plaintext
    CHECK_NOTHROW(crypto::AbeCiphertext::deserialize(esk));
  }
  // AVPA carries the same locations
  auto stored = w.chain->view(w.avpa, "getLocations", {});
  REQUIRE(stored.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(stored[i].at("er").get<std::string>() == hex_encode(w.locations[i].er));
    CHECK(stored[i].at("esk").get<std::string>() == hex_encode(w.locations[i].esk));
  }
}

TEST_CASE("prepare: segment count must match the structure") {
  World w;
  w.patient.record.pop_back();
  CHECK_THROWS_AS(w.prepare(), actors::ProtocolError);

  World v;
  v.patient.record[1].clear();
  CHECK_THROWS_AS(v.prepare(), actors::ProtocolError);
}

TEST_CASE("redeploying with a stricter policy leaves the old contract unchanged") {
  World w;
  Address first = w.prepare();
  auto first_structure = w.chain->view(first, "getStructure", {});

  w.patient.structure.levels[2] = policy::parse_policy("AND(nurse, cardiology)");
  Address second = w.prepare();
  CHECK(second != first);
  CHECK(w.chain->view(first, "getStructure", {}) == first_structure);
  CHECK(w.chain->view(second, "getStructure", {}) != first_structure);
}

TEST_CASE("request access: levels match the classify oracle; the unqualified get nothing") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();

  for (const auto& s : w.staff) {
    auto level = actors::announced_level(*w.chain, w.avpa, s.keypair.address);
    auto expected = policy::classify(w.patient.structure, s.attrs);
    CHECK(level == expected);
  }
}

TEST_CASE("request access: unregistered staff produce no announcement") {
  World w;
  w.prepare();
  auto receipt = actors::staff_request_access(w.staff[0], *w.chain, w.avpa, w.chain->now());
  CHECK(receipt.ok());
  w.chain->mine_block();
  CHECK_FALSE(actors::announced_level(*w.chain, w.avpa, w.staff[0].keypair.address).has_value());
}

TEST_CASE("issuer grants one key per announcement and is cursor-idempotent") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();

  auto stats = actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  w.chain->mine_block();
  CHECK(stats.granted == 3);  // ada, ben, cara; dan matched nothing
  CHECK(stats.skipped == 0);

  auto again = actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  CHECK(again.granted == 0);  // no new blocks since the cursor
}

TEST_CASE("fetched keys carry the announced attributes; only the owner can open them") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();
  actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  w.chain->mine_block();

  auto sk = actors::staff_fetch_key(w.staff[1], *w.chain, *w.network);  // ben
  CHECK(sk.attrs == w.staff[1].attrs);

  // another staff member fetching ben's blob cannot decrypt it
  ledger::EventFilter filter;
  filter.name = "LogKeys";
  std::optional<Hash256> bens_location;
  for (const auto& ev : w.chain->query_events(filter)) {
    if (ev.payload.at("staff") == hex_encode(w.staff[1].keypair.address))
      bens_location = hex_decode_fixed<32>(ev.payload.at("location"));
  }
  REQUIRE(bens_location.has_value());
  Bytes blob = w.network->get_salted(*bens_location);
  CHECK_THROWS_AS(crypto::asym_decrypt(w.staff[2].keypair.pr, blob), crypto::AuthenticationError);

  // dan has no grant at all
  CHECK_THROWS_AS(actors::staff_fetch_key(w.staff[3], *w.chain, *w.network), actors::ProtocolError);
}

TEST_CASE("level-2 staff recover exactly segments 2..3, byte-identical") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();
  actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  w.chain->mine_block();

  auto sk = actors::staff_fetch_key(w.staff[1], *w.chain, *w.network);  // ben, level 2
  auto fetched = actors::staff_fetch_record(w.staff[1], sk, *w.chain, *w.network, w.avpa);
  CHECK(fetched.level == 2);
  CHECK(fetched.failed.empty());
  REQUIRE(fetched.segments.size() == 2);
  CHECK(fetched.segments.at(2) == w.patient.record[1]);
  CHECK(fetched.segments.at(3) == w.patient.record[2]);
  CHECK_FALSE(fetched.segments.contains(1));

  // level-1 staff (ada) recovers everything
  auto sk_ada = actors::staff_fetch_key(w.staff[0], *w.chain, *w.network);
  auto all = actors::staff_fetch_record(w.staff[0], sk_ada, *w.chain, *w.network, w.avpa);
  CHECK(all.level == 1);
  REQUIRE(all.segments.size() == 3);
  for (size_t i = 1; i <= 3; ++i) CHECK(all.segments.at(i) == w.patient.record[i - 1]);
}

TEST_CASE("keys derived from sk_2 cannot open ER_1") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();
  actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  w.chain->mine_block();

  auto sk = actors::staff_fetch_key(w.staff[1], *w.chain, *w.network);
  Bytes esk2 = w.network->get_salted(w.locations[1].esk);
  Bytes sk2_bytes = crypto::abe_decrypt(crypto::AbeCiphertext::deserialize(esk2), sk);
  crypto::SymKey sk2{};
  std::copy(sk2_bytes.begin(), sk2_bytes.end(), sk2.begin());

  Bytes er1 = w.network->get_salted(w.locations[0].er);
  // walk the chain downward from sk_2 a few steps; none of it opens ER_1
  auto derived = crypto::derive_key_chain(sk2, 4);
  for (const auto& key : derived.keys) {
    CHECK_THROWS_AS(crypto::sym_decrypt(key, er1), crypto::AuthenticationError);
  }
}

TEST_CASE("expiry, renewal, and attribute reduction change outcomes as classified") {
  World w(/*validity_window=*/4);
  w.prepare();
  w.register_all();
  for (int i = 0; i < 6; ++i) w.chain->mine_block();

  // expired: request reverts
  auto& ben = w.staff[1];
  auto expired = actors::staff_request_access(ben, *w.chain, w.avpa, w.chain->now());
  CHECK(expired.status == ledger::TxStatus::Reverted);

  // renewal restores access at the classified level
  REQUIRE(actors::staff_renew_registration(w.certifier, *w.chain, w.smr, ben).ok());
  auto renewed = actors::staff_request_access(ben, *w.chain, w.avpa, w.chain->now());
  CHECK(renewed.ok());
  w.chain->mine_block();
  CHECK(actors::announced_level(*w.chain, w.avpa, ben.keypair.address) == 2);

  // renewal with reduced attributes reclassifies
  StaffProfile reduced = ben;
  reduced.attrs = attrs({"nurse"});
  REQUIRE(actors::staff_renew_registration(w.certifier, *w.chain, w.smr, reduced).ok());
  auto receipt = actors::staff_request_access(ben, *w.chain, w.avpa, w.chain->now());
  CHECK(receipt.ok());
  w.chain->mine_block();
  CHECK(actors::announced_level(*w.chain, w.avpa, ben.keypair.address) ==
        policy::classify(w.patient.structure, reduced.attrs));

  // renewal by a non-certifier is thrown out
  CertifierProfile impostor{crypto::keypair_generate(w.rng)};
  w.chain->add_account(impostor.keypair.address);
  CHECK(actors::staff_renew_registration(impostor, *w.chain, w.smr, ben).status ==
        ledger::TxStatus::Reverted);
}

static void check_level_isolation(size_t k, uint64_t seed) {
  Rng rng(seed);
  PatientProfile patient;
  patient.keypair = crypto::keypair_generate(rng);
  CertifierProfile certifier{crypto::keypair_generate(rng)};
  auto [pk, mk] = crypto::abe_setup(256, rng);
  IssuerProfile issuer{crypto::keypair_generate(rng), pk, mk, 0};

  std::vector<Address> accounts = {patient.keypair.address, certifier.keypair.address,
                                   issuer.keypair.address};
  std::vector<StaffProfile> staff;
  for (size_t i = 1; i <= k; ++i) {
    patient.structure.levels.push_back(policy::parse_policy("role" + std::to_string(i)));
    patient.record.push_back(to_bytes("segment payload " + std::to_string(i)));
    StaffProfile s;
    s.keypair = crypto::keypair_generate(rng);
    s.staff_id = to_bytes("staff" + std::to_string(i));
    s.attrs = attrs({"role" + std::to_string(i)});
    accounts.push_back(s.keypair.address);
    staff.push_back(std::move(s));
  }

  auto chain = make_chain(accounts);
  cas::Network network;
  for (int i = 0; i < 3; ++i) network.add_node(rng);

  auto smr = *chain->deploy(contracts::kSmrKind,
                            contracts::encode_smr_init(10, {certifier.keypair.address}),
                            certifier.keypair.address, 10'000'000)
                  .deployed_address;
  auto gk =
      *chain->deploy(contracts::kGkKind, contracts::encode_gk_init({issuer.keypair.address}),
                     issuer.keypair.address, 10'000'000)
           .deployed_address;
  chain->mine_block();

  actors::PrepareOptions options;
  auto prepared = actors::patient_prepare_record(patient, *chain, network, pk, smr, rng, options);
  chain->mine_block();
  for (const auto& s : staff) {
    REQUIRE(actors::certifier_register(certifier, *chain, smr, s).ok());
  }
  chain->mine_block();
  for (const auto& s : staff) {
    REQUIRE(actors::staff_request_access(s, *chain, prepared.avpa, chain->now()).ok());
  }
  chain->mine_block();
  actors::issuer_watch_and_grant(issuer, *chain, network, smr, gk, rng);
  chain->mine_block();

  for (size_t i = 1; i <= k; ++i) {
    const auto& s = staff[i - 1];
    auto sk = actors::staff_fetch_key(s, *chain, network);
    auto fetched = actors::staff_fetch_record(s, sk, *chain, network, prepared.avpa);
    CHECK(fetched.level == i);
    CHECK(fetched.failed.empty());
    REQUIRE(fetched.segments.size() == k - i + 1);
    for (size_t j = i; j <= k; ++j) {
      CHECK(fetched.segments.at(j) == patient.record[j - 1]);
    }
    for (size_t j = 1; j < i; ++j) CHECK_FALSE(fetched.segments.contains(j));
  }
}

TEST_CASE("level isolation holds for every hierarchy depth up to 5") {
  for (size_t k = 1; k <= 5; ++k) check_level_isolation(k, 550 + k);
}

TEST_CASE("audit trail: announcements equal the set of successful grants") {
  World w;
  w.prepare();
  w.register_all();
  w.request_all();
  actors::issuer_watch_and_grant(w.issuer, *w.chain, *w.network, w.smr, w.gk, w.rng);
  w.chain->mine_block();

  std::set<std::pair<std::string, std::string>> announced;
  ledger::EventFilter filter;
  filter.contract = w.avpa;
  filter.name = "LogAnnounce";
  for (const auto& ev : w.chain->query_events(filter)) {
    announced.insert({ev.payload.at("signer"), ev.payload.at("level")});
  }

  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& s : w.staff) {
    auto level = policy::classify(w.patient.structure, s.attrs);
    if (level) expected.insert({hex_encode(s.keypair.address), std::to_string(*level)});
  }
  CHECK(announced == expected);
}
