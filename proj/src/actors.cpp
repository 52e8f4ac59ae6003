#include "medshare/actors.hpp"

namespace medshare::actors {

using contracts::LevelLocations;

PrepareResult patient_prepare_record(PatientProfile& patient, ledger::Chain& chain,
                                     cas::Network& network, const crypto::AbePublicParams& pk,
                                     const Address& smr, Rng& rng, const PrepareOptions& options) {
  const size_t k = patient.structure.k();
  policy::validate_structure(patient.structure);
  if (patient.record.size() != k)
    throw ProtocolError("prepare: " + std::to_string(patient.record.size()) + " segments for " +
                        std::to_string(k) + " levels");
  for (size_t i = 0; i < k; ++i) {
    if (patient.record[i].empty())
      throw ProtocolError("prepare: segment " + std::to_string(i + 1) + " is empty");
  }

  crypto::SymKey sk1 = rng.fixed<32>();
  crypto::KeyChain keys = crypto::derive_key_chain(sk1, k);

  patient.er_salts.assign(k, Hash256{});
  patient.esk_salts.assign(k, Hash256{});
  std::vector<LevelLocations> locations(k);
  for (size_t i = 0; i < k; ++i) {
    Bytes er = crypto::sym_encrypt(keys.keys[i], patient.record[i], rng);
    patient.er_salts[i] = rng.fixed<32>();
    locations[i].er = network.put_salted(er, patient.er_salts[i], options.replication);

    crypto::AbeCiphertext esk = crypto::abe_encrypt(
        pk, ByteView(keys.keys[i].data(), keys.keys[i].size()), patient.structure.levels[i], rng);
    patient.esk_salts[i] = rng.fixed<32>();
    locations[i].esk = network.put_salted(esk.serialize(), patient.esk_salts[i], options.replication);
  }

  Bytes init = contracts::encode_avpa_init(smr, patient.structure, locations,
                                           options.validity_window, options.freshness_window);
  ledger::Receipt receipt = chain.deploy(contracts::kAvpaKind, init, patient.keypair.address,
                                         options.gas_limit);
  if (!receipt.ok())
    throw ProtocolError("prepare: AVPA deployment " + ledger::to_string(receipt.status) + ": " +
                        receipt.revert_reason);
  return PrepareResult{*receipt.deployed_address, std::move(locations), std::move(receipt)};
}

ledger::Receipt certifier_register(const CertifierProfile& certifier, ledger::Chain& chain,
                                   const Address& smr, const StaffProfile& staff,
                                   uint64_t gas_limit) {
  auto up_bound = chain.view(smr, "upBound", {}).get<uint32_t>();
  std::vector<policy::Attribute> attrs(staff.attrs.begin(), staff.attrs.end());
  Bytes args = contracts::encode_add_staff_member(staff.keypair.address, staff.keypair.pub,
                                                  staff.staff_id, attrs, up_bound);
  ledger::Transaction tx;
  tx.sender = certifier.keypair.address;
  tx.target = smr;
  tx.function = "addStaffMember";
  tx.args = std::move(args);
  tx.gas_limit = gas_limit;
  return chain.submit_tx(tx);
}

ledger::Receipt staff_renew_registration(const CertifierProfile& certifier, ledger::Chain& chain,
                                         const Address& smr, const StaffProfile& staff,
                                         uint64_t gas_limit) {
  return certifier_register(certifier, chain, smr, staff, gas_limit);
}

ledger::Receipt staff_request_access(const StaffProfile& staff, ledger::Chain& chain,
                                     const Address& avpa, uint64_t now, uint64_t gas_limit) {
  auto [msg, sig] = crypto::sign_timestamped(staff.keypair, staff.staff_id, now);
  ledger::Transaction tx;
  tx.sender = staff.keypair.address;
  tx.target = avpa;
  tx.function = "verifyRequest";
  tx.args = contracts::encode_verify_request(msg, sig);
  tx.gas_limit = gas_limit;
  return chain.submit_tx(tx);
}

GrantStats issuer_watch_and_grant(IssuerProfile& issuer, ledger::Chain& chain,
                                  cas::Network& network, const Address& smr, const Address& gk,
                                  Rng& rng, size_t replication, uint64_t gas_limit) {
  GrantStats stats;
  uint64_t head = chain.height();
  if (head <= issuer.cursor) return stats;

  ledger::EventFilter filter;
  filter.name = "LogAnnounce";
  filter.from_height = issuer.cursor + 1;
  filter.to_height = head;

  for (const ledger::Event& ev : chain.query_events(filter)) {
    Address staff = hex_decode_fixed<20>(ev.payload.at("signer"));

    nlohmann::json record = chain.view(smr, "getRecord", {{"address", hex_encode(staff)}});
    if (record.is_null()) {
      ++stats.skipped;  // registration vanished between announcement and grant
      continue;
    }
    Bytes staff_pub = hex_decode(record.at("pub").get<std::string>());

    // the announcement carries the verified attribute set (Verify 2 output)
    policy::AttributeSet attrs;
    const std::string& joined = ev.payload.at("attributes");
    size_t start = 0;
    while (start < joined.size()) {
      size_t comma = joined.find(',', start);
      if (comma == std::string::npos) comma = joined.size();
      attrs.insert(policy::Attribute::canonicalize(joined.substr(start, comma - start)));
      start = comma + 1;
    }
    if (attrs.empty()) {
      ++stats.skipped;
      continue;
    }

    crypto::AbeSecretKey sk = crypto::abe_keygen(issuer.master, attrs);
    Bytes esk = crypto::asym_encrypt(staff_pub, sk.serialize(), rng);
    Hash256 salt = rng.fixed<32>();
    Hash256 location = network.put_salted(esk, salt, replication);

    ledger::Transaction tx;
    tx.sender = issuer.keypair.address;
    tx.target = gk;
    tx.function = "addKey";
    tx.args = contracts::encode_add_key(staff, location);
    tx.gas_limit = gas_limit;
    ledger::Receipt receipt = chain.submit_tx(tx);
    if (!receipt.ok())
      throw ProtocolError("grant: addKey " + ledger::to_string(receipt.status) + ": " +
                          receipt.revert_reason);
    ++stats.granted;
  }
  issuer.cursor = head;
  return stats;
}

crypto::AbeSecretKey staff_fetch_key(const StaffProfile& staff, const ledger::Chain& chain,
                                     const cas::Network& network) {
  ledger::EventFilter filter;
  filter.name = "LogKeys";
  std::optional<Hash256> location;
  for (const ledger::Event& ev : chain.query_events(filter)) {
    if (ev.payload.at("staff") == hex_encode(staff.keypair.address))
      location = hex_decode_fixed<32>(ev.payload.at("location"));  // keep the latest
  }
  if (!location) throw ProtocolError("fetch key: no LogKeys event for this staff member");

  Bytes esk = network.get_salted(*location);
  Bytes sk_bytes = crypto::asym_decrypt(staff.keypair.pr, esk);
  return crypto::AbeSecretKey::deserialize(sk_bytes);
}

std::optional<size_t> announced_level(const ledger::Chain& chain, const Address& avpa,
                                      const Address& staff) {
  ledger::EventFilter filter;
  filter.contract = avpa;
  filter.name = "LogAnnounce";
  std::optional<size_t> level;
  for (const ledger::Event& ev : chain.query_events(filter)) {
    if (ev.payload.at("signer") == hex_encode(staff))
      level = static_cast<size_t>(std::stoull(ev.payload.at("level")));
  }
  return level;
}

FetchResult staff_fetch_record(const StaffProfile& staff, const crypto::AbeSecretKey& sk,
                               const ledger::Chain& chain, const cas::Network& network,
                               const Address& avpa) {
  auto level = announced_level(chain, avpa, staff.keypair.address);
  if (!level) throw ProtocolError("fetch record: no access announcement for this staff member");

  nlohmann::json locations = chain.view(avpa, "getLocations", {});
  const size_t k = locations.size();
  if (*level < 1 || *level > k) throw ProtocolError("fetch record: announced level out of range");

  Hash256 esk_digest = hex_decode_fixed<32>(locations[*level - 1].at("esk").get<std::string>());
  Bytes esk_bytes = network.get_salted(esk_digest);
  crypto::AbeCiphertext ct = crypto::AbeCiphertext::deserialize(esk_bytes);

  Bytes level_key = crypto::abe_decrypt(ct, sk);
  if (level_key.size() != 32) throw ProtocolError("fetch record: level key has wrong length");
  crypto::SymKey sk_i{};
  std::copy(level_key.begin(), level_key.end(), sk_i.begin());

  // sk_i unlocks levels level..k via the hash chain; nothing above it
  crypto::KeyChain tail = crypto::derive_key_chain(sk_i, k - *level + 1);

  FetchResult result;
  result.level = *level;
  for (size_t j = *level; j <= k; ++j) {
    Hash256 er_digest = hex_decode_fixed<32>(locations[j - 1].at("er").get<std::string>());
    Bytes er = network.get_salted(er_digest);
    try {
      result.segments[j] = crypto::sym_decrypt(tail.keys[j - *level], er);
    } catch (const crypto::AuthenticationError&) {
      result.failed.push_back(j);
    }
  }
  return result;
}

}  // namespace medshare::actors
