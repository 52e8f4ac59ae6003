#pragma once

#include "medshare/cas.hpp"
#include "medshare/contracts.hpp"
#include "medshare/crypto.hpp"
#include "medshare/ledger.hpp"

namespace medshare::actors {

// A protocol step could not complete (missing grant, failed decryption,
// rejected transaction).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct PatientProfile {
  crypto::KeyPair keypair;
  std::vector<Bytes> record;  // segments R_1..R_k, most sensitive first
  policy::PrivilegeStructure structure;
  // salts drawn during preparation, one per stored ciphertext
  std::vector<Hash256> er_salts;
  std::vector<Hash256> esk_salts;
};

struct StaffProfile {
  crypto::KeyPair keypair;
  Bytes staff_id;
  policy::AttributeSet attrs;
};

struct CertifierProfile {
  crypto::KeyPair keypair;
};

// Holds the ABE authority; watches the chain for access announcements.
struct IssuerProfile {
  crypto::KeyPair keypair;
  crypto::AbePublicParams params;
  crypto::AbeMasterKey master;
  uint64_t cursor = 0;  // height up to which announcements were processed
};

struct PrepareOptions {
  uint64_t validity_window = contracts::kDefaultValidityWindow;
  uint64_t freshness_window = contracts::kDefaultFreshnessWindow;
  size_t replication = 3;
  uint64_t gas_limit = 20'000'000;
};

struct PrepareResult {
  Address avpa{};
  std::vector<contracts::LevelLocations> locations;
  ledger::Receipt receipt;
};

// Events 1-2: draw sk_1, derive the hash chain, symmetric-encrypt each
// segment, ABE-encrypt each level key under its policy, store everything
// salted in the CAS, then deploy the AVPA contract carrying structure and
// locations. Ciphertexts already stored when a later step fails stay in the
// CAS (content-addressed garbage); the AVPA deployment is the commit point.
PrepareResult patient_prepare_record(PatientProfile& patient, ledger::Chain& chain,
                                     cas::Network& network, const crypto::AbePublicParams& pk,
                                     const Address& smr, Rng& rng, const PrepareOptions& options);

ledger::Receipt certifier_register(const CertifierProfile& certifier, ledger::Chain& chain,
                                   const Address& smr, const StaffProfile& staff,
                                   uint64_t gas_limit = 5'000'000);

// Renewal is a re-registration: same call path, fresh height (§ access
// revocation by registration expiry).
ledger::Receipt staff_renew_registration(const CertifierProfile& certifier, ledger::Chain& chain,
                                         const Address& smr, const StaffProfile& staff,
                                         uint64_t gas_limit = 5'000'000);

// Event 4: sign Hash(staffID || T) and submit verifyRequest.
ledger::Receipt staff_request_access(const StaffProfile& staff, ledger::Chain& chain,
                                     const Address& avpa, uint64_t now,
                                     uint64_t gas_limit = 1'000'000);

struct GrantStats {
  size_t granted = 0;
  size_t skipped = 0;  // announcements whose staff pub could not be resolved
};

// Event 5: for every LogAnnounce sealed since the cursor, generate the
// attribute secret key, encrypt it to the staff public key registered in
// SMR, store it salted, and announce its location through GK.
GrantStats issuer_watch_and_grant(IssuerProfile& issuer, ledger::Chain& chain,
                                  cas::Network& network, const Address& smr, const Address& gk,
                                  Rng& rng, size_t replication = 3,
                                  uint64_t gas_limit = 1'000'000);

// Event 6: locate the LogKeys entry addressed to this staff member, fetch
// the encrypted key from the CAS and open it with the private key.
crypto::AbeSecretKey staff_fetch_key(const StaffProfile& staff, const ledger::Chain& chain,
                                     const cas::Network& network);

struct FetchResult {
  size_t level = 0;                 // announced access level
  std::map<size_t, Bytes> segments; // recovered plaintext, keyed by level
  std::vector<size_t> failed;       // levels whose AEAD opening failed
};

// Event 7: decrypt the level key via ABE, derive the chain tail, decrypt
// segments level..k. Lower-level segments are not touched: their keys are
// not derivable from the granted key.
FetchResult staff_fetch_record(const StaffProfile& staff, const crypto::AbeSecretKey& sk,
                               const ledger::Chain& chain, const cas::Network& network,
                               const Address& avpa);

// Latest announced level for this staff member on the given AVPA contract.
std::optional<size_t> announced_level(const ledger::Chain& chain, const Address& avpa,
                                      const Address& staff);

}  // namespace medshare::actors
