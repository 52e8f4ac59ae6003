#pragma once

#include "medshare/crypto.hpp"
#include "medshare/ledger.hpp"
#include "medshare/policy.hpp"

namespace medshare::contracts {

// Contract kind names used in deployment transactions.
inline constexpr const char* kSmrKind = "SMR";
inline constexpr const char* kAvpaKind = "AVPA";
inline constexpr const char* kGkKind = "GK";

inline constexpr uint64_t kDefaultUpBound = 50;
inline constexpr uint64_t kDefaultValidityWindow = 10000;  // blocks between registration renewals
inline constexpr uint64_t kDefaultFreshnessWindow = 256;   // max age of a signature timestamp

// Attribute cells in the fixed-capacity registry array are 32 bytes:
// one length byte plus up to 31 bytes of canonical name.
inline constexpr size_t kAttributeCell = 32;
inline constexpr size_t kMaxAttributeName = kAttributeCell - 1;

struct LevelLocations {
  Hash256 esk{};  // ABE-encrypted level key
  Hash256 er{};   // symmetric-encrypted record segment
};

// Makes SMR/AVPA/GK deployable on the chain.
void register_standard_kinds(ledger::Chain& chain);

// ---------------------------------------------------------------------------
// calldata encoders (binary ABI: function name + length-prefixed args)
// ---------------------------------------------------------------------------

Bytes encode_smr_init(uint32_t up_bound, const std::vector<Address>& certifiers);

// The attribute array is fixed-capacity: exactly up_bound 32-byte cells go on
// the wire (used slots first, zero cells after), so calldata and storage
// costs scale with up_bound, not with the attribute count. Throws
// std::invalid_argument when attrs exceed up_bound or a name exceeds 31
// bytes.
Bytes encode_add_staff_member(const Address& staff, ByteView staff_pub, ByteView staff_id,
                              const std::vector<policy::Attribute>& attrs, uint32_t up_bound);

Bytes encode_avpa_init(const Address& smr, const policy::PrivilegeStructure& structure,
                       const std::vector<LevelLocations>& locations, uint64_t validity_window,
                       uint64_t freshness_window);

Bytes encode_verify_request(const Hash256& msg, const crypto::Signature& sig);

Bytes encode_gk_init(const std::vector<Address>& issuers);

Bytes encode_add_key(const Address& staff, const Hash256& location);

// ---------------------------------------------------------------------------
// contract implementations (exposed for metered cross-contract reads and
// direct state inspection in tests)
// ---------------------------------------------------------------------------

class SmrContract : public ledger::Contract {
 public:
  struct StaffRecord {
    Bytes staff_id;
    Bytes pub;  // registered so the key-issuer can address the staff member
    std::vector<policy::Attribute> attributes;
    uint64_t registered_at = 0;
  };

  std::string kind() const override { return kSmrKind; }
  void init(ledger::CallContext& ctx, serial::Reader& args) override;
  void call(ledger::CallContext& ctx, const std::string& function, serial::Reader& args) override;
  nlohmann::json view(const std::string& function, const nlohmann::json& args) const override;
  std::unique_ptr<ledger::Contract> clone() const override;
  nlohmann::json state_json() const override;

  uint32_t up_bound() const { return up_bound_; }
  const StaffRecord* find(const Address& staff) const;

 private:
  uint32_t up_bound_ = 0;
  std::set<Address> certifiers_;
  std::map<Address, StaffRecord> registry_;
};

class AvpaContract : public ledger::Contract {
 public:
  std::string kind() const override { return kAvpaKind; }
  void init(ledger::CallContext& ctx, serial::Reader& args) override;
  void call(ledger::CallContext& ctx, const std::string& function, serial::Reader& args) override;
  nlohmann::json view(const std::string& function, const nlohmann::json& args) const override;
  std::unique_ptr<ledger::Contract> clone() const override;
  nlohmann::json state_json() const override;

  const policy::PrivilegeStructure& structure() const { return structure_; }
  const std::vector<LevelLocations>& locations() const { return locations_; }

 private:
  void verify_request(ledger::CallContext& ctx, serial::Reader& args);

  Address smr_{};
  policy::PrivilegeStructure structure_;
  std::vector<LevelLocations> locations_;
  uint64_t validity_window_ = kDefaultValidityWindow;
  uint64_t freshness_window_ = kDefaultFreshnessWindow;
};

class GkContract : public ledger::Contract {
 public:
  std::string kind() const override { return kGkKind; }
  void init(ledger::CallContext& ctx, serial::Reader& args) override;
  void call(ledger::CallContext& ctx, const std::string& function, serial::Reader& args) override;
  nlohmann::json view(const std::string& function, const nlohmann::json& args) const override;
  std::unique_ptr<ledger::Contract> clone() const override;
  nlohmann::json state_json() const override;

 private:
  std::set<Address> issuers_;
};

// Replay-registry key for a (msg, sig) pair.
Hash256 replay_key(const Hash256& msg, const crypto::Signature& sig);

}  // namespace medshare::contracts
