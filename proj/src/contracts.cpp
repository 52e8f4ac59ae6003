#include "medshare/contracts.hpp"

namespace medshare::contracts {

using ledger::CallContext;
using ledger::Revert;

namespace {

std::string join_attributes(const std::vector<policy::Attribute>& attrs) {
  std::string out;
  for (size_t i = 0; i < attrs.size(); ++i) {
    if (i) out += ",";
    out += attrs[i].name();
  }
  return out;
}

void write_attribute_cell(serial::Writer& w, const std::string& name) {
  if (name.size() > kMaxAttributeName)
    throw std::invalid_argument("attribute '" + name + "' exceeds " +
                                std::to_string(kMaxAttributeName) + " bytes");
  std::array<uint8_t, kAttributeCell> cell{};
  cell[0] = static_cast<uint8_t>(name.size());
  std::copy(name.begin(), name.end(), cell.begin() + 1);
  w.fixed(cell);
}

std::string read_attribute_cell(serial::Reader& r) {
  auto cell = r.fixed<kAttributeCell>();
  size_t len = cell[0];
  if (len > kMaxAttributeName) throw serial::DecodeError("attribute cell: bad length byte");
  return std::string(cell.begin() + 1, cell.begin() + 1 + len);
}

}  // namespace

Hash256 replay_key(const Hash256& msg, const crypto::Signature& sig) {
  Bytes material(msg.begin(), msg.end());
  append(material, sig.serialize());
  return tagged_hash("medshare.replay.v1", material);
}

// ---------------------------------------------------------------------------
// calldata encoders
// ---------------------------------------------------------------------------

Bytes encode_smr_init(uint32_t up_bound, const std::vector<Address>& certifiers) {
  serial::Writer w;
  w.u8(0x01);
  w.u32(up_bound);
  w.u32(static_cast<uint32_t>(certifiers.size()));
  for (const auto& c : certifiers) w.fixed(c);
  return w.take();
}

Bytes encode_add_staff_member(const Address& staff, ByteView staff_pub, ByteView staff_id,
                              const std::vector<policy::Attribute>& attrs, uint32_t up_bound) {
  if (attrs.size() > up_bound)
    throw std::invalid_argument("attribute list exceeds upBound " + std::to_string(up_bound));
  serial::Writer w;
  w.fixed(staff);
  w.blob(staff_pub);
  w.blob(staff_id);
  w.u32(static_cast<uint32_t>(attrs.size()));
  for (const auto& a : attrs) write_attribute_cell(w, a.name());
  for (size_t i = attrs.size(); i < up_bound; ++i) {
    std::array<uint8_t, kAttributeCell> zero{};
    w.fixed(zero);
  }
  return w.take();
}

Bytes encode_avpa_init(const Address& smr, const policy::PrivilegeStructure& structure,
                       const std::vector<LevelLocations>& locations, uint64_t validity_window,
                       uint64_t freshness_window) {
  serial::Writer w;
  w.u8(0x01);
  w.fixed(smr);
  w.blob(policy::encode_structure(structure));
  w.u32(static_cast<uint32_t>(locations.size()));
  for (const auto& loc : locations) {
    w.fixed(loc.esk);
    w.fixed(loc.er);
  }
  w.u64(validity_window);
  w.u64(freshness_window);
  return w.take();
}

Bytes encode_verify_request(const Hash256& msg, const crypto::Signature& sig) {
  serial::Writer w;
  w.fixed(msg);
  w.blob(sig.serialize());
  return w.take();
}

Bytes encode_gk_init(const std::vector<Address>& issuers) {
  serial::Writer w;
  w.u8(0x01);
  w.u32(static_cast<uint32_t>(issuers.size()));
  for (const auto& i : issuers) w.fixed(i);
  return w.take();
}

Bytes encode_add_key(const Address& staff, const Hash256& location) {
  serial::Writer w;
  w.fixed(staff);
  w.fixed(location);
  return w.take();
}

// ---------------------------------------------------------------------------
// SMR
// ---------------------------------------------------------------------------

void SmrContract::init(CallContext& ctx, serial::Reader& args) {
  if (args.u8() != 0x01) throw Revert("SMR: unknown init version");
  up_bound_ = args.u32();
  if (up_bound_ == 0) throw Revert("SMR: upBound must be positive");
  uint32_t count = args.u32();
  for (uint32_t i = 0; i < count; ++i) certifiers_.insert(args.fixed<20>());
  args.expect_end();
  if (certifiers_.empty()) throw Revert("SMR: certifier set is empty");
  // initial storage: certifier set + upBound word
  ctx.gas.charge_storage_bytes(20 * certifiers_.size() + 8);
}

void SmrContract::call(CallContext& ctx, const std::string& function, serial::Reader& args) {
  if (function != "addStaffMember") throw Revert("SMR: unknown function '" + function + "'");
  if (!certifiers_.contains(ctx.sender)) throw Revert("SMR: sender is not a certifier");

  Address staff = args.fixed<20>();
  Bytes pub = args.blob();
  Bytes staff_id = args.blob();
  uint32_t attr_count = args.u32();
  if (attr_count > up_bound_) throw Revert("SMR: attribute list exceeds upBound");

  StaffRecord record;
  record.staff_id = std::move(staff_id);
  record.pub = std::move(pub);
  for (uint32_t i = 0; i < up_bound_; ++i) {
    std::string name = read_attribute_cell(args);
    if (i < attr_count) {
      if (name.empty()) throw Revert("SMR: empty attribute cell inside declared count");
      record.attributes.push_back(policy::Attribute::canonicalize(name));
    } else if (!name.empty()) {
      throw Revert("SMR: non-empty attribute cell beyond declared count");
    }
  }
  args.expect_end();
  record.registered_at = ctx.now;

  // the whole fixed-capacity record is written: id + pub + upBound cells +
  // height word; renewal overwrites are allowed
  ctx.gas.charge_storage_bytes(record.staff_id.size() + record.pub.size() +
                               kAttributeCell * up_bound_ + 8);
  registry_[staff] = std::move(record);
}

const SmrContract::StaffRecord* SmrContract::find(const Address& staff) const {
  auto it = registry_.find(staff);
  return it == registry_.end() ? nullptr : &it->second;
}

nlohmann::json SmrContract::view(const std::string& function, const nlohmann::json& args) const {
  if (function == "getAttributes") {
    Address staff = hex_decode_fixed<20>(args.at("address").get<std::string>());
    nlohmann::json out = nlohmann::json::array();
    if (const StaffRecord* rec = find(staff)) {
      for (const auto& a : rec->attributes) out.push_back(a.name());
    }
    return out;  // unregistered address: empty array
  }
  if (function == "getRecord") {
    Address staff = hex_decode_fixed<20>(args.at("address").get<std::string>());
    const StaffRecord* rec = find(staff);
    if (!rec) return nullptr;
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : rec->attributes) attrs.push_back(a.name());
    return {{"staff_id", hex_encode(rec->staff_id)},
            {"pub", hex_encode(rec->pub)},
            {"attributes", std::move(attrs)},
            {"registered_at", rec->registered_at}};
  }
  if (function == "upBound") return up_bound_;
  throw std::invalid_argument("SMR: unknown view '" + function + "'");
}

std::unique_ptr<ledger::Contract> SmrContract::clone() const {
  return std::make_unique<SmrContract>(*this);
}

nlohmann::json SmrContract::state_json() const {
  nlohmann::json registry = nlohmann::json::object();
  for (const auto& [addr, rec] : registry_) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : rec.attributes) attrs.push_back(a.name());
    registry[hex_encode(addr)] = {{"staff_id", hex_encode(rec.staff_id)},
                                  {"pub", hex_encode(rec.pub)},
                                  {"attributes", std::move(attrs)},
                                  {"registered_at", rec.registered_at}};
  }
  nlohmann::json certifiers = nlohmann::json::array();
  for (const auto& c : certifiers_) certifiers.push_back(hex_encode(c));
  return {{"upBound", up_bound_}, {"certifiers", std::move(certifiers)}, {"registry", std::move(registry)}};
}

// ---------------------------------------------------------------------------
// AVPA
// ---------------------------------------------------------------------------

void AvpaContract::init(CallContext& ctx, serial::Reader& args) {
  if (args.u8() != 0x01) throw Revert("AVPA: unknown init version");
  smr_ = args.fixed<20>();
  Bytes structure_bytes = args.blob();
  try {
    structure_ = policy::decode_structure(structure_bytes);
    policy::validate_structure(structure_);
  } catch (const std::exception& e) {
    throw Revert(std::string("AVPA: invalid access structure: ") + e.what());
  }
  uint32_t k = args.u32();
  if (k != structure_.k()) throw Revert("AVPA: location count does not match level count");
  for (uint32_t i = 0; i < k; ++i) {
    LevelLocations loc;
    loc.esk = args.fixed<32>();
    loc.er = args.fixed<32>();
    locations_.push_back(loc);
  }
  validity_window_ = args.u64();
  freshness_window_ = args.u64();
  args.expect_end();
  if (validity_window_ == 0 || freshness_window_ == 0)
    throw Revert("AVPA: windows must be positive");
  // initial storage: SMR address + access structure + per-level digests +
  // the two windows
  ctx.gas.charge_storage_bytes(20 + structure_bytes.size() + 64 * locations_.size() + 16);
}

void AvpaContract::call(CallContext& ctx, const std::string& function, serial::Reader& args) {
  if (function != "verifyRequest") throw Revert("AVPA: unknown function '" + function + "'");
  verify_request(ctx, args);
}

void AvpaContract::verify_request(CallContext& ctx, serial::Reader& args) {
  Hash256 msg = args.fixed<32>();
  Bytes sig_bytes = args.blob();
  args.expect_end();
  crypto::Signature sig;
  try {
    sig = crypto::Signature::deserialize(sig_bytes);
  } catch (const crypto::MalformedInput& e) {
    throw Revert(std::string("AVPA: ") + e.what());
  }

  // Verify 1: the signature must recover to the transaction sender.
  ctx.gas.charge_ecrecover();
  Address signer;
  try {
    signer = crypto::recover(msg, sig);
  } catch (const crypto::RecoveryError& e) {
    throw Revert(std::string("AVPA: ") + e.what());
  }
  if (signer != ctx.sender) throw Revert("AVPA: signer does not match sender");

  // Replay protection: every accepted timestamped signature is recorded at
  // ledger level and never executed twice.
  Hash256 key = replay_key(msg, sig);
  if (ctx.chain.replay_seen(key)) throw Revert("AVPA: replayed signature");
  ctx.chain.replay_record(key);

  if (sig.timestamp > ctx.now) throw Revert("AVPA: signature timestamp in the future");
  if (ctx.now - sig.timestamp > freshness_window_)
    throw Revert("AVPA: signature timestamp outside freshness window");

  // Verify 2: fetch the registered attributes via an external SMR call.
  ctx.gas.charge_external_call();
  const auto* smr = dynamic_cast<const SmrContract*>(ctx.chain.contract_at(smr_));
  if (!smr) throw Revert("AVPA: SMR call failed");
  ctx.gas.charge_compute(smr->up_bound());  // fixed-capacity array scan
  const SmrContract::StaffRecord* record = smr->find(signer);

  policy::AttributeSet fetched;
  if (record) {
    if (ctx.now - record->registered_at > validity_window_)
      throw Revert("AVPA: registration expired, renewal required");
    fetched.insert(record->attributes.begin(), record->attributes.end());
  }

  // scan T_1..T_k, announce the first satisfied level and stop; an
  // unsatisfied scan succeeds with no event
  for (size_t i = 0; i < structure_.levels.size(); ++i) {
    size_t visited = 0;
    bool ok = policy::satisfy_counting(structure_.levels[i].root, fetched, visited);
    ctx.gas.charge_compute(visited);
    if (ok) {
      ctx.emit("LogAnnounce",
               {{"signer", hex_encode(signer)},
                {"attributes", record ? join_attributes(record->attributes) : ""},
                {"level", std::to_string(i + 1)}});
      break;
    }
  }
}

nlohmann::json AvpaContract::view(const std::string& function, const nlohmann::json&) const {
  if (function == "getStructure") {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& level : structure_.levels) out.push_back(policy::to_dsl(level.root));
    return out;
  }
  if (function == "getLocations") {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& loc : locations_) {
      out.push_back({{"esk", hex_encode(loc.esk)}, {"er", hex_encode(loc.er)}});
    }
    return out;
  }
  if (function == "smr") return hex_encode(smr_);
  if (function == "windows")
    return {{"validity", validity_window_}, {"freshness", freshness_window_}};
  throw std::invalid_argument("AVPA: unknown view '" + function + "'");
}

std::unique_ptr<ledger::Contract> AvpaContract::clone() const {
  return std::make_unique<AvpaContract>(*this);
}

nlohmann::json AvpaContract::state_json() const {
  nlohmann::json levels = nlohmann::json::array();
  for (size_t i = 0; i < structure_.levels.size(); ++i) {
    levels.push_back({{"policy", policy::to_dsl(structure_.levels[i].root)},
                      {"esk", hex_encode(locations_[i].esk)},
                      {"er", hex_encode(locations_[i].er)}});
  }
  return {{"smr", hex_encode(smr_)},
          {"levels", std::move(levels)},
          {"validity_window", validity_window_},
          {"freshness_window", freshness_window_}};
}

// ---------------------------------------------------------------------------
// GK
// ---------------------------------------------------------------------------

void GkContract::init(CallContext& ctx, serial::Reader& args) {
  if (args.u8() != 0x01) throw Revert("GK: unknown init version");
  uint32_t count = args.u32();
  for (uint32_t i = 0; i < count; ++i) issuers_.insert(args.fixed<20>());
  args.expect_end();
  if (issuers_.empty()) throw Revert("GK: issuer set is empty");
  ctx.gas.charge_storage_bytes(20 * issuers_.size());
}

void GkContract::call(CallContext& ctx, const std::string& function, serial::Reader& args) {
  if (function != "addKey") throw Revert("GK: unknown function '" + function + "'");
  if (!issuers_.contains(ctx.sender)) throw Revert("GK: sender is not an issuer");
  Address staff = args.fixed<20>();
  Hash256 location = args.fixed<32>();
  args.expect_end();
  // event only; the log is the shared state
  ctx.emit("LogKeys", {{"staff", hex_encode(staff)}, {"location", hex_encode(location)}});
}

nlohmann::json GkContract::view(const std::string& function, const nlohmann::json&) const {
  if (function == "issuers") {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& i : issuers_) out.push_back(hex_encode(i));
    return out;
  }
  throw std::invalid_argument("GK: unknown view '" + function + "'");
}

std::unique_ptr<ledger::Contract> GkContract::clone() const {
  return std::make_unique<GkContract>(*this);
}

nlohmann::json GkContract::state_json() const {
  nlohmann::json issuers = nlohmann::json::array();
  for (const auto& i : issuers_) issuers.push_back(hex_encode(i));
  return {{"issuers", std::move(issuers)}};
}

void register_standard_kinds(ledger::Chain& chain) {
  chain.register_kind(kSmrKind, [] { return std::make_unique<SmrContract>(); });
  chain.register_kind(kAvpaKind, [] { return std::make_unique<AvpaContract>(); });
  chain.register_kind(kGkKind, [] { return std::make_unique<GkContract>(); });
}

}  // namespace medshare::contracts
