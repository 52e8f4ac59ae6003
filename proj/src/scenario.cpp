#include "medshare/scenario.hpp"

#include <fstream>

namespace medshare::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config loading
// ---------------------------------------------------------------------------

namespace {

Bytes load_segment(const json& entry, const fs::path& base_dir, std::vector<std::string>& problems,
                   size_t index) {
  std::string where = "segments[" + std::to_string(index) + "]";
  if (entry.is_object()) {
    if (entry.contains("text")) return to_bytes(entry.at("text").get<std::string>());
    if (entry.contains("hex")) {
      try {
        return hex_decode(entry.at("hex").get<std::string>());
      } catch (const std::invalid_argument& e) {
        problems.push_back(where + ": " + e.what());
        return {};
      }
    }
    if (entry.contains("file")) {
      fs::path p = base_dir / entry.at("file").get<std::string>();
      std::ifstream in(p, std::ios::binary);
      if (!in) {
        problems.push_back(where + ": cannot read file " + p.string());
        return {};
      }
      return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
  }
  problems.push_back(where + ": expected an object with \"text\", \"hex\" or \"file\"");
  return {};
}

}  // namespace

ScenarioConfig parse_config(const json& doc, const fs::path& base_dir) {
  std::vector<std::string> problems;
  ScenarioConfig config;
  if (!doc.is_object()) throw ConfigError({"top-level document must be a JSON object"});

  auto is_uint = [](const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<int64_t>() >= 0);
  };
  auto get_uint = [&](const char* key, auto& slot) {
    if (!doc.contains(key)) return;
    if (!is_uint(doc.at(key))) {
      problems.push_back(std::string(key) + ": expected a non-negative integer");
      return;
    }
    slot = doc.at(key).get<std::decay_t<decltype(slot)>>();
  };

  get_uint("seed", config.seed);
  get_uint("certifiers", config.certifiers);
  get_uint("issuers", config.issuers);
  get_uint("up_bound", config.up_bound);
  get_uint("validity_window", config.validity_window);
  get_uint("freshness_window", config.freshness_window);
  get_uint("nodes", config.nodes);
  get_uint("replication", config.replication);
  get_uint("chunk_size", config.chunk_size);
  get_uint("kappa", config.kappa);

  if (doc.contains("gas_costs")) {
    if (!doc.at("gas_costs").is_object()) {
      problems.push_back("gas_costs: expected an object of cost overrides");
    } else {
      for (const auto& [key, value] : doc.at("gas_costs").items()) {
        if (!is_uint(value)) {
          problems.push_back("gas_costs." + key + ": expected a non-negative integer");
        } else {
          config.gas_cost_overrides[key] = value.get<uint64_t>();
        }
      }
    }
  }

  if (doc.contains("structure") && doc.at("structure").is_array()) {
    for (const auto& level : doc.at("structure")) {
      if (level.is_string()) {
        config.structure.push_back(level.get<std::string>());
      } else {
        problems.push_back("structure: every level must be a policy string");
      }
    }
  } else {
    problems.push_back("structure: required array of policy strings");
  }

  if (doc.contains("segments") && doc.at("segments").is_array()) {
    size_t i = 0;
    for (const auto& entry : doc.at("segments")) {
      config.segments.push_back(load_segment(entry, base_dir, problems, i++));
    }
  } else {
    problems.push_back("segments: required array");
  }

  if (doc.contains("staff") && doc.at("staff").is_array()) {
    size_t i = 0;
    for (const auto& entry : doc.at("staff")) {
      std::string where = "staff[" + std::to_string(i++) + "]";
      StaffEntry staff;
      if (!entry.is_object() || !entry.contains("id") || !entry.at("id").is_string()) {
        problems.push_back(where + ": expected {\"id\", \"attributes\"}");
        continue;
      }
      staff.id = entry.at("id").get<std::string>();
      if (entry.contains("attributes") && entry.at("attributes").is_array()) {
        for (const auto& a : entry.at("attributes")) {
          if (a.is_string()) {
            staff.attributes.push_back(a.get<std::string>());
          } else {
            problems.push_back(where + ".attributes: expected strings");
          }
        }
      } else {
        problems.push_back(where + ": missing attributes array");
      }
      config.staff.push_back(std::move(staff));
    }
  } else {
    problems.push_back("staff: required array");
  }

  if (doc.contains("sweep") && doc.at("sweep").is_object()) {
    const auto& sweep = doc.at("sweep");
    auto get_list = [&](const char* key, std::vector<uint32_t>& slot) {
      if (!sweep.contains(key)) return;
      slot.clear();
      for (const auto& v : sweep.at(key)) slot.push_back(v.get<uint32_t>());
    };
    get_list("k", config.sweep.hierarchy_depths);
    get_list("N", config.sweep.attribute_totals);
    get_list("up_bound", config.sweep.up_bounds);
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("JSON parse error: ") + e.what()});
  }
  return parse_config(doc, path.parent_path());
}

void validate_config(const ScenarioConfig& config) {
  std::vector<std::string> problems;

  if (config.structure.empty()) problems.push_back("structure: at least one level required");
  std::vector<policy::AccessPolicy> levels;
  for (size_t i = 0; i < config.structure.size(); ++i) {
    try {
      levels.push_back(policy::parse_policy(config.structure[i]));
    } catch (const std::invalid_argument& e) {
      problems.push_back("structure[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (levels.size() == config.structure.size() && !levels.empty()) {
    try {
      policy::validate_structure(policy::PrivilegeStructure{levels});
    } catch (const policy::StructureError& e) {
      problems.push_back(std::string("structure: ") + e.what());
    }
  }

  if (config.segments.size() != config.structure.size())
    problems.push_back("segments: count " + std::to_string(config.segments.size()) +
                       " does not match structure level count " +
                       std::to_string(config.structure.size()));
  for (size_t i = 0; i < config.segments.size(); ++i) {
    if (config.segments[i].empty())
      problems.push_back("segments[" + std::to_string(i) + "]: must be non-empty");
  }

  std::set<std::string> ids;
  for (size_t i = 0; i < config.staff.size(); ++i) {
    const auto& staff = config.staff[i];
    std::string where = "staff[" + std::to_string(i) + "]";
    if (staff.id.empty()) problems.push_back(where + ": empty id");
    if (!ids.insert(staff.id).second) problems.push_back(where + ": duplicate id '" + staff.id + "'");
    if (staff.attributes.empty()) problems.push_back(where + ": attribute set must be non-empty");
    if (staff.attributes.size() > config.up_bound)
      problems.push_back(where + ": " + std::to_string(staff.attributes.size()) +
                         " attributes exceed up_bound " + std::to_string(config.up_bound));
    for (const auto& raw : staff.attributes) {
      try {
        auto attr = policy::Attribute::canonicalize(raw);
        if (attr.name().size() > contracts::kMaxAttributeName)
          problems.push_back(where + ": attribute '" + raw + "' exceeds " +
                             std::to_string(contracts::kMaxAttributeName) + " bytes");
      } catch (const std::invalid_argument& e) {
        problems.push_back(where + ": " + e.what());
      }
    }
  }

  if (config.certifiers < 1) problems.push_back("certifiers: at least one required");
  if (config.issuers < 1) problems.push_back("issuers: at least one required");
  if (config.up_bound < 1) problems.push_back("up_bound: must be positive");
  if (config.validity_window < 1) problems.push_back("validity_window: must be positive");
  if (config.freshness_window < 1) problems.push_back("freshness_window: must be positive");
  if (config.replication < 1) problems.push_back("replication: must be positive");
  if (config.nodes < config.replication)
    problems.push_back("nodes: " + std::to_string(config.nodes) + " below replication " +
                       std::to_string(config.replication));
  if (config.chunk_size < 1) problems.push_back("chunk_size: must be positive");
  if (config.kappa != 128 && config.kappa != 256)
    problems.push_back("kappa: must be 128 or 256");

  try {
    auto merged = ledger::GasTable::defaults().to_map();
    for (const auto& [key, value] : config.gas_cost_overrides) merged[key] = value;
    ledger::GasTable::from_map(merged);
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("gas_costs: ") + e.what());
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

namespace {

struct Personas {
  actors::PatientProfile patient;
  std::vector<actors::CertifierProfile> certifiers;
  std::vector<actors::IssuerProfile> issuers;
  std::vector<actors::StaffProfile> staff;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const fs::path& out_dir) {
  validate_config(config);
  fs::create_directories(out_dir);

  size_t step_index = 0;
  std::string step_name;
  auto step = [&](const char* name) {
    ++step_index;
    step_name = name;
  };

  try {
    step("setup");
    Rng rng(config.seed);

    Personas personas;
    personas.patient.keypair = crypto::keypair_generate(rng);
    for (uint32_t i = 0; i < config.certifiers; ++i)
      personas.certifiers.push_back({crypto::keypair_generate(rng)});
    auto [abe_pk, abe_mk] = crypto::abe_setup(config.kappa, rng);
    for (uint32_t i = 0; i < config.issuers; ++i)
      personas.issuers.push_back({crypto::keypair_generate(rng), abe_pk, abe_mk, 0});
    for (const auto& entry : config.staff) {
      actors::StaffProfile staff;
      staff.keypair = crypto::keypair_generate(rng);
      staff.staff_id = to_bytes(entry.id);
      for (const auto& raw : entry.attributes)
        staff.attrs.insert(policy::Attribute::canonicalize(raw));
      personas.staff.push_back(std::move(staff));
    }

    personas.patient.structure.levels.clear();
    for (const auto& text : config.structure)
      personas.patient.structure.levels.push_back(policy::parse_policy(text));
    personas.patient.record = config.segments;

    cas::NetworkConfig net_config;
    net_config.seed = config.seed;
    net_config.chunk_size = config.chunk_size;
    cas::Network network(net_config);
    for (uint32_t i = 0; i < config.nodes; ++i) network.add_node(rng);

    ledger::ChainConfig chain_config;
    chain_config.seed = config.seed;
    chain_config.gas_costs = ledger::GasTable::defaults().to_map();
    for (const auto& [key, value] : config.gas_cost_overrides)
      chain_config.gas_costs[key] = value;
    chain_config.accounts.push_back(personas.patient.keypair.address);
    for (const auto& c : personas.certifiers) chain_config.accounts.push_back(c.keypair.address);
    for (const auto& i : personas.issuers) chain_config.accounts.push_back(i.keypair.address);
    for (const auto& s : personas.staff) chain_config.accounts.push_back(s.keypair.address);
    ledger::Chain chain(chain_config);
    contracts::register_standard_kinds(chain);

    step("deploy-global-contracts");
    std::vector<Address> certifier_addresses;
    for (const auto& c : personas.certifiers) certifier_addresses.push_back(c.keypair.address);
    std::vector<Address> issuer_addresses;
    for (const auto& i : personas.issuers) issuer_addresses.push_back(i.keypair.address);

    auto smr_receipt = chain.deploy(contracts::kSmrKind,
                                    contracts::encode_smr_init(config.up_bound, certifier_addresses),
                                    personas.certifiers[0].keypair.address, 50'000'000);
    if (!smr_receipt.ok()) throw actors::ProtocolError("SMR deploy: " + smr_receipt.revert_reason);
    Address smr = *smr_receipt.deployed_address;

    auto gk_receipt = chain.deploy(contracts::kGkKind, contracts::encode_gk_init(issuer_addresses),
                                   personas.issuers[0].keypair.address, 50'000'000);
    if (!gk_receipt.ok()) throw actors::ProtocolError("GK deploy: " + gk_receipt.revert_reason);
    Address gk = *gk_receipt.deployed_address;
    chain.mine_block();

    step("prepare-record");
    actors::PrepareOptions prepare_options;
    prepare_options.validity_window = config.validity_window;
    prepare_options.freshness_window = config.freshness_window;
    prepare_options.replication = config.replication;
    auto prepared = actors::patient_prepare_record(personas.patient, chain, network, abe_pk, smr,
                                                   rng, prepare_options);
    chain.mine_block();

    step("register-staff");
    for (const auto& staff : personas.staff) {
      auto receipt = actors::certifier_register(personas.certifiers[0], chain, smr, staff);
      if (!receipt.ok())
        throw actors::ProtocolError("registration of '" + to_string(staff.staff_id) +
                                    "' failed: " + receipt.revert_reason);
    }
    chain.mine_block();

    step("request-access");
    for (const auto& staff : personas.staff) {
      auto receipt = actors::staff_request_access(staff, chain, prepared.avpa, chain.now());
      if (!receipt.ok())
        throw actors::ProtocolError("request by '" + to_string(staff.staff_id) +
                                    "' failed: " + receipt.revert_reason);
    }
    chain.mine_block();

    step("grant-keys");
    actors::issuer_watch_and_grant(personas.issuers[0], chain, network, smr, gk, rng,
                                   config.replication);
    chain.mine_block();

    step("fetch-records");
    RunResult result;
    json manifest;
    json original = json::object();
    for (size_t i = 0; i < personas.patient.record.size(); ++i) {
      const Bytes& segment = personas.patient.record[i];
      original[std::to_string(i + 1)] = {
          {"sha256", hex_encode(sha256(segment))},
          {"bytes", segment.size()},
      };
    }
    manifest["original_segments"] = std::move(original);

    json staff_out = json::object();
    for (size_t i = 0; i < personas.staff.size(); ++i) {
      const auto& staff = personas.staff[i];
      const std::string& id = config.staff[i].id;
      auto level = actors::announced_level(chain, prepared.avpa, staff.keypair.address);
      result.grants[id] = level;
      json entry;
      entry["address"] = hex_encode(staff.keypair.address);
      if (!level) {
        entry["level"] = nullptr;
        staff_out[id] = std::move(entry);
        continue;
      }
      entry["level"] = *level;
      auto sk = actors::staff_fetch_key(staff, chain, network);
      auto fetched = actors::staff_fetch_record(staff, sk, chain, network, prepared.avpa);
      json segments = json::object();
      for (const auto& [lvl, bytes] : fetched.segments) {
        segments[std::to_string(lvl)] = {
            {"sha256", hex_encode(sha256(bytes))},
            {"bytes", bytes.size()},
            {"matches_original", bytes == personas.patient.record[lvl - 1]},
        };
      }
      entry["segments"] = std::move(segments);
      entry["failed_levels"] = fetched.failed;
      staff_out[id] = std::move(entry);
    }
    manifest["staff"] = std::move(staff_out);

    step("write-reports");
    json chain_export = chain.export_json();

    result.audit_path = out_dir / "audit.csv";
    result.manifest_path = out_dir / "manifest.json";
    result.gas_path = out_dir / "gas.csv";
    result.chain_path = out_dir / "chain.json";

    std::string audit = "height,tx_index,event,contract,fields\r\n";
    for (const auto& block : chain_export.at("blocks")) {
      for (const auto& tx : block.at("txs")) {
        for (const auto& ev : tx.at("receipt").at("events")) {
          std::string fields;
          for (const auto& [key, value] : ev.at("payload").items()) {
            if (!fields.empty()) fields += " ";
            fields += key + "=" + value.get<std::string>();
          }
          audit += std::to_string(ev.at("block_height").get<uint64_t>()) + "," +
                   std::to_string(ev.at("tx_index").get<uint32_t>()) + "," +
                   ev.at("name").get<std::string>() + "," +
                   ev.at("contract").get<std::string>() + "," + csv_quote(fields) + "\r\n";
        }
      }
    }
    write_file(result.audit_path, audit);

    std::string gas = "height,tx_index,sender,target,function,status,gas_used,reason\r\n";
    for (const auto& block : chain_export.at("blocks")) {
      size_t tx_index = 0;
      for (const auto& tx : block.at("txs")) {
        const auto& receipt = tx.at("receipt");
        std::string target = tx.at("target").is_null() ? "(deploy)" : tx.at("target").get<std::string>();
        std::string reason = receipt.contains("revert_reason")
                                 ? receipt.at("revert_reason").get<std::string>()
                                 : "";
        gas += std::to_string(block.at("height").get<uint64_t>()) + "," +
               std::to_string(tx_index++) + "," + tx.at("sender").get<std::string>() + "," +
               target + "," + tx.at("function").get<std::string>() + "," +
               receipt.at("status").get<std::string>() + "," +
               std::to_string(receipt.at("gas_used").get<uint64_t>()) + "," + csv_quote(reason) +
               "\r\n";
      }
    }
    write_file(result.gas_path, gas);

    write_file(result.manifest_path, manifest.dump(2) + "\n");
    write_file(result.chain_path, chain_export.dump(2) + "\n");
    return result;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RuntimeError(step_index, step_name, e.what());
  }
}

std::string audit_events_table(const json& chain_export, const std::optional<Address>& staff) {
  std::string filter_hex = staff ? hex_encode(*staff) : "";
  std::string out;
  out += "height  tx  event        contract                                  details\n";
  for (const auto& block : chain_export.at("blocks")) {
    for (const auto& tx : block.at("txs")) {
      for (const auto& ev : tx.at("receipt").at("events")) {
        const auto& payload = ev.at("payload");
        if (staff) {
          bool match = false;
          for (const auto& key : {"signer", "staff"}) {
            if (payload.contains(key) && payload.at(key).get<std::string>() == filter_hex)
              match = true;
          }
          if (!match) continue;
        }
        std::string details;
        for (const auto& [key, value] : payload.items()) {
          if (!details.empty()) details += " ";
          details += key + "=" + value.get<std::string>();
        }
        char line[64];
        std::snprintf(line, sizeof line, "%-7llu %-3u ",
                      static_cast<unsigned long long>(ev.at("block_height").get<uint64_t>()),
                      ev.at("tx_index").get<uint32_t>());
        out += line;
        std::string name = ev.at("name").get<std::string>();
        name.resize(12, ' ');
        out += name + " " + ev.at("contract").get<std::string>() + "  " + details + "\n";
      }
    }
  }
  return out;
}

}  // namespace medshare::scenario
