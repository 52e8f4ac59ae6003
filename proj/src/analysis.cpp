#include "medshare/analysis.hpp"

#include "medshare/actors.hpp"
#include "medshare/contracts.hpp"
#include "medshare/rng.hpp"

namespace medshare::analysis {

Rational parse_decimal(const std::string& text) {
  size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  BigInt numerator = 0;
  BigInt denominator = 1;
  bool any_digit = false, seen_dot = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("decimal: repeated '.' in '" + text + "'");
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("decimal: bad character in '" + text + "'");
    numerator = numerator * 10 + (c - '0');
    if (seen_dot) denominator *= 10;
    any_digit = true;
  }
  if (!any_digit) throw std::invalid_argument("decimal: no digits in '" + text + "'");
  Rational r(numerator, denominator);
  return negative ? -r : r;
}

void RaceParams::validate() const {
  if (q < 0 || q > 1) throw std::invalid_argument("race: q must be within [0, 1]");
  if (n < 1) throw std::invalid_argument("race: n must be >= 1");
}

BigInt binomial(uint64_t top, uint64_t bottom) {
  if (bottom > top) return 0;
  bottom = std::min(bottom, top - bottom);
  BigInt result = 1;
  for (uint64_t i = 1; i <= bottom; ++i) {
    result *= top - bottom + i;
    result /= i;  // exact: result is always an integer here
  }
  return result;
}

namespace {

Rational rat_pow(const Rational& base, uint64_t exp) {
  Rational result = 1;
  Rational b = base;
  while (exp) {
    if (exp & 1) result *= b;
    b *= b;
    exp >>= 1;
  }
  return result;
}

}  // namespace

Rational attacker_block_probability(const RaceParams& params, uint64_t m) {
  params.validate();
  Rational p = Rational(1) - params.q;
  return Rational(binomial(m + params.n - 1, m)) * rat_pow(p, params.n) * rat_pow(params.q, m);
}

Rational replay_success_probability(const RaceParams& params) {
  params.validate();
  Rational p = Rational(1) - params.q;
  if (params.q >= p) return 1;  // attacker majority: always succeeds

  Rational sum = 0;
  for (uint64_t m = 0; m < params.n; ++m) {
    Rational coeff(binomial(m + params.n - 1, m));
    sum += coeff * (rat_pow(p, params.n) * rat_pow(params.q, m) -
                    rat_pow(p, m) * rat_pow(params.q, params.n));
  }
  Rational result = Rational(1) - sum;
  if (result < 0) return 0;
  if (result > 1) return 1;
  return result;
}

RaceSimResult race_simulate(const RaceParams& params, uint64_t trials, uint64_t seed) {
  params.validate();
  if (trials < 1) throw std::invalid_argument("race: trials must be >= 1");

  // attacker step iff draw < threshold; threshold = floor(q * 2^64)
  BigInt scaled = (boost::multiprecision::numerator(params.q) << 64) /
                  boost::multiprecision::denominator(params.q);
  bool attacker_always = scaled >= (BigInt(1) << 64);
  uint64_t threshold = static_cast<uint64_t>(scaled & ((BigInt(1) << 64) - 1));

  RaceSimResult result;
  result.trials = trials;
  for (uint64_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ull * (trial + 1)));
    auto attacker_step = [&] { return attacker_always || rng.next_u64() < threshold; };

    // phase 1: honest miners reach n while the attacker mines m
    uint32_t honest = 0;
    int64_t deficit = static_cast<int64_t>(params.n);
    while (honest < params.n) {
      if (attacker_step()) {
        --deficit;
      } else {
        ++honest;
      }
    }
    // phase 2: catch-up race to absorption
    while (deficit > 0 && deficit < kAbsorptionCap) {
      deficit += attacker_step() ? -1 : 1;
    }
    if (deficit <= 0) ++result.wins;
  }
  result.probability = static_cast<double>(result.wins) / static_cast<double>(trials);
  return result;
}

void DdosParams::validate() const {
  if (max_tran <= 0 || request_rate <= 0 || replication < 1 || t_attack <= 0 || t_scheme <= 0)
    throw std::invalid_argument("ddos: all parameters must be positive");
}

DdosVerdict ddos_feasible(const DdosParams& params) {
  params.validate();
  DdosVerdict v;
  v.overload = params.request_rate > params.max_tran * params.replication;
  v.within_window = params.t_attack < params.t_scheme;
  v.feasible = v.overload && v.within_window;
  return v;
}

// ---------------------------------------------------------------------------
// cost report
// ---------------------------------------------------------------------------

policy::PrivilegeStructure uniform_structure(uint32_t k, uint32_t total_attrs) {
  if (k < 1 || total_attrs < k)
    throw std::invalid_argument("structure sweep: need at least one attribute per level");
  policy::PrivilegeStructure s;
  uint32_t base = total_attrs / k, extra = total_attrs % k;
  uint32_t serial = 0;
  for (uint32_t level = 1; level <= k; ++level) {
    uint32_t count = base + (level <= extra ? 1 : 0);
    std::string dsl = "AND(";
    for (uint32_t a = 0; a < count; ++a) {
      if (a) dsl += ", ";
      dsl += "l" + std::to_string(level) + ".a" + std::to_string(++serial);
    }
    dsl += ")";
    if (count == 1) dsl = "l" + std::to_string(level) + ".a" + std::to_string(serial);
    s.levels.push_back(policy::parse_policy(dsl));
  }
  return s;
}

namespace {

using contracts::LevelLocations;

struct MiniChain {
  explicit MiniChain(const ledger::GasTable& gas, std::vector<Address> accounts) {
    ledger::ChainConfig config;
    config.gas_costs = gas.to_map();
    config.accounts = std::move(accounts);
    chain = std::make_unique<ledger::Chain>(config);
    contracts::register_standard_kinds(*chain);
  }
  std::unique_ptr<ledger::Chain> chain;
};

std::string kn_label(uint32_t k, uint32_t n) {
  return "k=" + std::to_string(k) + ",N=" + std::to_string(n);
}

const ledger::Receipt& require_ok(const ledger::Receipt& receipt, const std::string& what) {
  if (!receipt.ok())
    throw std::runtime_error("cost report: " + what + " " + ledger::to_string(receipt.status) +
                             ": " + receipt.revert_reason);
  return receipt;
}

}  // namespace

std::vector<CostRow> cost_report(const ledger::GasTable& gas, const SweepParams& sweep) {
  std::vector<CostRow> rows;
  Rng rng(0x636f7374u);  // fixed stream: the report is deterministic
  auto operator_kp = crypto::keypair_generate(rng);

  // contract deployments and verifyRequest across (k, N)
  for (uint32_t k : sweep.hierarchy_depths) {
    for (uint32_t n : sweep.attribute_totals) {
      if (n < k) continue;
      auto structure = uniform_structure(k, n);

      auto staff_l1 = crypto::keypair_generate(rng);
      auto staff_lk = crypto::keypair_generate(rng);
      MiniChain mini(gas, {operator_kp.address, staff_l1.address, staff_lk.address});
      ledger::Chain& chain = *mini.chain;

      auto smr_receipt = chain.deploy(
          contracts::kSmrKind,
          contracts::encode_smr_init(contracts::kDefaultUpBound, {operator_kp.address}),
          operator_kp.address, 50'000'000);
      require_ok(smr_receipt, "SMR deploy");
      rows.push_back({"SMR deploy", kn_label(k, n), smr_receipt.gas_used});

      std::vector<LevelLocations> locations(k);
      auto avpa_receipt = chain.deploy(
          contracts::kAvpaKind,
          contracts::encode_avpa_init(*smr_receipt.deployed_address, structure, locations,
                                      contracts::kDefaultValidityWindow,
                                      contracts::kDefaultFreshnessWindow),
          operator_kp.address, 200'000'000);
      require_ok(avpa_receipt, "AVPA deploy");
      rows.push_back({"AVPA deploy", kn_label(k, n), avpa_receipt.gas_used});

      auto gk_receipt = chain.deploy(contracts::kGkKind,
                                     contracts::encode_gk_init({operator_kp.address}),
                                     operator_kp.address, 50'000'000);
      require_ok(gk_receipt, "GK deploy");
      rows.push_back({"GK deploy", kn_label(k, n), gk_receipt.gas_used});
      chain.mine_block();

      // level-1 and level-k callers at the same (k, N)
      auto request_gas = [&](const crypto::KeyPair& kp, const policy::AccessPolicy& level_policy,
                             const Bytes& id) {
        actors::StaffProfile staff{kp, id, level_policy.leaf_attributes()};
        actors::CertifierProfile certifier{operator_kp};
        certifier_register(certifier, chain, *smr_receipt.deployed_address, staff);
        chain.mine_block();
        auto receipt = staff_request_access(staff, chain, *avpa_receipt.deployed_address,
                                            chain.now(), 50'000'000);
        chain.mine_block();
        if (!receipt.ok()) throw std::runtime_error("cost report: request failed: " + receipt.revert_reason);
        return receipt.gas_used;
      };
      rows.push_back({"verifyRequest", kn_label(k, n) + ",L=1",
                      request_gas(staff_l1, structure.levels.front(), to_bytes("staff-l1"))});
      rows.push_back({"verifyRequest", kn_label(k, n) + ",L=" + std::to_string(k),
                      request_gas(staff_lk, structure.levels.back(), to_bytes("staff-lk"))});
    }
  }

  // addStaffMember / addKey across upBound
  for (uint32_t up_bound : sweep.up_bounds) {
    auto staff_kp = crypto::keypair_generate(rng);
    MiniChain mini(gas, {operator_kp.address});
    ledger::Chain& chain = *mini.chain;

    auto smr_receipt = require_ok(
        chain.deploy(contracts::kSmrKind,
                     contracts::encode_smr_init(up_bound, {operator_kp.address}),
                     operator_kp.address, 50'000'000),
        "SMR deploy");
    auto gk_receipt = require_ok(chain.deploy(contracts::kGkKind,
                                              contracts::encode_gk_init({operator_kp.address}),
                                              operator_kp.address, 50'000'000),
                                 "GK deploy");
    chain.mine_block();

    std::vector<policy::Attribute> attrs = {policy::Attribute::canonicalize("doctor"),
                                            policy::Attribute::canonicalize("cardiology"),
                                            policy::Attribute::canonicalize("surgeon")};
    ledger::Transaction add_staff;
    add_staff.sender = operator_kp.address;
    add_staff.target = *smr_receipt.deployed_address;
    add_staff.function = "addStaffMember";
    add_staff.args = contracts::encode_add_staff_member(staff_kp.address, staff_kp.pub,
                                                        to_bytes("staff-1"), attrs, up_bound);
    add_staff.gas_limit = 50'000'000;
    auto add_receipt = require_ok(chain.submit_tx(add_staff), "addStaffMember");
    rows.push_back({"addStaffMember", "upBound=" + std::to_string(up_bound), add_receipt.gas_used});

    ledger::Transaction add_key;
    add_key.sender = operator_kp.address;
    add_key.target = *gk_receipt.deployed_address;
    add_key.function = "addKey";
    add_key.args = contracts::encode_add_key(staff_kp.address, Hash256{});
    add_key.gas_limit = 50'000'000;
    auto key_receipt = require_ok(chain.submit_tx(add_key), "addKey");
    rows.push_back({"addKey", "upBound=" + std::to_string(up_bound), key_receipt.gas_used});
    chain.mine_block();
  }
  return rows;
}

std::string cost_report_csv(const std::vector<CostRow>& rows) {
  std::string out = "operation,params,gas_used\r\n";
  for (const auto& row : rows) {
    out += row.operation + ",\"" + row.params + "\"," + std::to_string(row.gas_used) + "\r\n";
  }
  return out;
}

}  // namespace medshare::analysis
