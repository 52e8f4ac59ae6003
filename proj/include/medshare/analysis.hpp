#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "medshare/ledger.hpp"
#include "medshare/policy.hpp"

namespace medshare::analysis {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact rational from a decimal string ("0.1" -> 1/10). Throws
// std::invalid_argument on malformed input.
Rational parse_decimal(const std::string& text);

// Confirmation-race model: the key-issuer waits for n honest blocks; the
// attacker (power fraction q, honest power p = 1 - q) secretly mines and
// then races to catch up.
struct RaceParams {
  Rational q;
  uint32_t n = 1;

  void validate() const;  // 0 <= q <= 1, n >= 1
};

BigInt binomial(uint64_t top, uint64_t bottom);

// Negative-binomial mass: probability the attacker has mined exactly m
// blocks when the honest chain reaches n. Exact rational arithmetic.
Rational attacker_block_probability(const RaceParams& params, uint64_t m);

// Probability the attacker eventually overtakes after n confirmations:
// 1 when q >= p, otherwise
//   1 - sum_{m=0}^{n-1} C(m+n-1, m) (p^n q^m - p^m q^n),
// clamped to [0, 1]. Exact rational arithmetic throughout; convert to
// floating point only at output.
Rational replay_success_probability(const RaceParams& params);

struct RaceSimResult {
  uint64_t wins = 0;
  uint64_t trials = 0;
  double probability = 0.0;
};

// Monte-Carlo realization of the binomial random walk: per trial the honest
// chain grows to n while the attacker mines m, then the walk continues until
// the attacker draws level (win) or falls kAbsorptionCap behind (loss).
// Per-trial sub-streams make the result independent of evaluation order.
inline constexpr int kAbsorptionCap = 64;  // truncation error bounded by (q/p)^64
RaceSimResult race_simulate(const RaceParams& params, uint64_t trials, uint64_t seed);

struct DdosParams {
  double max_tran = 0;      // per-node request capacity
  double request_rate = 0;  // attacker request volume
  uint32_t replication = 1; // providers holding the target data
  double t_attack = 0;
  double t_scheme = 0;

  void validate() const;  // all positive
};

struct DdosVerdict {
  bool overload = false;       // request_rate > max_tran * replication
  bool within_window = false;  // t_attack < t_scheme
  bool feasible = false;       // both
};

DdosVerdict ddos_feasible(const DdosParams& params);

// ---------------------------------------------------------------------------
// cost-trend report
// ---------------------------------------------------------------------------

struct SweepParams {
  std::vector<uint32_t> hierarchy_depths = {5, 10};       // k
  std::vector<uint32_t> attribute_totals = {25, 50, 100}; // N across the structure
  std::vector<uint32_t> up_bounds = {10, 20, 30, 40, 50};
};

struct CostRow {
  std::string operation;
  std::string params;
  uint64_t gas_used = 0;
};

// AND-of-fresh-attributes policy per level, attribute counts as uniform as
// N/k allows. Level i attributes are disjoint from level j's, so a staff
// member holding exactly T_i's attributes classifies to level i.
policy::PrivilegeStructure uniform_structure(uint32_t k, uint32_t total_attrs);

// Deploys and exercises the three contracts across the sweep on fresh chains
// and reports gas per operation: SMR/AVPA/GK deployment over (k, N),
// verifyRequest for level-1 and level-k callers, addStaffMember and addKey
// over upBound.
std::vector<CostRow> cost_report(const ledger::GasTable& gas, const SweepParams& sweep = {});

std::string cost_report_csv(const std::vector<CostRow>& rows);

}  // namespace medshare::analysis
