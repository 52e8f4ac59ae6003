#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

#include "json.hpp"
#include "medshare/bytes.hpp"
#include "medshare/hash.hpp"
#include "medshare/serial.hpp"

namespace medshare::ledger {

// ---------------------------------------------------------------------------
// gas model
//
// cost = base + calldata bytes + storage slot writes + events + external
// calls + signature recovery + compute steps. Defaults follow public EVM fee
// schedules so the cost-trend properties mirror the reference measurements
// without claiming exact totals.
// ---------------------------------------------------------------------------
struct GasTable {
  uint64_t base_tx = 21000;
  uint64_t calldata_byte = 16;
  uint64_t storage_slot_write = 20000;
  uint64_t event_base = 375;
  uint64_t event_byte = 8;
  uint64_t external_call = 2600;
  uint64_t ecrecover = 3000;
  uint64_t compute_step = 50;

  static GasTable defaults() { return {}; }
  // Requires every category to be present. Throws std::invalid_argument
  // naming the missing or unknown entry.
  static GasTable from_map(const std::map<std::string, uint64_t>& m);
  std::map<std::string, uint64_t> to_map() const;
};

enum class TxStatus { Success, Reverted, OutOfGas };

std::string to_string(TxStatus s);

struct Event {
  Address contract{};
  std::string name;
  std::map<std::string, std::string> payload;
  uint64_t block_height = 0;
  uint32_t tx_index = 0;
};

struct Receipt {
  TxStatus status = TxStatus::Success;
  std::string revert_reason;
  uint64_t gas_used = 0;
  std::vector<Event> events;
  std::optional<Address> deployed_address;  // set on successful deployments

  bool ok() const { return status == TxStatus::Success; }
};

struct Transaction {
  Address sender{};
  std::optional<Address> target;  // nullopt marks a deployment
  std::string function;           // deployments: the contract kind name
  Bytes args;
  uint64_t gas_limit = 0;
  uint64_t gas_price = 1;

  Bytes serialize() const;
};

struct Block {
  uint64_t height = 0;
  Hash256 prev_hash{};
  std::vector<Transaction> txs;
  std::vector<Receipt> receipts;
  Hash256 hash{};

  // hash over (height, prev_hash, root of tx digests); recomputable from
  // contents
  Hash256 compute_hash() const;
};

// Raised by contract code to abort the transaction; the chain converts it
// into a Reverted receipt and rolls back all state.
class Revert : public std::runtime_error {
 public:
  explicit Revert(const std::string& reason) : std::runtime_error(reason) {}
};

namespace detail {
// Internal control flow for metered execution exceeding the gas limit.
struct OutOfGasSignal {};
}  // namespace detail

class GasMeter {
 public:
  GasMeter(const GasTable& table, uint64_t limit) : table_(table), limit_(limit) {}

  void charge(uint64_t amount) {
    used_ += amount;
    if (used_ > limit_) {
      used_ = limit_;
      throw detail::OutOfGasSignal{};
    }
  }
  void charge_calldata(size_t bytes) { charge(table_.calldata_byte * bytes); }
  void charge_storage_bytes(size_t bytes) {
    charge(table_.storage_slot_write * ((bytes + 31) / 32));
  }
  void charge_event(size_t payload_bytes) {
    charge(table_.event_base + table_.event_byte * payload_bytes);
  }
  void charge_external_call() { charge(table_.external_call); }
  void charge_ecrecover() { charge(table_.ecrecover); }
  void charge_compute(size_t steps) { charge(table_.compute_step * steps); }

  uint64_t used() const { return used_; }

 private:
  const GasTable& table_;
  uint64_t used_ = 0;
  uint64_t limit_;
};

class Chain;

// Execution context handed to contract code. Emitting events and reading
// other contracts route through here so gas is metered uniformly.
struct CallContext {
  CallContext(Chain& chain, GasMeter& gas) : chain(chain), gas(gas) {}

  Chain& chain;
  GasMeter& gas;
  Address sender{};
  Address self{};
  uint64_t now = 0;  // simulated clock: height of the block this tx lands in

  void emit(const std::string& name, std::map<std::string, std::string> payload);

  std::vector<Event> emitted;
};

// Contract state machines are native code registered per kind; dispatch is
// by function name over length-prefixed binary args.
class Contract {
 public:
  virtual ~Contract() = default;
  virtual std::string kind() const = 0;
  virtual void init(CallContext& ctx, serial::Reader& args) = 0;
  virtual void call(CallContext& ctx, const std::string& function, serial::Reader& args) = 0;
  // Gas-free read-only queries ("can be called by any user").
  virtual nlohmann::json view(const std::string& function, const nlohmann::json& args) const = 0;
  virtual std::unique_ptr<Contract> clone() const = 0;
  virtual nlohmann::json state_json() const = 0;
};

using ContractFactory = std::function<std::unique_ptr<Contract>()>;

struct ChainConfig {
  std::map<std::string, uint64_t> gas_costs = GasTable::defaults().to_map();
  std::vector<Address> accounts;
  uint64_t seed = 0;
};

struct EventFilter {
  std::optional<Address> contract;
  std::optional<std::string> name;
  std::optional<uint64_t> from_height;  // inclusive
  std::optional<uint64_t> to_height;    // inclusive
};

// Deterministic single-operator chain. Transactions execute eagerly under
// gas metering; mine_block seals everything submitted since the last block.
// A transaction that reverts or runs out of gas leaves all contract state
// and the replay registry exactly as before (full-state snapshot/rollback).
// All mutating calls are serialized through an internal mutex: the chain is
// a single-writer state machine.
class Chain {
 public:
  explicit Chain(ChainConfig config);

  // Registers a contract kind; SMR/AVPA/GK are pre-registered by the
  // contracts module hook.
  void register_kind(const std::string& kind, ContractFactory factory);

  Receipt submit_tx(const Transaction& tx);
  // Dry run against a state snapshot: returns gas_used, mutates nothing,
  // records nothing.
  uint64_t gas_estimate(const Transaction& tx);

  Block mine_block();

  std::vector<Event> query_events(const EventFilter& filter) const;

  // Convenience deploy wrapper; returns the receipt and, on success, the
  // contract address inside it.
  Receipt deploy(const std::string& kind, const Bytes& init_args, const Address& sender,
                 uint64_t gas_limit);

  uint64_t height() const;
  // Simulated clock, one tick per block: the height the next transaction
  // lands at.
  uint64_t now() const;

  const std::vector<Block>& blocks() const { return blocks_; }
  const GasTable& gas_table() const { return gas_; }

  bool account_exists(const Address& a) const { return accounts_.contains(a); }
  void add_account(const Address& a);

  const Contract* contract_at(const Address& a) const;
  nlohmann::json view(const Address& contract, const std::string& function,
                      const nlohmann::json& args) const;

  // Ledger-level registry of accepted timestamped signatures, shared by all
  // contracts so a signature can never be executed twice anywhere.
  bool replay_seen(const Hash256& key) const { return replay_registry_.contains(key); }
  void replay_record(const Hash256& key) { replay_registry_.insert(key); }

  // Contract state plus replay registry, in stable key order; used for
  // atomicity byte-comparison and embedded in the chain export.
  nlohmann::json state_json() const;
  nlohmann::json export_json() const;

 private:
  struct Snapshot {
    std::map<Address, std::unique_ptr<Contract>> contracts;
    std::set<Hash256> replay;
  };
  Snapshot snapshot() const;
  void restore(Snapshot&& snap);
  Receipt execute(const Transaction& tx);
  void validate_tx(const Transaction& tx) const;

  GasTable gas_;
  ChainConfig config_;
  std::map<std::string, ContractFactory> kinds_;
  std::map<Address, std::unique_ptr<Contract>> contracts_;
  std::set<Hash256> replay_registry_;
  std::map<Address, uint64_t> nonces_;
  std::set<Address> accounts_;
  std::vector<Block> blocks_;
  std::vector<Transaction> pending_txs_;
  std::vector<Receipt> pending_receipts_;
  mutable std::mutex write_mu_;
};

}  // namespace medshare::ledger
