#include "medshare/ledger.hpp"

namespace medshare::ledger {

// ---------------------------------------------------------------------------
// gas table
// ---------------------------------------------------------------------------

std::map<std::string, uint64_t> GasTable::to_map() const {
  return {
      {"base_tx", base_tx},
      {"calldata_byte", calldata_byte},
      {"storage_slot_write", storage_slot_write},
      {"event_base", event_base},
      {"event_byte", event_byte},
      {"external_call", external_call},
      {"ecrecover", ecrecover},
      {"compute_step", compute_step},
  };
}

GasTable GasTable::from_map(const std::map<std::string, uint64_t>& m) {
  GasTable t;
  std::map<std::string, uint64_t*> slots = {
      {"base_tx", &t.base_tx},
      {"calldata_byte", &t.calldata_byte},
      {"storage_slot_write", &t.storage_slot_write},
      {"event_base", &t.event_base},
      {"event_byte", &t.event_byte},
      {"external_call", &t.external_call},
      {"ecrecover", &t.ecrecover},
      {"compute_step", &t.compute_step},
  };
  for (const auto& [key, slot] : slots) {
    auto it = m.find(key);
    if (it == m.end()) throw std::invalid_argument("gas table: missing cost entry '" + key + "'");
    *slot = it->second;
  }
  for (const auto& [key, _] : m) {
    if (!slots.contains(key)) throw std::invalid_argument("gas table: unknown cost entry '" + key + "'");
  }
  return t;
}

std::string to_string(TxStatus s) {
  switch (s) {
    case TxStatus::Success:
      return "success";
    case TxStatus::Reverted:
      return "reverted";
    case TxStatus::OutOfGas:
      return "out_of_gas";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// transactions and blocks
// ---------------------------------------------------------------------------

Bytes Transaction::serialize() const {
  serial::Writer w;
  w.u8(0x01);
  w.fixed(sender);
  w.u8(target ? 1 : 0);
  if (target) w.fixed(*target);
  w.str(function);
  w.blob(args);
  w.u64(gas_limit);
  w.u64(gas_price);
  return w.take();
}

Hash256 Block::compute_hash() const {
  Bytes tx_digests;
  for (const auto& tx : txs) {
    Hash256 d = sha256(tx.serialize());
    append(tx_digests, ByteView(d.data(), d.size()));
  }
  Hash256 tx_root = sha256(tx_digests);
  serial::Writer w;
  w.u8(0x01);
  w.u64(height);
  w.fixed(prev_hash);
  w.fixed(tx_root);
  return sha256(w.bytes());
}

void CallContext::emit(const std::string& name, std::map<std::string, std::string> payload) {
  size_t bytes = name.size();
  for (const auto& [k, v] : payload) bytes += k.size() + v.size();
  gas.charge_event(bytes);
  Event ev;
  ev.contract = self;
  ev.name = name;
  ev.payload = std::move(payload);
  emitted.push_back(std::move(ev));
}

// ---------------------------------------------------------------------------
// chain
// ---------------------------------------------------------------------------

Chain::Chain(ChainConfig config)
    : gas_(GasTable::from_map(config.gas_costs)), config_(std::move(config)) {
  for (const auto& a : config_.accounts) accounts_.insert(a);
  Block genesis;
  genesis.height = 0;
  genesis.prev_hash = Hash256{};
  genesis.hash = genesis.compute_hash();
  blocks_.push_back(std::move(genesis));
}

void Chain::register_kind(const std::string& kind, ContractFactory factory) {
  std::lock_guard lock(write_mu_);
  kinds_[kind] = std::move(factory);
}

void Chain::add_account(const Address& a) {
  std::lock_guard lock(write_mu_);
  accounts_.insert(a);
}

uint64_t Chain::height() const { return blocks_.back().height; }

uint64_t Chain::now() const { return blocks_.back().height + 1; }

void Chain::validate_tx(const Transaction& tx) const {
  if (tx.gas_limit == 0) throw std::invalid_argument("tx: gas_limit must be positive");
  if (!accounts_.contains(tx.sender))
    throw std::invalid_argument("tx: sender " + hex_encode(tx.sender) + " is not a registered account");
}

Chain::Snapshot Chain::snapshot() const {
  Snapshot snap;
  for (const auto& [addr, contract] : contracts_) snap.contracts.emplace(addr, contract->clone());
  snap.replay = replay_registry_;
  return snap;
}

void Chain::restore(Snapshot&& snap) {
  contracts_ = std::move(snap.contracts);
  replay_registry_ = std::move(snap.replay);
}

Receipt Chain::execute(const Transaction& tx) {
  GasMeter meter(gas_, tx.gas_limit);
  CallContext ctx{*this, meter};
  ctx.sender = tx.sender;
  ctx.now = now();

  Receipt receipt;
  Snapshot snap = snapshot();
  try {
    meter.charge(gas_.base_tx);
    meter.charge_calldata(tx.args.size());
    serial::Reader args(tx.args);
    if (!tx.target) {
      // deployment: function names the kind, address = Hash(sender || nonce)
      auto kind_it = kinds_.find(tx.function);
      if (kind_it == kinds_.end()) throw Revert("unknown contract kind '" + tx.function + "'");
      serial::Writer seed;
      seed.fixed(tx.sender);
      seed.u64(nonces_[tx.sender]);
      Address addr = address_from(seed.bytes());
      ctx.self = addr;
      auto contract = kind_it->second();
      Contract* raw = contract.get();
      contracts_[addr] = std::move(contract);
      raw->init(ctx, args);
      receipt.deployed_address = addr;
    } else {
      auto it = contracts_.find(*tx.target);
      if (it == contracts_.end()) throw Revert("no contract at " + hex_encode(*tx.target));
      ctx.self = *tx.target;
      it->second->call(ctx, tx.function, args);
    }
    receipt.status = TxStatus::Success;
    receipt.events = std::move(ctx.emitted);
  } catch (const Revert& r) {
    restore(std::move(snap));
    receipt.status = TxStatus::Reverted;
    receipt.revert_reason = r.what();
    receipt.deployed_address.reset();
  } catch (const serial::DecodeError& e) {
    restore(std::move(snap));
    receipt.status = TxStatus::Reverted;
    receipt.revert_reason = std::string("calldata: ") + e.what();
    receipt.deployed_address.reset();
  } catch (const detail::OutOfGasSignal&) {
    restore(std::move(snap));
    receipt.status = TxStatus::OutOfGas;
    receipt.revert_reason = "out of gas";
    receipt.deployed_address.reset();
  }
  receipt.gas_used = meter.used();
  nonces_[tx.sender] += 1;

  uint64_t land_height = blocks_.back().height + 1;
  for (size_t i = 0; i < receipt.events.size(); ++i) {
    receipt.events[i].block_height = land_height;
    receipt.events[i].tx_index = static_cast<uint32_t>(pending_txs_.size());
  }
  return receipt;
}

Receipt Chain::submit_tx(const Transaction& tx) {
  std::lock_guard lock(write_mu_);
  validate_tx(tx);
  Receipt receipt = execute(tx);
  pending_txs_.push_back(tx);
  pending_receipts_.push_back(receipt);
  return receipt;
}

uint64_t Chain::gas_estimate(const Transaction& tx) {
  std::lock_guard lock(write_mu_);
  validate_tx(tx);
  Snapshot snap = snapshot();
  auto nonces_before = nonces_;
  Receipt receipt = execute(tx);
  restore(std::move(snap));
  nonces_ = std::move(nonces_before);
  if (receipt.status == TxStatus::OutOfGas) throw std::runtime_error("gas_estimate: out of gas");
  if (receipt.status == TxStatus::Reverted)
    throw std::runtime_error("gas_estimate: reverted: " + receipt.revert_reason);
  return receipt.gas_used;
}

Block Chain::mine_block() {
  std::lock_guard lock(write_mu_);
  Block block;
  block.height = blocks_.back().height + 1;
  block.prev_hash = blocks_.back().hash;
  block.txs = std::move(pending_txs_);
  block.receipts = std::move(pending_receipts_);
  pending_txs_.clear();
  pending_receipts_.clear();
  block.hash = block.compute_hash();
  blocks_.push_back(block);
  return block;
}

Receipt Chain::deploy(const std::string& kind, const Bytes& init_args, const Address& sender,
                      uint64_t gas_limit) {
  Transaction tx;
  tx.sender = sender;
  tx.target = std::nullopt;
  tx.function = kind;
  tx.args = init_args;
  tx.gas_limit = gas_limit;
  return submit_tx(tx);
}

std::vector<Event> Chain::query_events(const EventFilter& filter) const {
  std::vector<Event> out;
  for (const Block& block : blocks_) {
    if (filter.from_height && block.height < *filter.from_height) continue;
    if (filter.to_height && block.height > *filter.to_height) continue;
    for (const Receipt& receipt : block.receipts) {
      for (const Event& ev : receipt.events) {
        if (filter.contract && ev.contract != *filter.contract) continue;
        if (filter.name && ev.name != *filter.name) continue;
        out.push_back(ev);
      }
    }
  }
  return out;
}

const Contract* Chain::contract_at(const Address& a) const {
  auto it = contracts_.find(a);
  return it == contracts_.end() ? nullptr : it->second.get();
}

nlohmann::json Chain::view(const Address& contract, const std::string& function,
                           const nlohmann::json& args) const {
  const Contract* c = contract_at(contract);
  if (!c) throw std::invalid_argument("view: no contract at " + hex_encode(contract));
  return c->view(function, args);
}

nlohmann::json Chain::state_json() const {
  nlohmann::json contracts = nlohmann::json::object();
  for (const auto& [addr, contract] : contracts_) {
    nlohmann::json entry = contract->state_json();
    entry["kind"] = contract->kind();
    contracts[hex_encode(addr)] = std::move(entry);
  }
  nlohmann::json replay = nlohmann::json::array();
  for (const auto& key : replay_registry_) replay.push_back(hex_encode(key));
  return {{"contracts", std::move(contracts)}, {"replay_registry", std::move(replay)}};
}

namespace {

nlohmann::json event_json(const Event& ev) {
  return {{"contract", hex_encode(ev.contract)},
          {"name", ev.name},
          {"payload", ev.payload},
          {"block_height", ev.block_height},
          {"tx_index", ev.tx_index}};
}

nlohmann::json receipt_json(const Receipt& r) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : r.events) events.push_back(event_json(ev));
  nlohmann::json out = {{"status", to_string(r.status)},
                        {"gas_used", r.gas_used},
                        {"events", std::move(events)}};
  if (!r.revert_reason.empty()) out["revert_reason"] = r.revert_reason;
  if (r.deployed_address) out["deployed_address"] = hex_encode(*r.deployed_address);
  return out;
}

nlohmann::json tx_json(const Transaction& tx) {
  nlohmann::json out = {{"sender", hex_encode(tx.sender)},
                        {"function", tx.function},
                        {"args", hex_encode(tx.args)},
                        {"gas_limit", tx.gas_limit},
                        {"gas_price", tx.gas_price}};
  out["target"] = tx.target ? nlohmann::json(hex_encode(*tx.target)) : nlohmann::json(nullptr);
  return out;
}

}  // namespace

nlohmann::json Chain::export_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const Block& b : blocks_) {
    nlohmann::json txs = nlohmann::json::array();
    for (size_t i = 0; i < b.txs.size(); ++i) {
      nlohmann::json entry = tx_json(b.txs[i]);
      entry["receipt"] = receipt_json(b.receipts[i]);
      txs.push_back(std::move(entry));
    }
    blocks.push_back({{"height", b.height},
                      {"prev_hash", hex_encode(b.prev_hash)},
                      {"hash", hex_encode(b.hash)},
                      {"txs", std::move(txs)}});
  }
  nlohmann::json accounts = nlohmann::json::array();
  for (const auto& a : accounts_) accounts.push_back(hex_encode(a));
  return {{"gas_costs", gas_.to_map()},
          {"accounts", std::move(accounts)},
          {"blocks", std::move(blocks)},
          {"state", state_json()}};
}

}  // namespace medshare::ledger
