#pragma once

#include <filesystem>

#include "medshare/actors.hpp"
#include "medshare/analysis.hpp"

namespace medshare::scenario {

// Configuration is invalid; `problems` lists every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems(std::move(problems)) {}
  std::vector<std::string> problems;

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid scenario config:";
    for (const auto& line : p) out += "\n  - " + line;
    return out;
  }
};

// A protocol step failed during execution; `step` names the orchestration
// event that failed.
class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(size_t step_index, const std::string& step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step_index) + " (" + step + "): " + what),
        step_index(step_index),
        step(step) {}
  size_t step_index;
  std::string step;
};

struct StaffEntry {
  std::string id;
  std::vector<std::string> attributes;
};

struct ScenarioConfig {
  uint64_t seed = 0;
  std::map<std::string, uint64_t> gas_cost_overrides;
  std::vector<std::string> structure;  // policy DSL, level 1 first
  std::vector<Bytes> segments;         // R_1..R_k
  std::vector<StaffEntry> staff;
  uint32_t certifiers = 1;
  uint32_t issuers = 1;
  uint32_t up_bound = contracts::kDefaultUpBound;
  uint64_t validity_window = contracts::kDefaultValidityWindow;
  uint64_t freshness_window = contracts::kDefaultFreshnessWindow;
  uint32_t nodes = 4;
  uint32_t replication = 3;
  uint64_t chunk_size = cas::kDefaultChunkSize;
  uint32_t kappa = 256;
  analysis::SweepParams sweep;  // used by the cost report subcommand
};

// Parses the JSON config document. File-referenced segments load relative to
// the config's directory. Throws ConfigError listing every problem.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// Pre-flight validation; rejects every ScenarioConfig invariant violation
// before the ledger is touched.
void validate_config(const ScenarioConfig& config);

struct RunResult {
  // staff id -> announced level (absent when no policy matched)
  std::map<std::string, std::optional<size_t>> grants;
  std::filesystem::path audit_path;
  std::filesystem::path manifest_path;
  std::filesystem::path gas_path;
  std::filesystem::path chain_path;
};

// Full orchestration: prepare, register, request, grant, fetch for every
// staff entry; writes audit.csv, manifest.json, gas.csv and chain.json into
// out_dir. Identical config and seed produce byte-identical outputs.
RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

// Chronological LogAnnounce/LogKeys table from an exported chain document,
// optionally filtered to one staff address.
std::string audit_events_table(const nlohmann::json& chain_export,
                               const std::optional<Address>& staff);

}  // namespace medshare::scenario
