// medshare — command-line front door for the record-sharing simulation.
//
//   medshare scenario run --config <path> --out <dir>
//   medshare analyze replay --q <decimal> --n <int> [--trials <int>] [--seed <int>]
//   medshare audit events --chain <path> [--staff <hex40>]
//   medshare report costs [--out <csv>] [--config <path>]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime protocol failure.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "medshare/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_scenario_run(const std::string& config_path, const std::string& out_dir) {
  medshare::scenario::ScenarioConfig config;
  try {
    config = medshare::scenario::load_config(config_path);
    medshare::scenario::validate_config(config);
  } catch (const medshare::scenario::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  try {
    auto result = medshare::scenario::run_scenario(config, out_dir);
    for (const auto& [id, level] : result.grants) {
      std::cout << id << ": " << (level ? "level " + std::to_string(*level) : "no access") << "\n";
    }
    std::cout << "reports written to " << out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "scenario failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_analyze_replay(const std::string& q_text, uint32_t n, uint64_t trials, uint64_t seed) {
  medshare::analysis::RaceParams params;
  try {
    params.q = medshare::analysis::parse_decimal(q_text);
    params.n = n;
    params.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  auto closed = medshare::analysis::replay_success_probability(params);
  auto sim = medshare::analysis::race_simulate(params, trials, seed);
  std::printf("q,n,closed_form,monte_carlo,trials,seed\r\n");
  std::printf("%s,%u,%.12g,%.12g,%" PRIu64 ",%" PRIu64 "\r\n", q_text.c_str(), n,
              static_cast<double>(closed), sim.probability, trials, seed);
  return kExitOk;
}

int cmd_audit_events(const std::string& chain_path, const std::string& staff_hex) {
  std::ifstream in(chain_path);
  if (!in) {
    std::cerr << "cannot open chain export " << chain_path << "\n";
    return kExitConfig;
  }
  nlohmann::json doc;
  std::optional<medshare::Address> staff;
  try {
    doc = nlohmann::json::parse(in);
    if (!staff_hex.empty()) staff = medshare::hex_decode_fixed<20>(staff_hex);
    std::cout << medshare::scenario::audit_events_table(doc, staff);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "unreadable chain export: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_report_costs(const std::string& out_path, const std::string& config_path) {
  medshare::analysis::SweepParams sweep;
  auto gas = medshare::ledger::GasTable::defaults();
  if (!config_path.empty()) {
    try {
      auto config = medshare::scenario::load_config(config_path);
      sweep = config.sweep;
      auto merged = gas.to_map();
      for (const auto& [key, value] : config.gas_cost_overrides) merged[key] = value;
      gas = medshare::ledger::GasTable::from_map(merged);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    }
  }
  try {
    auto rows = medshare::analysis::cost_report(gas, sweep);
    std::string csv = medshare::analysis::cost_report_csv(rows);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return kExitConfig;
      }
      out << csv;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "cost report failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic multilevel record-sharing simulation"};
  app.require_subcommand(1);

  // scenario run
  auto* scenario = app.add_subcommand("scenario", "scenario orchestration");
  scenario->require_subcommand(1);
  auto* run = scenario->add_subcommand("run", "execute a scenario config end to end");
  std::string config_path, out_dir = "out";
  run->add_option("--config", config_path, "scenario config JSON")->required();
  run->add_option("--out", out_dir, "output directory for reports");

  // analyze replay
  auto* analyze = app.add_subcommand("analyze", "attacker-model analysis");
  analyze->require_subcommand(1);
  auto* replay = analyze->add_subcommand("replay", "confirmation-race success probability");
  std::string q_text = "0.1";
  uint32_t n = 1;
  uint64_t trials = 1'000'000, seed = 1;
  replay->add_option("--q", q_text, "attacker power fraction (decimal)")->required();
  replay->add_option("--n", n, "confirmation depth")->required();
  replay->add_option("--trials", trials, "Monte-Carlo trials");
  replay->add_option("--seed", seed, "Monte-Carlo seed");

  // audit events
  auto* audit = app.add_subcommand("audit", "event history inspection");
  audit->require_subcommand(1);
  auto* events = audit->add_subcommand("events", "list LogAnnounce/LogKeys chronologically");
  std::string chain_path, staff_hex;
  events->add_option("--chain", chain_path, "chain export JSON")->required();
  events->add_option("--staff", staff_hex, "filter by staff address (hex)");

  // report costs
  auto* report = app.add_subcommand("report", "cost reporting");
  report->require_subcommand(1);
  auto* costs = report->add_subcommand("costs", "gas cost sweep CSV");
  std::string costs_out, costs_config;
  costs->add_option("--out", costs_out, "CSV output path (default stdout)");
  costs->add_option("--config", costs_config, "scenario config with sweep overrides");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_scenario_run(config_path, out_dir);
  if (replay->parsed()) return cmd_analyze_replay(q_text, n, trials, seed);
  if (events->parsed()) return cmd_audit_events(chain_path, staff_hex);
  if (costs->parsed()) return cmd_report_costs(costs_out, costs_config);
  return kExitConfig;
}
