#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isogate/config.hpp"
#include "isogate/crystal.hpp"
#include "isogate/sequence.hpp"

/// Scenario runner: turns a validated config into CSV tables, a JSON
/// summary and a text report.
namespace isogate::scenario {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitConvergenceWarning = 3;

struct RunOptions {
  std::optional<std::uint64_t> seed;   ///< overrides the config seed
  std::optional<std::string> out_dir;  ///< overrides the config output_dir
  int jobs = 1;
  bool write_files = true;
};

struct Table {
  std::string file_name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

struct RunResult {
  nlohmann::json summary;
  std::string report;
  std::vector<Table> tables;
  std::vector<std::string> warnings;
  bool converged = true;

  int exit_code() const { return converged ? kExitOk : kExitConvergenceWarning; }
};

/// Crystal, mode and gate drive resolved from a scenario.
struct PhysicsSetup {
  crystal::CrystalSummary crystal;
  sequence::GateSetup gate;
};

PhysicsSetup build_physics(const config::Scenario& scenario);

/// Statistically independent child seed for scan index `index`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown for the lowest failing index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

RunResult run_scenario(config::Scenario scenario, const RunOptions& options = {});

/// Writes <dir>/<name>.csv for every table, summary.json and report.txt.
void write_outputs(const RunResult& result, const std::string& dir);

/// Reference configuration for the given scenario with calibrated couplings.
nlohmann::json fixture(config::ScenarioKind kind);

/// Writes <dir>/<name>.json and returns its path.
std::string write_fixture(config::ScenarioKind kind, const std::string& dir);

}  // namespace isogate::scenario
