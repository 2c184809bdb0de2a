#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "isogate/config.hpp"
#include "isogate/scenario.hpp"

namespace {

using isogate::scenario::kExitConfigError;

int run_command(const std::string& path, std::optional<std::uint64_t> seed, int jobs,
                std::optional<std::string> out_dir) {
  const auto scenario = isogate::config::load_scenario(path);
  isogate::scenario::RunOptions options;
  options.seed = seed;
  options.out_dir = out_dir;
  options.jobs = jobs;
  const auto result = isogate::scenario::run_scenario(scenario, options);
  std::cout << result.report;
  const std::string dir = out_dir.value_or(scenario.output_dir);
  std::cout << "\n  outputs in " << dir << "/ (";
  for (const auto& t : result.tables) std::cout << t.file_name << ".csv, ";
  std::cout << "summary.json, report.txt)\n";
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return result.exit_code();
}

int fixtures_command(const std::string& name, const std::string& dir) {
  if (name == "all") {
    for (auto kind : isogate::config::all_scenarios())
      std::cout << isogate::scenario::write_fixture(kind, dir) << "\n";
    return 0;
  }
  std::cout << isogate::scenario::write_fixture(isogate::config::scenario_kind_from_string(name), dir) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-isotope two-ion gate simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run a scenario file and write CSV, summary.json and report.txt");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--jobs,-j", jobs, "Worker threads for scan points")->check(CLI::PositiveNumber);
  run->add_option("--out-dir,-o", out_dir, "Override the output directory");

  std::string fixture_name, fixture_dir;
  auto* fixtures = app.add_subcommand("fixtures", "Write reference scenario files");
  fixtures->add_option("name", fixture_name, "Scenario name or 'all'")->required();
  fixtures->add_option("dir", fixture_dir, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (*run) return run_command(scenario_path, seed, jobs, out_dir);
    return fixtures_command(fixture_name, fixture_dir);
  } catch (const isogate::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const isogate::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
