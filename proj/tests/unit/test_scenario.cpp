#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "isogate/config.hpp"
#include "isogate/scenario.hpp"

using namespace isogate;
using namespace isogate::config;
using namespace isogate::scenario;
using nlohmann::json;

namespace {

RunOptions in_memory(int jobs = 1) {
  RunOptions o;
  o.write_files = false;
  o.jobs = jobs;
  return o;
}

std::string error_field(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("fixtures parse and resolve to themselves") {
  for (auto kind : all_scenarios()) {
    CAPTURE(to_string(kind));
    const json doc = fixture(kind);
    const Scenario s = parse_scenario(doc);
    CHECK(s.kind == kind);
    CHECK(s.seed == 1729);
    CHECK(to_json(s) == doc);
    CHECK(scenario_kind_from_string(to_string(kind)) == kind);
  }
  const auto chsh = parse_scenario(fixture(ScenarioKind::chsh));
  CHECK(chsh.chsh.shots_per_setting == 4000);
  CHECK(chsh.chsh.angles.theta_a == doctest::Approx(M_PI / 4));
  CHECK(chsh.chsh.angles.theta_a_prime == doctest::Approx(3 * M_PI / 4));
  CHECK(chsh.chsh.angles.theta_b == doctest::Approx(M_PI / 2));
  CHECK(chsh.chsh.angles.theta_b_prime == 0.0);
  const auto gate = parse_scenario(fixture(ScenarioKind::gate_fidelity));
  CHECK(gate.gate.gate_time_s == 27.4e-6);
  CHECK(gate.gate.raman_detuning_hz == -1.04e12);
  CHECK(*gate.crystal.in_phase_frequency_hz == 2.0e6);
  CHECK(gate.gate.resolved_gate_detuning_hz() == doctest::Approx(1.0 / 13.7e-6));
}

TEST_CASE("config errors name the offending field") {
  json doc = fixture(ScenarioKind::chsh);
  doc.erase("seed");
  CHECK(error_field(doc) == "seed");

  doc = fixture(ScenarioKind::chsh);
  doc["chsh"]["shots"] = 10;
  CHECK(error_field(doc) == "chsh.shots");

  doc = fixture(ScenarioKind::chsh);
  doc["noise"]["readout"]["a"]["eps_dark"] = "big";
  CHECK(error_field(doc) == "noise.readout.a.eps_dark");

  doc = fixture(ScenarioKind::gate_fidelity);
  doc["gate"]["gate_time_s"] = -1.0;
  CHECK(error_field(doc) == "gate.gate_time_s");

  doc = fixture(ScenarioKind::gate_fidelity);
  doc["gate"]["force_sign"] = 2;
  CHECK(error_field(doc) == "gate.force_sign");

  doc = fixture(ScenarioKind::gate_fidelity);
  doc["crystal"]["axial_reference_frequency_hz"] = 2e6;
  CHECK(error_field(doc).rfind("crystal.", 0) == 0);

  doc = fixture(ScenarioKind::mode_geometry);
  doc["tomography"] = json::object();
  CHECK(error_field(doc) == "tomography");

  doc = fixture(ScenarioKind::gate_fidelity);
  doc["scenario"] = "teleport";
  CHECK(error_field(doc) == "scenario");

  CHECK_THROWS_AS(load_scenario("/nonexistent/file.json"), ConfigError);
}

TEST_CASE("eps_mean shorthand") {
  json doc = fixture(ScenarioKind::gate_fidelity);
  doc["noise"]["readout"]["a"] = {{"eps_mean", 0.05}};
  const auto s = parse_scenario(doc);
  CHECK(s.noise.readout_a.eps_dark == 0.05);
  CHECK(s.noise.readout_a.eps_bright == 0.05);
  doc["noise"]["readout"]["a"]["eps_dark"] = 0.05;
  CHECK(error_field(doc) == "noise.readout.a.eps_mean");
}

TEST_CASE("config hash is stable and sensitive") {
  const json doc = fixture(ScenarioKind::chsh);
  const auto h = config_hash(to_json(parse_scenario(doc)));
  CHECK(h == config_hash(to_json(parse_scenario(json::parse(doc.dump())))));
  json other = doc;
  other["chsh"]["shots_per_setting"] = 4001;
  CHECK(config_hash(to_json(parse_scenario(other))) != h);
  CHECK(hex64(0x1234) == "0000000000001234");
  // FNV-1a of the compact dumps "{}" and {"a":1}.
  CHECK(config_hash(json::parse("{}")) == 0x08f44b07b5901a25ULL);
  CHECK(config_hash(json::parse(R"({"a": 1})")) == 0x9c3e82dd6fcae8b1ULL);
}

TEST_CASE("seeding and worker pool") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(1729, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));

  std::vector<int> hits(257, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  std::atomic<int> ran{0};
  CHECK_THROWS_WITH(parallel_for(64, 4,
                                 [&](std::size_t i) {
                                   ++ran;
                                   if (i == 7 || i == 30) throw InvalidInput("bad " + std::to_string(i));
                                 }),
                    "bad 7");
}

TEST_CASE("runs are reproducible and independent of the thread count") {
  for (auto kind : {ScenarioKind::chsh, ScenarioKind::gate_fidelity, ScenarioKind::calibration_drift}) {
    CAPTURE(to_string(kind));
    json doc = fixture(kind);
    if (kind == ScenarioKind::calibration_drift) doc["calibration_drift"]["reorder_trials"] = 500;
    const auto s = parse_scenario(doc);
    const auto one = run_scenario(s, in_memory(1));
    const auto four = run_scenario(s, in_memory(4));
    CHECK(one.summary.dump() == four.summary.dump());
    CHECK(one.report == four.report);
    CHECK(one.tables.front().to_csv() == four.tables.front().to_csv());
    RunOptions reseeded = in_memory(1);
    reseeded.seed = 7;
    CHECK(run_scenario(s, reseeded).summary.dump() != one.summary.dump());
  }
}

TEST_CASE("noiseless gate with exact expectation values") {
  json doc = fixture(ScenarioKind::gate_fidelity);
  doc["noise"] = json::object();
  doc["gate_fidelity"]["shots_per_point"] = 0;
  doc["gate_fidelity"]["population_shots"] = 0;
  const auto r = run_scenario(parse_scenario(doc), in_memory());
  CHECK(r.exit_code() == kExitOk);
  CHECK(std::abs(r.summary["results"]["fidelity"].get<double>() - 1.0) < 1e-6);
  CHECK(r.summary["results"]["contrast"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("summary layout and files") {
  const auto dir = std::filesystem::temp_directory_path() / "isogate_scenario_test";
  std::filesystem::remove_all(dir);
  RunOptions opts;
  opts.out_dir = dir.string();
  const auto r = run_scenario(parse_scenario(fixture(ScenarioKind::mode_geometry)), opts);
  for (const char* key : {"scenario", "seed", "config_hash", "config", "results", "converged", "warnings"})
    CHECK(r.summary.contains(key));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "report.txt"));
  CHECK(std::filesystem::exists(dir / "mode_geometry.csv"));
  std::ifstream in(dir / "summary.json");
  CHECK(json::parse(in) == r.summary);
  const auto& res = r.summary["results"];
  CHECK(std::abs(res["in_phase"]["eta_a"].get<double>() - 0.121) < 0.005);
  CHECK(std::abs(res["in_phase"]["eta_b"].get<double>() - 0.126) < 0.005);
  CHECK(write_fixture(ScenarioKind::chsh, dir.string()) == (dir / "chsh.json").string());
  CHECK(load_scenario((dir / "chsh.json").string()).kind == ScenarioKind::chsh);
  std::filesystem::remove_all(dir);
}

TEST_CASE("MLE iteration cap raises the convergence exit code") {
  json doc = fixture(ScenarioKind::tomography);
  doc["tomography"]["max_iterations"] = 1;
  doc["tomography"]["shots_per_setting"] = 1000;
  const auto r = run_scenario(parse_scenario(doc), in_memory());
  CHECK_FALSE(r.converged);
  CHECK(r.exit_code() == kExitConvergenceWarning);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("ideal CHSH run approaches the Tsirelson bound") {
  json doc = fixture(ScenarioKind::chsh);
  doc["noise"] = json::object();
  doc["chsh"]["detection_error"] = 0.0;
  doc["chsh"]["shots_per_setting"] = 1000000;
  const auto r = run_scenario(parse_scenario(doc), in_memory(4));
  const double s = r.summary["results"]["S"].get<double>();
  const double sigma = r.summary["results"]["sigma_S"].get<double>();
  CHECK(std::abs(s - 2 * M_SQRT2) < 4 * sigma);
  const auto& corr = r.summary["results"]["correlations"];
  CHECK(corr[0]["E"].get<double>() > 0);
  CHECK(corr[1]["E"].get<double>() > 0);
  CHECK(corr[2]["E"].get<double>() > 0);
  CHECK(corr[3]["E"].get<double>() < 0);
}
