#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isogate/analysis.hpp"
#include "isogate/crystal.hpp"
#include "isogate/dynamics.hpp"
#include "isogate/noise.hpp"

/// Scenario configuration: JSON schema with SI units named in every key.
/// Parsing rejects unknown keys and reports the offending field path.
namespace isogate::config {

enum class ScenarioKind { gate_fidelity, tomography, chsh, lightshift_sweep, calibration_drift, mode_geometry };

const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& text);
const std::vector<ScenarioKind>& all_scenarios();

struct CrystalConfig {
  crystal::IonSpecies species_a = crystal::calcium40();
  crystal::IonSpecies species_b = crystal::calcium43();
  crystal::IonOrder order = crystal::IonOrder::AB;
  /// Exactly one of the two is set; the other is derived.
  std::optional<double> in_phase_frequency_hz;
  std::optional<double> axial_reference_frequency_hz;
  crystal::BeamGeometry beam = crystal::BeamGeometry::perpendicular(397e-9);
};

struct GateConfig {
  double raman_detuning_hz = -1.04e12;
  double gate_time_s = 27.4e-6;  ///< both halves
  double gate_detuning_hz = 0.0; ///< 0 means 2 / gate_time_s
  dynamics::ForceCouplings couplings_hz;
  double optical_phase_rad = 0.0;
  double light_shift_a_hz = 0.0;
  double light_shift_b_hz = 0.0;
  dynamics::EnvelopeShape shape = dynamics::EnvelopeShape::square;
  double ramp_time_s = 0.0;
  /// Relative force sign; unset means taken from the standing-wave alignment.
  std::optional<int> force_sign;
  bool echo = true;

  double resolved_gate_detuning_hz() const;
};

struct GateFidelityConfig {
  int scan_points = 16;
  double phase_start_rad = 0.0;
  double phase_stop_rad = 3.141592653589793;  ///< exclusive
  /// 0 means exact expectation values instead of sampled counts.
  std::uint64_t shots_per_point = 500;
  std::uint64_t population_shots = 500;
  bool readout_correction = true;
};

struct TomographyConfig {
  std::uint64_t shots_per_setting = 100000;
  analysis::ReadoutHandling readout = analysis::ReadoutHandling::folded;
  int max_iterations = 100000;
};

struct ChshConfig {
  std::uint64_t shots_per_setting = 4000;
  analysis::ChshAngles angles;
  /// Per-ion symmetric detection error that overrides noise.readout.
  std::optional<double> detection_error;
};

struct LightShiftSweepConfig {
  std::vector<double> ramp_times_s{0.0, 0.25e-6, 0.5e-6, 0.75e-6, 1.0e-6, 1.5e-6, 2.0e-6};
  /// When set, the light-shift amplitudes are rescaled so the square pulse loses this much.
  std::optional<double> target_square_loss;
  std::vector<double> phase_offsets_rad{0.0, 1.0471975511965976, 3.141592653589793};
};

struct CalibrationDriftConfig {
  noise::DriftModel drift;
  noise::ProbeOptions probe;
  int cycles = 100;
  double interval_s = 10.0;
  std::array<double, 2> lo_offset_hz{0.0, 0.0};  ///< initial LO minus qubit
  double deadband_sigmas = 3.0;
  int reorder_trials = 10000;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::gate_fidelity;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  CrystalConfig crystal;
  GateConfig gate;
  noise::NoiseConfig noise;
  GateFidelityConfig gate_fidelity;
  TomographyConfig tomography;
  ChshConfig chsh;
  LightShiftSweepConfig lightshift_sweep;
  CalibrationDriftConfig calibration_drift;

  void validate() const;
};

/// Throws ConfigError naming the offending field.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Fully resolved document: every field, including defaults, is written out.
/// Sections a scenario does not use are omitted.
nlohmann::json to_json(const Scenario& scenario);

/// 64-bit FNV-1a of the compact dump of doc.
std::uint64_t config_hash(const nlohmann::json& doc);
std::string hex64(std::uint64_t value);

}  // namespace isogate::config
