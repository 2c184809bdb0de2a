#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "isogate/crystal.hpp"
#include "isogate/state.hpp"
#include "isogate/types.hpp"

/// Readout confusion, shot sampling, state preparation, photon scattering,
/// and the magnetic-field drift / ion-order bookkeeping.
namespace isogate::noise {

/// Explicit per-run generator; never shared between concurrent runs.
using Rng = std::mt19937_64;

/// Readout error of one ion. Column = true state (down, up), row = recorded.
struct ConfusionMatrix {
  double eps_dark = 0.0;    ///< P(read down | prepared up)
  double eps_bright = 0.0;  ///< P(read up | prepared down)

  static ConfusionMatrix symmetric(double eps_mean) { return {eps_mean, eps_mean}; }
  double mean() const { return 0.5 * (eps_dark + eps_bright); }
  Eigen::Matrix2d matrix() const;
  void validate() const;
};

/// Ca (x) Cb acting on populations in basis order (dd, du, ud, uu).
Eigen::Matrix4d confusion_map(const ConfusionMatrix& a, const ConfusionMatrix& b);

Populations apply_confusion(const Populations& true_populations, const ConfusionMatrix& a,
                            const ConfusionMatrix& b);

/// Outcome counts for one measurement setting.
struct ShotSet {
  std::string setting;
  std::array<std::uint64_t, 4> counts{};
  std::uint64_t seed = 0;

  std::uint64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  Populations frequencies() const;
};

/// Multinomial draw of `shots` outcomes. Reproducible for a fixed seed.
ShotSet sample_shots(const Populations& distribution, std::uint64_t shots, std::uint64_t seed,
                     std::string setting = {});
ShotSet sample_shots(const Populations& distribution, std::uint64_t shots, Rng& rng,
                     std::string setting = {});

/// Depolarizing strength lambda per qubit such that applying it to both
/// qubits of a Bell state costs exactly p_scat in fidelity.
double depolarizing_strength(double p_scat);

/// Per-qubit depolarization with total Bell-fidelity cost p_scat.
void apply_scattering(TwoQubitState& state, double p_scat);

/// Imperfections applied while running a pulse program.
struct NoiseConfig {
  ConfusionMatrix readout_a;
  ConfusionMatrix readout_b;
  double state_prep_error = 0.0;   ///< per-qubit leakage to up at Prepare
  double scattering_error = 0.0;   ///< Bell-fidelity cost of one full gate
  std::array<double, 2> qubit_detuning_hz{0.0, 0.0};  ///< static qubit minus LO
  double detuning_jitter_hz = 0.0;  ///< rms quasi-static offset drawn per run
  double nbar = 0.0;                ///< initial thermal occupation of the gate mode
  bool finite_duration_rotations = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// --- magnetic field drift and ion order -----------------------------------

struct DriftModel {
  double b0_t = 0.2e-3;
  double delta_b_t = 0.18e-6;  ///< field difference between the two ion sites
  double common_offset_t = 0.0;  ///< static shift of the common field
  double drift_t = 0.0;          ///< current excursion of the random walk
  double volatility_t_per_sqrt_s = 0.0;
  /// Mean-reversion time; infinity gives a plain random walk.
  double correlation_time_s = 60.0;
  std::array<double, 2> sensitivity_hz_per_t{2.8025e10, 2.45e10};
  std::array<double, 2> zero_field_hz{0.0, 3.2256e9};
  crystal::IonOrder order = crystal::IonOrder::AB;
  crystal::IonOrder target_order = crystal::IonOrder::AB;
  double reorder_flip_probability = 0.5;

  void validate() const;
  double common_field_t() const { return b0_t + common_offset_t + drift_t; }
  std::array<double, 2> qubit_frequencies() const { return qubit_frequencies(order); }
  /// Frequencies (qubit a, qubit b) the ions would have in the given order.
  std::array<double, 2> qubit_frequencies(crystal::IonOrder assumed) const;
};

/// Advance the common-field random walk by dt.
DriftModel drift_step(DriftModel model, double dt_s, Rng& rng);

struct OrderEstimate {
  crystal::IonOrder order = crystal::IonOrder::AB;
  /// Inferred field at qubit b's site minus field at qubit a's site.
  double differential_field_t = 0.0;
};

/// Order implied by measured qubit frequencies: the ion at the high-field
/// site reports the larger inferred field.
OrderEstimate detect_order(const DriftModel& model, const std::array<double, 2>& measured_hz);

struct ReorderResult {
  crystal::IonOrder order = crystal::IonOrder::AB;
  int cycles = 0;
};

/// Melt and recool until the target order appears; each cycle flips the
/// order with model.reorder_flip_probability.
ReorderResult reorder(const DriftModel& model, std::uint64_t seed);
ReorderResult reorder(const DriftModel& model, Rng& rng);

struct ProbeOptions {
  double duration_s = 100e-6;  ///< carrier pi-pulse length
  int points = 41;
  /// Scan half-width in units of 1/duration.
  double span_in_fourier_widths = 2.0;
  int shots_per_point = 200;
};

struct ProbeResult {
  std::array<double, 2> offset_hz{};  ///< estimated qubit minus LO
  std::array<double, 2> sigma_hz{};
  bool converged = true;
};

/// Probability of a spin flip after a pi-pulse of the given duration with
/// the LO detuned from the qubit by detuning_hz.
double rabi_lineshape(double detuning_hz, double duration_s);

/// Simulated carrier lineshape scan on both qubits, fitted for the line center.
ProbeResult calibration_probe(const DriftModel& model, const std::array<double, 2>& lo_hz,
                              const ProbeOptions& options, Rng& rng);

struct CalibrationStep {
  ProbeResult probe;
  OrderEstimate order;
  bool order_wrong = false;
  int reorder_cycles = 0;
  std::array<double, 2> correction_hz{0.0, 0.0};
};

/// One interleaved calibration: probe, check the ion order (reordering if
/// needed), then move each LO onto its qubit when the offset is resolved
/// beyond deadband_sigmas standard errors. A probe that fails to converge
/// leaves the LOs untouched.
CalibrationStep calibrate(DriftModel& model, std::array<double, 2>& lo_hz,
                          const ProbeOptions& options, Rng& rng, double deadband_sigmas = 3.0);

}  // namespace isogate::noise
