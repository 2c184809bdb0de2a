#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "isogate/crystal.hpp"
#include "isogate/types.hpp"

/// State-dependent optical force on one motional mode: coherent-state
/// trajectories, geometric phases, the per-half gate channel, its
/// spin-echo composition, and the oscillating light-shift error.
namespace isogate::dynamics {

/// Sideband coupling of each internal state of each ion, in Hz, before the
/// eigenvector and Lamb-Dicke weighting. The sign encodes force direction.
struct ForceCouplings {
  double a_up = 0.0;
  double a_down = 0.0;
  double b_up = 0.0;
  double b_down = 0.0;

  double a(int bit) const { return bit ? a_up : a_down; }
  double b(int bit) const { return bit ? b_up : b_down; }
  ForceCouplings scaled(double factor) const {
    return {a_up * factor, a_down * factor, b_up * factor, b_down * factor};
  }
};

struct DriveConfig {
  double raman_detuning_hz = 0.0;       ///< negative = red of the dipole line
  double difference_frequency_hz = 0.0; ///< delta = f_z + delta_g
  double gate_detuning_hz = 0.0;        ///< delta_g
  ForceCouplings couplings;
  double optical_phase_rad = 0.0;
  double light_shift_a_hz = 0.0;  ///< amplitude of the differential light shift oscillating at delta
  double light_shift_b_hz = 0.0;

  void validate() const;
  /// Drive tuned delta_g away from the given mode.
  static DriveConfig for_mode(double mode_frequency_hz, double gate_detuning_hz);
};

enum class EnvelopeShape { square, shaped };

const char* to_string(EnvelopeShape shape);
EnvelopeShape envelope_shape_from_string(const std::string& text);

/// Intensity envelope of one gate pulse. A square pulse occupies
/// [0, duration]. A shaped pulse is the same square smoothed by a Gaussian
/// whose 10-90 % rise time equals ramp_time; the edge midpoints stay at 0 and
/// duration, so the pulse area does not depend on ramp_time. Its support is
/// truncated at +/- 8 sigma beyond each edge.
struct Envelope {
  EnvelopeShape shape = EnvelopeShape::square;
  double ramp_time_s = 0.0;
  double duration_s = 0.0;

  void validate() const;
  double value(double t) const;
  double begin() const;
  double end() const;
  double sigma() const;

  static Envelope square(double duration_s) { return {EnvelopeShape::square, 0.0, duration_s}; }
  static Envelope shaped(double duration_s, double ramp_time_s) {
    return {EnvelopeShape::shaped, ramp_time_s, duration_s};
  }
};

struct BasisStateTrajectory {
  Basis basis_state = Basis::down_down;
  std::vector<double> times;
  std::vector<cdouble> alpha_samples;
  double geometric_phase = 0.0;
  cdouble final_displacement{0.0, 0.0};
};

/// Minimum number of time samples per period of the difference frequency.
inline constexpr double kMinSamplesPerDrivePeriod = 40.0;
/// Default grid density used when the caller does not choose one.
inline constexpr double kDefaultSamplesPerDrivePeriod = 64.0;

/// Number of intervals the default grid uses for this pulse.
std::size_t default_sample_count(const DriveConfig& drive, const Envelope& env);

/// Coherent displacement alpha(t) = -i int 2 pi f(t') exp(i(2 pi delta_g t' + phi)) dt'
/// for a mode driven with coupling state_coupling_hz times the envelope.
/// Pass samples = 0 for the default grid. Throws SamplingError when the grid
/// has fewer than kMinSamplesPerDrivePeriod points per 1/delta.
BasisStateTrajectory displacement_trajectory(const DriveConfig& drive, const Envelope& env,
                                             double state_coupling_hz, std::size_t samples = 0,
                                             Basis label = Basis::down_down);

/// Closed-form loop phase of a square pulse lasting 1/delta_g.
double square_loop_phase(double coupling_hz, double gate_detuning_hz);

/// Diagonal two-qubit channel left by a state-dependent displacement.
struct GateChannel {
  std::array<double, 4> phases{};
  std::array<cdouble, 4> displacements{};
  double nbar = 0.0;

  /// exp(-|alpha_i - alpha_j|^2 (2 nbar + 1) / 2).
  Eigen::Matrix4d coherence_factors() const;
  /// Phases relative to the dd state.
  std::array<double, 4> relative_phases() const;
  /// rho_ij -> rho_ij exp(i(phi_i - phi_j)) exp(i Im(alpha_i conj(alpha_j))) c_ij,
  /// which is the exact partial trace over a thermal mode.
  DensityMatrix apply(const DensityMatrix& rho) const;

  static GateChannel identity(double nbar = 0.0);
};

/// Coupling seen by each basis state:
/// eta_a * Omega_a(s_a) + force_sign * eta_b * Omega_b(s_b).
std::array<double, 4> basis_couplings(const DriveConfig& drive,
                                      const crystal::MotionalMode& mode, int force_sign);

GateChannel gate_half_channel(const DriveConfig& drive, const Envelope& env,
                              const crystal::MotionalMode& mode, int force_sign,
                              double nbar = 0.0, std::size_t samples = 0);

/// Two halves separated by a pi pulse on each qubit, expressed in the
/// original basis labels (the flips themselves are not included).
GateChannel compose_symmetrized_gate(const GateChannel& first, const GateChannel& second);

/// Uniform scale of all four couplings that makes the symmetrized gate's
/// relative phase equal target_phase_rad. Throws when the drive produces no
/// differential phase.
double coupling_scale_for_phase(const DriveConfig& drive, const Envelope& env,
                                const crystal::MotionalMode& mode, int force_sign,
                                double target_phase_rad);

inline constexpr std::size_t kOpticalPhaseGridPoints = 64;

struct LightShiftResult {
  std::vector<double> optical_phases;
  std::vector<double> phase_a;        ///< accumulated single-qubit phase per grid point
  std::vector<double> phase_b;
  std::vector<double> fidelity_loss;  ///< Bell-state infidelity per grid point
  double mean_loss = 0.0;
};

/// Phase theta_j(phi) = int 2 pi A_j env(t) cos(2 pi delta t + phi) dt on the
/// 64-point optical phase grid, and the Bell-state infidelity
/// sin^2((theta_a + theta_b) / 2) averaged over it.
LightShiftResult light_shift_phase(const DriveConfig& drive, const Envelope& env,
                                   std::size_t samples = 0);

/// Factor on both light-shift amplitudes that gives target_loss.
double calibrate_light_shift_scale(const DriveConfig& drive, const Envelope& env,
                                   double target_loss);

/// Phase picked up per qubit during one pulse that starts at start_time
/// (measured on the drive clock), for the drive's optical phase.
std::array<double, 2> light_shift_phases_at(const DriveConfig& drive, const Envelope& env,
                                            double start_time_s, std::size_t samples = 0);

// --- truncated Fock space oracle -------------------------------------------

enum class CouplingModel {
  lamb_dicke,
  full_exponential,  ///< experimental: Debye-Waller/Laguerre sideband matrix elements
};

struct FockOracleOptions {
  int n_max = 30;
  double nbar = 0.0;
  bool symmetrized = true;  ///< second half with both qubits flipped
  CouplingModel coupling = CouplingModel::lamb_dicke;
  double tolerance = 1e-10;
  double leakage_limit = 1e-8;
  /// Thermal components with weight below this are dropped.
  double thermal_cutoff = 1e-14;
};

struct FockOracleResult {
  int n_max = 0;
  std::vector<double> thermal_weights;
  /// final_kets[s][n]: oscillator state of basis branch s started in |n>.
  std::array<std::vector<Eigen::VectorXcd>, 4> final_kets;
  double max_leakage = 0.0;
  bool converged = true;

  /// Qubit state after tracing out the oscillator.
  DensityMatrix reduce(const DensityMatrix& initial) const;
  /// Joint qubit (x) oscillator density matrix, qubit index major.
  Eigen::MatrixXcd joint_state(const DensityMatrix& initial) const;
};

/// Integrates the driven mode in a number basis truncated at n_max for each
/// basis branch and thermal component. Leakage is the largest population
/// seen in |n_max>; above leakage_limit the result is marked unconverged.
FockOracleResult fock_oracle(const DriveConfig& drive, const Envelope& env,
                             const crystal::MotionalMode& mode, int force_sign,
                             const FockOracleOptions& options = {});

}  // namespace isogate::dynamics
