#pragma once

#include <array>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "isogate/crystal.hpp"
#include "isogate/dynamics.hpp"
#include "isogate/noise.hpp"
#include "isogate/state.hpp"

/// Pulse programs for the two qubits: preparation, single-qubit rotations,
/// gate halves, waits, and measurement, executed on a density matrix with
/// independent phase tracking per qubit.
namespace isogate::sequence {

struct Rotate {
  Qubit target = Qubit::a;
  double angle_rad = 0.0;  ///< wrapped into [0, 2 pi)
  double phase_rad = 0.0;
  double duration_s = 0.0;
};

struct GateHalf {
  std::string drive = "main";
};

struct Wait {
  double duration_s = 0.0;
};

struct Prepare {};
struct Measure {};

using PulseOp = std::variant<Prepare, Rotate, GateHalf, Wait, Measure>;
using Program = std::vector<PulseOp>;

/// Rotation with angle wrapped into [0, 2 pi). Throws on negative duration.
Rotate make_rotate(Qubit target, double angle_rad, double phase_rad, double duration_s = 0.0);

/// Everything a GateHalf op needs to build its channel.
struct GateSetup {
  dynamics::DriveConfig drive;
  dynamics::Envelope envelope;
  crystal::MotionalMode mode;  ///< with populated eta values
  int force_sign = -1;
};

using GateSetups = std::map<std::string, GateSetup>;

/// Local-oscillator phase bookkeeping for each qubit plus the gate drive clock.
class PhaseTracker {
 public:
  PhaseTracker() = default;
  PhaseTracker(std::array<double, 2> lo_frequency_hz, double drive_frequency_hz)
      : lo_frequency_hz_(lo_frequency_hz), drive_frequency_hz_(drive_frequency_hz) {}

  void advance(double dt_s);
  double elapsed() const { return elapsed_s_; }
  double lo_phase(Qubit q) const { return lo_phase_[static_cast<int>(q)]; }
  double drive_phase() const { return drive_phase_; }

 private:
  std::array<double, 2> lo_frequency_hz_{0.0, 0.0};
  std::array<double, 2> lo_phase_{0.0, 0.0};
  double drive_frequency_hz_ = 0.0;
  double drive_phase_ = 0.0;
  double elapsed_s_ = 0.0;
};

/// Called after every op with its index and the state it produced.
using Observer = std::function<void(std::size_t, const TwoQubitState&)>;

/// Executes the program. Rejects programs that do not start with Prepare,
/// that contain Measure anywhere but last, or that reference an unknown
/// drive. Global phases are discarded. Deterministic for a fixed noise
/// config (including its seed).
TwoQubitState run_sequence(const Program& program, const GateSetups& gates,
                           const noise::NoiseConfig& noise = {}, const Observer& observer = {});

/// Phases of the Ramsey pulse pairs around a symmetrized gate with relative
/// phase +pi/2, chosen so that |dd> maps onto (|dd> + |uu>)/sqrt(2).
struct RamseyPhases {
  std::array<double, 2> first;
  std::array<double, 2> second_with_echo;
  std::array<double, 2> second_without_echo;
};

inline constexpr RamseyPhases kRamseyPhases{{0.0, 0.5 * std::numbers::pi},
                                            {0.0, 1.5 * std::numbers::pi},
                                            {0.0, 0.5 * std::numbers::pi}};

/// Parity-scan phase offset: for the target Bell state with analysis pulses
/// R(pi/2, phi) on both qubits, P_odd(phi) = (1 - sin(2 phi + offset)) / 2.
inline constexpr double kParityPhaseOffset = -0.5 * std::numbers::pi;

/// Phase of the CHSH analysis rotations; with it the ideal Bell state gives
/// E(theta_a, theta_b) = cos(theta_a - theta_b).
inline constexpr double kChshAnalysisPhase = 0.5 * std::numbers::pi;

struct BellProgramOptions {
  bool echo = true;
  bool analysis_pulses = false;
  double analysis_phase_rad = 0.0;
  bool measure = true;
};

/// Prepare, Ramsey pi/2 pair, gate half, pi pair, gate half, Ramsey pi/2
/// pair, optional analysis pi/2 pair, measure.
Program bell_program(const BellProgramOptions& options = {});

/// Bell-state preparation followed by rotations (theta_a, theta_b) at the
/// CHSH analysis phase.
Program chsh_program(double theta_a, double theta_b);

struct PhaseIndependence {
  std::vector<double> fidelities;
  double spread = 0.0;  ///< max - min
};

/// Bell fidelity of the program's output for each gate-drive phase offset
/// added to every configured drive.
PhaseIndependence gate_phase_independence_check(const Program& program, const GateSetups& gates,
                                                const std::vector<double>& phase_offsets,
                                                const noise::NoiseConfig& noise = {});

nlohmann::json program_to_json(const Program& program);
Program program_from_json(const nlohmann::json& doc);

}  // namespace isogate::sequence
