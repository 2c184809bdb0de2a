#pragma once

#include <array>
#include <string>

#include "isogate/types.hpp"

/// Geometry of a two-ion mixed-mass crystal: equilibrium spacing, axial
/// normal modes, Lamb-Dicke factors and the standing-wave force alignment.
namespace isogate::crystal {

struct IonSpecies {
  double mass_amu = 0.0;
  double qubit_splitting_hz = 0.0;
  std::string label;

  void validate() const;
};

/// Position order of the two species along the trap axis (left to right).
enum class IonOrder { AB, BA };

IonOrder flipped(IonOrder order);
const char* to_string(IonOrder order);
IonOrder ion_order_from_string(const std::string& text);

/// Two ions in a common harmonic axial well. The well is parameterized by
/// the single-ion axial frequency species_a would have on its own.
struct TwoIonCrystal {
  IonSpecies species_a;
  IonSpecies species_b;
  double f_axial_reference_hz = 0.0;
  IonOrder order = IonOrder::AB;

  void validate() const;
  /// Axial spring constant k = m_a (2 pi f_ref)^2, identical for both ions.
  double spring_constant() const;
  /// Mass in kg of the ion sitting at position 0 (left) or 1 (right).
  double mass_at(int position) const;
  /// Position (0 or 1) of the given species.
  int position_of(Qubit which) const;
};

struct MotionalMode {
  double frequency_hz = 0.0;
  /// Mass-weighted normalized eigenvector in position order (left, right).
  std::array<double, 2> eigenvector{};
  double eta_a = 0.0;
  double eta_b = 0.0;

  /// Eigenvector component belonging to the given species.
  double component(const TwoIonCrystal& crystal, Qubit which) const;
};

struct AxialModes {
  MotionalMode in_phase;
  MotionalMode out_of_phase;
};

struct BeamGeometry {
  double wavelength_m = 0.0;
  /// |delta k| along the trap axis in units of 2 pi / wavelength.
  double half_angle_factor = 0.0;

  void validate() const;
  double k_eff() const;
  double lattice_period() const;

  /// Two beams crossing at 90 degrees with their difference vector on axis.
  static BeamGeometry perpendicular(double wavelength_m);
};

/// Both axial modes, sorted ascending in frequency. The in-phase eigenvector
/// has both components positive; the out-of-phase one has the left ion
/// positive. Eta fields are left at zero (see with_lamb_dicke).
AxialModes solve_axial_modes(const TwoIonCrystal& crystal);

/// Ion spacing where the Coulomb repulsion balances the trap restoring force.
double equilibrium_separation(const TwoIonCrystal& crystal);

struct LambDicke {
  double eta_a = 0.0;
  double eta_b = 0.0;
};

LambDicke lamb_dicke(const MotionalMode& mode, const BeamGeometry& geom,
                     const TwoIonCrystal& crystal);

/// Copy of mode with eta_a / eta_b filled in.
MotionalMode with_lamb_dicke(MotionalMode mode, const BeamGeometry& geom,
                             const TwoIonCrystal& crystal);

struct StandingWaveAlignment {
  /// -1 when the spacing is a half-integer number of lattice periods.
  int relative_force_sign = 1;
  /// Signed phase mismatch from the nearest integer or half-integer point.
  double residual_phase_rad = 0.0;
  double periods = 0.0;
};

StandingWaveAlignment standing_wave_alignment(double separation_m, const BeamGeometry& geom);

/// Single-ion reference frequency that puts the in-phase mode at target_hz.
double reference_frequency_for_in_phase(TwoIonCrystal crystal, double target_in_phase_hz);

/// Everything the gate model needs from the crystal, bundled.
struct CrystalSummary {
  TwoIonCrystal crystal;
  AxialModes modes;  ///< in_phase carries populated eta values
  double separation_m = 0.0;
  StandingWaveAlignment alignment;
};

CrystalSummary summarize(const TwoIonCrystal& crystal, const BeamGeometry& geom);

/// Species presets using isotope masses.
IonSpecies calcium40();
IonSpecies calcium43();

}  // namespace isogate::crystal
