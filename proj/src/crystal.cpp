#include "isogate/crystal.hpp"

#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "isogate/constants.hpp"

namespace isogate::crystal {

namespace c = isogate::constants;

void IonSpecies::validate() const {
  if (!(mass_amu > 0.0)) throw InvalidInput("ion species '" + label + "': mass must be positive");
  if (!(qubit_splitting_hz > 0.0))
    throw InvalidInput("ion species '" + label + "': qubit splitting must be positive");
}

IonOrder flipped(IonOrder order) { return order == IonOrder::AB ? IonOrder::BA : IonOrder::AB; }

const char* to_string(IonOrder order) { return order == IonOrder::AB ? "AB" : "BA"; }

IonOrder ion_order_from_string(const std::string& text) {
  if (text == "AB") return IonOrder::AB;
  if (text == "BA") return IonOrder::BA;
  throw InvalidInput("ion order must be \"AB\" or \"BA\", got \"" + text + "\"");
}

void TwoIonCrystal::validate() const {
  species_a.validate();
  species_b.validate();
  if (!(f_axial_reference_hz > 0.0))
    throw InvalidInput("crystal: reference axial frequency must be positive");
}

double TwoIonCrystal::spring_constant() const {
  const double omega = c::two_pi * f_axial_reference_hz;
  return species_a.mass_amu * c::amu * omega * omega;
}

int TwoIonCrystal::position_of(Qubit which) const {
  const bool a_left = order == IonOrder::AB;
  if (which == Qubit::a) return a_left ? 0 : 1;
  return a_left ? 1 : 0;
}

double TwoIonCrystal::mass_at(int position) const {
  const bool a_here = position_of(Qubit::a) == position;
  return (a_here ? species_a.mass_amu : species_b.mass_amu) * c::amu;
}

double MotionalMode::component(const TwoIonCrystal& crystal, Qubit which) const {
  return eigenvector[static_cast<std::size_t>(crystal.position_of(which))];
}

void BeamGeometry::validate() const {
  if (!(wavelength_m > 0.0)) throw InvalidInput("beam geometry: wavelength must be positive");
  if (!(half_angle_factor > 0.0 && half_angle_factor <= 2.0))
    throw InvalidInput("beam geometry: half_angle_factor must lie in (0, 2]");
}

double BeamGeometry::k_eff() const { return half_angle_factor * c::two_pi / wavelength_m; }

double BeamGeometry::lattice_period() const { return c::two_pi / k_eff(); }

BeamGeometry BeamGeometry::perpendicular(double wavelength_m) {
  return BeamGeometry{wavelength_m, std::sqrt(2.0)};
}

AxialModes solve_axial_modes(const TwoIonCrystal& crystal) {
  crystal.validate();
  // Linearized about equilibrium the Coulomb term contributes exactly one
  // trap spring constant to each diagonal entry and -k off diagonal.
  const double k = crystal.spring_constant();
  Eigen::Matrix2d hessian;
  hessian << 2.0 * k, -k, -k, 2.0 * k;

  const Eigen::Vector2d inv_sqrt_mass(1.0 / std::sqrt(crystal.mass_at(0)),
                                      1.0 / std::sqrt(crystal.mass_at(1)));
  const Eigen::Matrix2d weighted =
      inv_sqrt_mass.asDiagonal() * hessian * inv_sqrt_mass.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(weighted);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  auto make_mode = [&](int index) {
    MotionalMode mode;
    mode.frequency_hz = std::sqrt(values(index)) / c::two_pi;
    Eigen::Vector2d v = vectors.col(index).normalized();
    if (v(0) < 0.0) v = -v;
    mode.eigenvector = {v(0), v(1)};
    return mode;
  };
  return AxialModes{make_mode(0), make_mode(1)};
}

double equilibrium_separation(const TwoIonCrystal& crystal) {
  crystal.validate();
  // k d / 2 = e^2 / (4 pi eps0 d^2)  =>  d^3 = e^2 / (2 pi eps0 k)
  const double e2 = c::elementary_charge * c::elementary_charge;
  return std::cbrt(e2 / (c::two_pi * c::epsilon0 * crystal.spring_constant()));
}

LambDicke lamb_dicke(const MotionalMode& mode, const BeamGeometry& geom,
                     const TwoIonCrystal& crystal) {
  geom.validate();
  crystal.validate();
  if (!(mode.frequency_hz > 0.0)) throw InvalidInput("lamb_dicke: mode frequency must be positive");
  const double omega = c::two_pi * mode.frequency_hz;
  auto eta = [&](Qubit which, double mass_amu) {
    const double zero_point = std::sqrt(c::hbar / (2.0 * mass_amu * c::amu * omega));
    return geom.k_eff() * std::abs(mode.component(crystal, which)) * zero_point;
  };
  return LambDicke{eta(Qubit::a, crystal.species_a.mass_amu),
                   eta(Qubit::b, crystal.species_b.mass_amu)};
}

MotionalMode with_lamb_dicke(MotionalMode mode, const BeamGeometry& geom,
                             const TwoIonCrystal& crystal) {
  const auto eta = lamb_dicke(mode, geom, crystal);
  mode.eta_a = eta.eta_a;
  mode.eta_b = eta.eta_b;
  return mode;
}

StandingWaveAlignment standing_wave_alignment(double separation_m, const BeamGeometry& geom) {
  if (!(separation_m > 0.0)) throw InvalidInput("standing_wave_alignment: separation must be positive");
  geom.validate();
  StandingWaveAlignment out;
  out.periods = separation_m / geom.lattice_period();
  const double half_steps = std::nearbyint(2.0 * out.periods);
  out.relative_force_sign = (static_cast<long long>(half_steps) % 2 == 0) ? 1 : -1;
  out.residual_phase_rad = c::two_pi * (out.periods - 0.5 * half_steps);
  return out;
}

double reference_frequency_for_in_phase(TwoIonCrystal crystal, double target_in_phase_hz) {
  if (!(target_in_phase_hz > 0.0)) throw InvalidInput("target in-phase frequency must be positive");
  crystal.f_axial_reference_hz = target_in_phase_hz;
  crystal.validate();
  auto residual = [&](double f_ref) {
    crystal.f_axial_reference_hz = f_ref;
    return solve_axial_modes(crystal).in_phase.frequency_hz - target_in_phase_hz;
  };
  // The in-phase frequency lies between the two single-ion frequencies,
  // which bounds f_ref by the mass ratio.
  const double ratio = crystal.species_b.mass_amu / crystal.species_a.mass_amu;
  const double spread = std::sqrt(std::max(ratio, 1.0 / ratio));
  double lo = target_in_phase_hz / spread;
  double hi = target_in_phase_hz * spread * 1.01;
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(residual, lo, hi, tol, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

CrystalSummary summarize(const TwoIonCrystal& crystal, const BeamGeometry& geom) {
  CrystalSummary out;
  out.crystal = crystal;
  out.modes = solve_axial_modes(crystal);
  out.modes.in_phase = with_lamb_dicke(out.modes.in_phase, geom, crystal);
  out.modes.out_of_phase = with_lamb_dicke(out.modes.out_of_phase, geom, crystal);
  out.separation_m = equilibrium_separation(crystal);
  out.alignment = standing_wave_alignment(out.separation_m, geom);
  return out;
}

IonSpecies calcium40() { return IonSpecies{39.962591, 5.4e6, "40Ca+"}; }

IonSpecies calcium43() { return IonSpecies{42.958766, 3.2e9, "43Ca+"}; }

}  // namespace isogate::crystal
