#include <cmath>
#include <random>

#include "doctest.h"

#include "isogate/constants.hpp"
#include "isogate/crystal.hpp"

using namespace isogate;
using namespace isogate::crystal;
namespace c = isogate::constants;

namespace {

TwoIonCrystal calcium_pair(double f_ref, IonOrder order = IonOrder::AB) {
  return {calcium40(), calcium43(), f_ref, order};
}

// Potential energy of the pair in units of k * l^2 with l^3 = e^2 / (4 pi eps0 k).
double scaled_potential(double u1, double u2) {
  return 0.5 * u1 * u1 + 0.5 * u2 * u2 + 1.0 / std::abs(u2 - u1);
}

// Central differences of the scaled potential, two Richardson levels.
Eigen::Matrix2d fd_hessian(double u1, double u2) {
  auto second = [&](int i, int j, double h) {
    auto v = [&](double d1, double d2) { return scaled_potential(u1 + d1, u2 + d2); };
    std::array<double, 2> ei{0, 0}, ej{0, 0};
    ei[i] = h;
    ej[j] = h;
    return (v(ei[0] + ej[0], ei[1] + ej[1]) - v(ei[0] - ej[0], ei[1] - ej[1]) -
            v(-ei[0] + ej[0], -ei[1] + ej[1]) + v(-ei[0] - ej[0], -ei[1] - ej[1])) /
           (4 * h * h);
  };
  auto level1 = [&](int i, int j, double h) { return (4.0 * second(i, j, h / 2) - second(i, j, h)) / 3.0; };
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-2;
      out(i, j) = (16.0 * level1(i, j, h / 2) - level1(i, j, h)) / 15.0;
    }
  return out;
}

struct OracleMode {
  double omega;
  Eigen::Vector2d b;
};

// Normal modes rebuilt from the raw potential: equilibrium by Newton on the
// force, Hessian by finite differences, then the mass-weighted eigenproblem.
std::array<OracleMode, 2> oracle_modes(const TwoIonCrystal& crystal) {
  const double k = crystal.spring_constant();
  // Force balance u = 1 / (2u)^2 on the right ion, solved by Newton.
  double u = 0.5;
  for (int it = 0; it < 100; ++it) {
    const double f = u - 0.25 / (u * u);
    const double df = 1 + 0.5 / (u * u * u);
    u -= f / df;
  }
  const Eigen::Matrix2d h = fd_hessian(-u, u) * k;
  const Eigen::Vector2d m(crystal.mass_at(0), crystal.mass_at(1));
  Eigen::Matrix2d w;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) w(i, j) = h(i, j) / std::sqrt(m[i] * m[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(w);
  std::array<OracleMode, 2> out;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d v = es.eigenvectors().col(i);
    if (v[0] < 0) v = -v;
    out[i] = {std::sqrt(es.eigenvalues()[i]), v};
  }
  return out;
}

}  // namespace

TEST_CASE("equal masses give the textbook modes") {
  const IonSpecies ca = calcium40();
  const TwoIonCrystal crystal{ca, ca, 1.5e6, IonOrder::AB};
  const auto modes = solve_axial_modes(crystal);
  CHECK(modes.in_phase.frequency_hz == doctest::Approx(1.5e6).epsilon(1e-12));
  CHECK(modes.out_of_phase.frequency_hz == doctest::Approx(std::sqrt(3.0) * 1.5e6).epsilon(1e-12));
  CHECK(modes.in_phase.eigenvector[0] == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(modes.in_phase.eigenvector[1] == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(modes.out_of_phase.eigenvector[0] == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(modes.out_of_phase.eigenvector[1] == doctest::Approx(-M_SQRT1_2).epsilon(1e-12));
}

TEST_CASE("modes match a finite-difference oracle of the Coulomb potential") {
  for (double f : {1.0e6, 2.037807e6, 3.0e6}) {
    for (auto order : {IonOrder::AB, IonOrder::BA}) {
      const auto crystal = calcium_pair(f, order);
      const auto modes = solve_axial_modes(crystal);
      const auto oracle = oracle_modes(crystal);
      CHECK(modes.in_phase.frequency_hz == doctest::Approx(oracle[0].omega / c::two_pi).epsilon(1e-9));
      CHECK(modes.out_of_phase.frequency_hz ==
            doctest::Approx(oracle[1].omega / c::two_pi).epsilon(1e-9));
      for (int i = 0; i < 2; ++i)
        CHECK(std::abs(modes.in_phase.eigenvector[i] - oracle[0].b[i]) < 1e-9);
    }
  }
}

TEST_CASE("Lamb-Dicke factors match the ground-state wavepacket size") {
  const auto crystal = calcium_pair(2.037807e6);
  const auto geom = BeamGeometry::perpendicular(397e-9);
  const auto modes = solve_axial_modes(crystal);
  const auto oracle = oracle_modes(crystal);
  for (int m = 0; m < 2; ++m) {
    const MotionalMode& mode = m == 0 ? modes.in_phase : modes.out_of_phase;
    const auto eta = lamb_dicke(mode, geom, crystal);
    // <x_j^2> in the mode ground state is b_j^2 hbar / (2 m_j omega).
    for (int pos = 0; pos < 2; ++pos) {
      const double size = std::abs(oracle[m].b[pos]) *
                          std::sqrt(c::hbar / (2 * crystal.mass_at(pos) * oracle[m].omega));
      const double expected = std::sqrt(2.0) * c::two_pi / 397e-9 * size;
      const double got = pos == crystal.position_of(Qubit::a) ? eta.eta_a : eta.eta_b;
      CHECK(std::abs(got / expected - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("40/43 crystal at 2 MHz in-phase") {
  const auto geom = BeamGeometry::perpendicular(397e-9);
  TwoIonCrystal crystal = calcium_pair(1e6);
  crystal.f_axial_reference_hz = reference_frequency_for_in_phase(crystal, 2.0e6);
  const auto s = summarize(crystal, geom);
  CHECK(s.modes.in_phase.frequency_hz == doctest::Approx(2.0e6).epsilon(1e-12));
  CHECK(crystal.f_axial_reference_hz == doctest::Approx(2.0378065e6).epsilon(1e-7));
  CHECK(std::abs(s.modes.in_phase.eta_a - 0.121) < 0.005);
  CHECK(std::abs(s.modes.in_phase.eta_b - 0.126) < 0.005);
  // Frozen from the oracle above.
  CHECK(s.modes.in_phase.eta_a == doctest::Approx(0.1212274675).epsilon(1e-8));
  CHECK(s.modes.in_phase.eta_b == doctest::Approx(0.1256838990).epsilon(1e-8));
  CHECK(s.modes.out_of_phase.frequency_hz == doctest::Approx(3468625.7396).epsilon(1e-9));
  CHECK(s.separation_m == doctest::Approx(3.5e-6).epsilon(0.02));
  CHECK(s.separation_m / geom.lattice_period() == doctest::Approx(12.5).epsilon(0.01));
  CHECK(s.alignment.relative_force_sign == -1);
  // Heavier ion moves more in the in-phase mode.
  CHECK(s.modes.in_phase.component(crystal, Qubit::b) >
        s.modes.in_phase.component(crystal, Qubit::a));
}

TEST_CASE("separation follows the force balance") {
  const auto crystal = calcium_pair(2.0e6);
  const double k = crystal.spring_constant();
  const double d = equilibrium_separation(crystal);
  const double coulomb = c::elementary_charge * c::elementary_charge / (4 * c::pi * c::epsilon0 * d * d);
  CHECK(coulomb == doctest::Approx(k * d / 2).epsilon(1e-12));
  auto stiffer = crystal;
  stiffer.f_axial_reference_hz *= std::pow(2.0, 1.5);
  CHECK(equilibrium_separation(stiffer) == doctest::Approx(d / 2).epsilon(1e-12));
}

TEST_CASE("standing-wave alignment") {
  const auto geom = BeamGeometry::perpendicular(397e-9);
  const double p = geom.lattice_period();
  CHECK(p == doctest::Approx(397e-9 / std::sqrt(2.0)).epsilon(1e-14));
  auto at = [&](double periods) { return standing_wave_alignment(periods * p, geom); };
  CHECK(at(12.0).relative_force_sign == 1);
  CHECK(std::abs(at(12.0).residual_phase_rad) < 1e-9);
  CHECK(at(12.5).relative_force_sign == -1);
  CHECK(std::abs(at(12.5).residual_phase_rad) < 1e-9);
  CHECK(at(12.45).relative_force_sign == -1);
  CHECK(at(12.45).residual_phase_rad == doctest::Approx(-0.1 * c::pi).epsilon(1e-6));
  CHECK(at(12.1).relative_force_sign == 1);
  CHECK(at(12.1).residual_phase_rad == doctest::Approx(0.2 * c::pi).epsilon(1e-6));
  CHECK(std::abs(at(12.25).residual_phase_rad) == doctest::Approx(0.5 * c::pi).epsilon(1e-9));
}

TEST_CASE("swapping the order swaps the components only") {
  const auto geom = BeamGeometry::perpendicular(397e-9);
  const auto ab = summarize(calcium_pair(2.0e6, IonOrder::AB), geom);
  const auto ba = summarize(calcium_pair(2.0e6, IonOrder::BA), geom);
  CHECK(ab.modes.in_phase.frequency_hz == doctest::Approx(ba.modes.in_phase.frequency_hz).epsilon(1e-14));
  CHECK(ab.modes.in_phase.eta_a == doctest::Approx(ba.modes.in_phase.eta_a).epsilon(1e-12));
  CHECK(ab.modes.in_phase.eigenvector[0] == doctest::Approx(ba.modes.in_phase.eigenvector[1]).epsilon(1e-12));
}

TEST_CASE("mode invariants over random mass ratios") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ratio(0.5, 2.0);
  for (int i = 0; i < 200; ++i) {
    IonSpecies a = calcium40();
    IonSpecies b = calcium40();
    b.mass_amu = a.mass_amu * ratio(rng);
    const auto modes = solve_axial_modes({a, b, 1.3e6, IonOrder::AB});
    CHECK(modes.in_phase.frequency_hz < modes.out_of_phase.frequency_hz);
    const auto& u = modes.in_phase.eigenvector;
    const auto& v = modes.out_of_phase.eigenvector;
    CHECK(std::abs(u[0] * u[0] + u[1] * u[1] - 1) < 1e-12);
    CHECK(std::abs(v[0] * v[0] + v[1] * v[1] - 1) < 1e-12);
    CHECK(std::abs(u[0] * v[0] + u[1] * v[1]) < 1e-12);
    CHECK(u[0] > 0);
    CHECK(u[1] > 0);
    CHECK(v[0] > 0);
  }
}

TEST_CASE("invalid crystals are rejected") {
  auto crystal = calcium_pair(2e6);
  crystal.species_b.mass_amu = 0;
  CHECK_THROWS_AS(solve_axial_modes(crystal), InvalidInput);
  crystal = calcium_pair(-1.0);
  CHECK_THROWS_AS(solve_axial_modes(crystal), InvalidInput);
  CHECK_THROWS_AS(ion_order_from_string("ab"), InvalidInput);
  CHECK_THROWS_AS(BeamGeometry({0.0, 1.0}).validate(), InvalidInput);
}
