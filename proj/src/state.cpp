#include "isogate/state.hpp"

#include <cmath>
#include <string>

#include "isogate/constants.hpp"

namespace isogate {

TwoQubitState TwoQubitState::pure(const Eigen::Vector4cd& ket) {
  const Eigen::Vector4cd v = ket.normalized();
  return TwoQubitState(v * v.adjoint());
}

TwoQubitState TwoQubitState::maximally_mixed() {
  return TwoQubitState(DensityMatrix::Identity() * 0.25);
}

TwoQubitState TwoQubitState::prepared(double leak_a, double leak_b) {
  if (!(leak_a >= 0.0 && leak_a <= 1.0 && leak_b >= 0.0 && leak_b <= 1.0))
    throw InvalidInput("state preparation error must lie in [0, 1]");
  const Eigen::Vector2d pa(1.0 - leak_a, leak_a);
  const Eigen::Vector2d pb(1.0 - leak_b, leak_b);
  DensityMatrix rho = DensityMatrix::Zero();
  for (int s = 0; s < 4; ++s) rho(s, s) = pa(qubit_a_bit(s)) * pb(qubit_b_bit(s));
  return TwoQubitState(rho);
}

void TwoQubitState::apply_local(const Unitary2& ua, const Unitary2& ub) { apply(kron(ua, ub)); }

Populations TwoQubitState::populations() const { return rho_.diagonal().real(); }

double TwoQubitState::fidelity(const Eigen::Vector4cd& target) const {
  return std::real(target.dot(rho_ * target));
}

double TwoQubitState::bell_fidelity() const { return fidelity(bell_phi_plus()); }

void TwoQubitState::check_invariants(double tol, double eigen_tol) const {
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw Error("density matrix not Hermitian: deviation " + std::to_string(herm));
  const double trace_err = std::abs(rho_.trace() - cdouble(1.0, 0.0));
  if (trace_err > tol) throw Error("density matrix trace differs from 1 by " + std::to_string(trace_err));
  Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(0.5 * (rho_ + rho_.adjoint()));
  const double smallest = solver.eigenvalues().minCoeff();
  if (smallest < -eigen_tol)
    throw Error("density matrix has negative eigenvalue " + std::to_string(smallest));
}

Eigen::Vector4cd bell_phi_plus() {
  Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

Unitary2 rotation_unitary(double theta, double phi) {
  const double ch = std::cos(0.5 * theta);
  const double sh = std::sin(0.5 * theta);
  const cdouble i{0.0, 1.0};
  Unitary2 u;
  // -i sin (cos phi X + sin phi Y): off-diagonals -i e^{-i phi} sin, -i e^{i phi} sin
  u << ch, -i * std::exp(-i * phi) * sh,
       -i * std::exp(i * phi) * sh, ch;
  return u;
}

Unitary2 z_rotation(double theta) {
  Unitary2 u = Unitary2::Zero();
  u(0, 0) = std::polar(1.0, 0.5 * theta);
  u(1, 1) = std::polar(1.0, -0.5 * theta);
  return u;
}

Unitary2 detuned_rotation(double theta, double phi, double duration_s, double detuning_hz) {
  if (duration_s <= 0.0) return rotation_unitary(theta, phi);
  // H = (Omega/2)(cos phi X + sin phi Y) + (Delta/2) Z in angular units.
  const double omega = theta / duration_s;
  const double delta = constants::two_pi * detuning_hz;
  const double rate = std::hypot(omega, delta);
  if (rate == 0.0) return Unitary2::Identity();
  const double angle = 0.5 * rate * duration_s;
  const double nx = omega * std::cos(phi) / rate;
  const double ny = omega * std::sin(phi) / rate;
  const double nz = delta / rate;
  const cdouble i{0.0, 1.0};
  const double c = std::cos(angle), s = std::sin(angle);
  Unitary2 u;
  // Z|up> = +|up>, basis (down, up): Z = diag(-1, 1)
  u << c + i * s * nz, -i * s * cdouble(nx, -ny),
       -i * s * cdouble(nx, ny), c - i * s * nz;
  return u;
}

Unitary4 kron(const Unitary2& a, const Unitary2& b) {
  Unitary4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const DensityMatrix d = a - b;
  Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(0.5 * (d + d.adjoint()));
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace isogate
