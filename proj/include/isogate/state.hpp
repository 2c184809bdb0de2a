#pragma once

#include "isogate/types.hpp"

namespace isogate {

/// Two-qubit density matrix in basis order (dd, du, ud, uu).
class TwoQubitState {
 public:
  TwoQubitState() : rho_(DensityMatrix::Zero()) { rho_(0, 0) = 1.0; }
  explicit TwoQubitState(const DensityMatrix& rho) : rho_(rho) {}

  static TwoQubitState pure(const Eigen::Vector4cd& ket);
  static TwoQubitState maximally_mixed();
  /// Each qubit starts in down, or in up with probability leak_a / leak_b.
  static TwoQubitState prepared(double leak_a = 0.0, double leak_b = 0.0);

  const DensityMatrix& matrix() const { return rho_; }
  DensityMatrix& matrix() { return rho_; }

  void apply(const Unitary4& u) { rho_ = u * rho_ * u.adjoint(); }
  void apply_local(const Unitary2& ua, const Unitary2& ub);

  Populations populations() const;
  double fidelity(const Eigen::Vector4cd& target) const;
  double bell_fidelity() const;

  /// Throws when Hermiticity, unit trace or positivity is violated.
  void check_invariants(double tol = 1e-12, double eigen_tol = 1e-9) const;

 private:
  DensityMatrix rho_;
};

/// (|dd> + |uu>) / sqrt(2).
Eigen::Vector4cd bell_phi_plus();

/// R(theta, phi) = cos(theta/2) I - i sin(theta/2) (cos phi X + sin phi Y).
Unitary2 rotation_unitary(double theta, double phi);

/// exp(-i theta Z / 2) with Z|up> = +|up>.
Unitary2 z_rotation(double theta);

/// Rotation with the drive detuned from the qubit by detuning_hz: the Rabi
/// rate is set so that theta is reached in duration_s on resonance.
Unitary2 detuned_rotation(double theta, double phi, double duration_s, double detuning_hz);

Unitary4 kron(const Unitary2& a, const Unitary2& b);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace isogate
