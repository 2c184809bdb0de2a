#include "isogate/noise.hpp"

#include <algorithm>
#include <cmath>

namespace isogate::noise {

Eigen::Matrix2d ConfusionMatrix::matrix() const {
  Eigen::Matrix2d m;
  m << 1.0 - eps_bright, eps_dark,
       eps_bright, 1.0 - eps_dark;
  return m;
}

void ConfusionMatrix::validate() const {
  if (!(eps_dark >= 0.0 && eps_dark <= 1.0 && eps_bright >= 0.0 && eps_bright <= 1.0))
    throw InvalidInput("confusion matrix entries must lie in [0, 1]");
}

Eigen::Matrix4d confusion_map(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  a.validate();
  b.validate();
  const Eigen::Matrix2d ma = a.matrix();
  const Eigen::Matrix2d mb = b.matrix();
  Eigen::Matrix4d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = ma(i, j) * mb;
  return out;
}

Populations apply_confusion(const Populations& true_populations, const ConfusionMatrix& a,
                            const ConfusionMatrix& b) {
  if (std::abs(true_populations.sum() - 1.0) > 1e-9 || true_populations.minCoeff() < -1e-12)
    throw InvalidInput("apply_confusion: populations must be a probability vector");
  return confusion_map(a, b) * true_populations;
}

Populations ShotSet::frequencies() const {
  const double n = static_cast<double>(total());
  if (n == 0.0) throw InvalidInput("shot set '" + setting + "' is empty");
  Populations p;
  for (int k = 0; k < 4; ++k) p(k) = static_cast<double>(counts[k]) / n;
  return p;
}

ShotSet sample_shots(const Populations& distribution, std::uint64_t shots, std::uint64_t seed,
                     std::string setting) {
  Rng rng(seed);
  auto out = sample_shots(distribution, shots, rng, std::move(setting));
  out.seed = seed;
  return out;
}

ShotSet sample_shots(const Populations& distribution, std::uint64_t shots, Rng& rng,
                     std::string setting) {
  if (shots == 0) throw InvalidInput("sample_shots: number of shots must be positive");
  if (std::abs(distribution.sum() - 1.0) > 1e-9 || distribution.minCoeff() < -1e-9)
    throw InvalidInput("sample_shots: distribution must be a probability vector");
  const Populations p = distribution.cwiseMax(0.0) / distribution.cwiseMax(0.0).sum();

  ShotSet out;
  out.setting = std::move(setting);
  // Multinomial as a chain of conditional binomials.
  std::uint64_t remaining = shots;
  double mass_left = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (remaining == 0 || mass_left <= 0.0) break;
    const double q = std::clamp(p(k) / mass_left, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(remaining, q);
    out.counts[k] = draw(rng);
    remaining -= out.counts[k];
    mass_left -= p(k);
  }
  out.counts[3] += remaining;
  return out;
}

double depolarizing_strength(double p_scat) {
  if (!(p_scat >= 0.0 && p_scat <= 0.75))
    throw InvalidInput("scattering error must lie in [0, 0.75]");
  // Bell fidelity after both qubits: 1 - (3/4)(1 - (1 - lambda)^2).
  return 1.0 - std::sqrt(1.0 - 4.0 * p_scat / 3.0);
}

void apply_scattering(TwoQubitState& state, double p_scat) {
  const double lambda = depolarizing_strength(p_scat);
  if (lambda == 0.0) return;
  const cdouble i{0.0, 1.0};
  Unitary2 x, y, z;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  const Unitary2 id = Unitary2::Identity();
  const std::array<Unitary2, 3> paulis{x, y, z};
  for (int qubit = 0; qubit < 2; ++qubit) {
    const DensityMatrix rho = state.matrix();
    DensityMatrix twirled = DensityMatrix::Zero();
    for (const auto& p : paulis) {
      const Unitary4 u = qubit == 0 ? kron(p, id) : kron(id, p);
      twirled += u * rho * u.adjoint();
    }
    // (1 - lambda) rho + lambda I/2 (x) Tr_q rho == (1 - 3 lambda / 4) rho + lambda / 4 sum P rho P
    state.matrix() = (1.0 - 0.75 * lambda) * rho + 0.25 * lambda * twirled;
  }
}

void NoiseConfig::validate() const {
  readout_a.validate();
  readout_b.validate();
  if (!(state_prep_error >= 0.0 && state_prep_error <= 1.0))
    throw InvalidInput("noise: state_prep_error must lie in [0, 1]");
  depolarizing_strength(scattering_error);
  if (!(detuning_jitter_hz >= 0.0)) throw InvalidInput("noise: detuning_jitter_hz must be non-negative");
  if (!(nbar >= 0.0)) throw InvalidInput("noise: nbar must be non-negative");
}

}  // namespace isogate::noise
