#include "isogate/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "isogate/constants.hpp"

namespace isogate::dynamics {

namespace c = isogate::constants;

namespace {

constexpr cdouble kI{0.0, 1.0};

// phi1(z) = (e^z - 1) / z and phi2(z) = (e^z - 1 - z) / z^2 without the
// cancellation near z = 0.
cdouble phi1(cdouble z) {
  if (std::abs(z) > 0.1) return (std::exp(z) - 1.0) / z;
  cdouble term = 1.0, sum = 0.0;
  for (int n = 1; n < 16; ++n) {
    sum += term;
    term *= z / static_cast<double>(n + 1);
  }
  return sum;
}

cdouble phi2(cdouble z) {
  if (std::abs(z) > 0.1) return (std::exp(z) - 1.0 - z) / (z * z);
  cdouble term = 0.5, sum = 0.0;
  for (int n = 2; n < 17; ++n) {
    sum += term;
    term *= z / static_cast<double>(n + 1);
  }
  return sum;
}

struct UniformGrid {
  double t0 = 0.0;
  double t1 = 0.0;
  double step = 0.0;
  std::size_t intervals = 0;
  // The last node is pinned to t1 so rounding cannot push it off the support.
  double at(std::size_t k) const { return k == intervals ? t1 : t0 + step * static_cast<double>(k); }
};

UniformGrid make_grid(const DriveConfig& drive, const Envelope& env, std::size_t samples) {
  const double span = env.end() - env.begin();
  const double required = kMinSamplesPerDrivePeriod * drive.difference_frequency_hz * span;
  if (samples == 0) samples = default_sample_count(drive, env);
  if (static_cast<double>(samples) + 1e-9 < required) {
    throw SamplingError("time grid of " + std::to_string(samples) +
                        " intervals under-resolves the drive; need at least " +
                        std::to_string(static_cast<std::size_t>(std::ceil(required))));
  }
  return UniformGrid{env.begin(), env.end(), span / static_cast<double>(samples), samples};
}

// Integrals of env(t) exp(i omega t) over each grid interval with the
// envelope interpolated linearly and the exponential integrated exactly.
std::vector<cdouble> segment_integrals(const Envelope& env, const UniformGrid& grid,
                                       double omega) {
  const cdouble z = kI * omega * grid.step;
  const cdouble i0 = grid.step * phi1(z);
  const cdouble i1_over_h = grid.step * phi2(z);
  const cdouble w_left = i0 - i1_over_h;
  const cdouble w_right = i1_over_h;

  std::vector<cdouble> out(grid.intervals);
  double e_left = env.value(grid.at(0));
  for (std::size_t k = 0; k < grid.intervals; ++k) {
    const double t = grid.at(k);
    const double e_right = env.value(grid.at(k + 1));
    out[k] = std::exp(kI * omega * t) * (w_left * e_left + w_right * e_right);
    e_left = e_right;
  }
  return out;
}

cdouble envelope_transform(const Envelope& env, const UniformGrid& grid, double omega) {
  cdouble sum = 0.0;
  for (const auto& v : segment_integrals(env, grid, omega)) sum += v;
  return sum;
}

}  // namespace

void DriveConfig::validate() const {
  if (!(difference_frequency_hz > 0.0) || !std::isfinite(difference_frequency_hz))
    throw InvalidInput("drive: difference frequency must be positive");
  if (gate_detuning_hz == 0.0 || !std::isfinite(gate_detuning_hz))
    throw InvalidInput("drive: gate detuning must be non-zero");
  for (double v : {couplings.a_up, couplings.a_down, couplings.b_up, couplings.b_down,
                   optical_phase_rad, light_shift_a_hz, light_shift_b_hz, raman_detuning_hz}) {
    if (!std::isfinite(v)) throw InvalidInput("drive: all parameters must be finite");
  }
}

DriveConfig DriveConfig::for_mode(double mode_frequency_hz, double gate_detuning_hz) {
  DriveConfig drive;
  drive.gate_detuning_hz = gate_detuning_hz;
  drive.difference_frequency_hz = mode_frequency_hz + gate_detuning_hz;
  return drive;
}

std::size_t default_sample_count(const DriveConfig& drive, const Envelope& env) {
  const double span = env.end() - env.begin();
  const double n = std::ceil(kDefaultSamplesPerDrivePeriod * drive.difference_frequency_hz * span);
  return std::max<std::size_t>(256, static_cast<std::size_t>(n));
}

BasisStateTrajectory displacement_trajectory(const DriveConfig& drive, const Envelope& env,
                                             double state_coupling_hz, std::size_t samples,
                                             Basis label) {
  drive.validate();
  env.validate();
  const UniformGrid grid = make_grid(drive, env, samples);
  const double omega = c::two_pi * drive.gate_detuning_hz;
  const cdouble prefactor = -kI * c::two_pi * state_coupling_hz * std::exp(kI * drive.optical_phase_rad);

  BasisStateTrajectory out;
  out.basis_state = label;
  out.times.resize(grid.intervals + 1);
  out.alpha_samples.resize(grid.intervals + 1);
  out.times[0] = grid.at(0);
  out.alpha_samples[0] = 0.0;

  const auto pieces = segment_integrals(env, grid, omega);
  for (std::size_t k = 0; k < grid.intervals; ++k) {
    out.times[k + 1] = grid.at(k + 1);
    out.alpha_samples[k + 1] = out.alpha_samples[k] + prefactor * pieces[k];
  }

  // Phase = int Im(conj(alpha) d alpha/dt) dt with the analytic derivative.
  auto integrand = [&](std::size_t k) {
    const double t = out.times[k];
    const cdouble rate = prefactor * env.value(t) * std::exp(kI * omega * t);
    return std::imag(std::conj(out.alpha_samples[k]) * rate);
  };
  double phase = 0.5 * (integrand(0) + integrand(grid.intervals));
  for (std::size_t k = 1; k < grid.intervals; ++k) phase += integrand(k);
  out.geometric_phase = phase * grid.step;
  out.final_displacement = out.alpha_samples.back();
  return out;
}

double square_loop_phase(double coupling_hz, double gate_detuning_hz) {
  const double ratio = coupling_hz / gate_detuning_hz;
  return c::two_pi * ratio * ratio;
}

Eigen::Matrix4d GateChannel::coherence_factors() const {
  Eigen::Matrix4d out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double d2 = std::norm(displacements[i] - displacements[j]);
      out(i, j) = std::exp(-0.5 * d2 * (2.0 * nbar + 1.0));
    }
  }
  return out;
}

std::array<double, 4> GateChannel::relative_phases() const {
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = phases[i] - phases[0];
  return out;
}

DensityMatrix GateChannel::apply(const DensityMatrix& rho) const {
  const Eigen::Matrix4d coherence = coherence_factors();
  DensityMatrix out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double overlap_phase = std::imag(displacements[i] * std::conj(displacements[j]));
      const double phase = phases[i] - phases[j] + overlap_phase;
      out(i, j) = rho(i, j) * std::polar(coherence(i, j), phase);
    }
  }
  return out;
}

GateChannel GateChannel::identity(double nbar) {
  GateChannel out;
  out.nbar = nbar;
  return out;
}

std::array<double, 4> basis_couplings(const DriveConfig& drive, const crystal::MotionalMode& mode,
                                      int force_sign) {
  if (force_sign != 1 && force_sign != -1) throw InvalidInput("force sign must be +1 or -1");
  std::array<double, 4> out{};
  for (int s = 0; s < 4; ++s) {
    out[s] = mode.eta_a * drive.couplings.a(qubit_a_bit(s)) +
             force_sign * mode.eta_b * drive.couplings.b(qubit_b_bit(s));
  }
  return out;
}

GateChannel gate_half_channel(const DriveConfig& drive, const Envelope& env,
                              const crystal::MotionalMode& mode, int force_sign, double nbar,
                              std::size_t samples) {
  if (!(mode.eta_a > 0.0 && mode.eta_b > 0.0))
    throw InvalidInput("gate_half_channel: mode needs populated Lamb-Dicke parameters");
  if (!(nbar >= 0.0)) throw InvalidInput("gate_half_channel: nbar must be non-negative");
  const auto couplings = basis_couplings(drive, mode, force_sign);
  GateChannel out;
  out.nbar = nbar;
  for (int s = 0; s < 4; ++s) {
    const auto traj =
        displacement_trajectory(drive, env, couplings[s], samples, static_cast<Basis>(s));
    out.phases[s] = traj.geometric_phase;
    out.displacements[s] = traj.final_displacement;
  }
  return out;
}

GateChannel compose_symmetrized_gate(const GateChannel& first, const GateChannel& second) {
  // D(b) D(a) = exp(i Im(b conj(a))) D(a + b)
  GateChannel out;
  out.nbar = first.nbar;
  for (int s = 0; s < 4; ++s) {
    const int flipped = double_flip(s);
    const cdouble a = first.displacements[s];
    const cdouble b = second.displacements[flipped];
    out.phases[s] = first.phases[s] + second.phases[flipped] + std::imag(b * std::conj(a));
    out.displacements[s] = a + b;
  }
  return out;
}

double coupling_scale_for_phase(const DriveConfig& drive, const Envelope& env,
                                const crystal::MotionalMode& mode, int force_sign,
                                double target_phase_rad) {
  const auto half = gate_half_channel(drive, env, mode, force_sign);
  const double phase = compose_symmetrized_gate(half, half).relative_phases()[1];
  if (phase == 0.0 || phase * target_phase_rad < 0.0) {
    throw InvalidInput("coupling_scale_for_phase: drive gives relative phase " +
                       std::to_string(phase) + ", cannot reach the target by scaling");
  }
  return std::sqrt(target_phase_rad / phase);
}

LightShiftResult light_shift_phase(const DriveConfig& drive, const Envelope& env,
                                   std::size_t samples) {
  drive.validate();
  env.validate();
  const UniformGrid grid = make_grid(drive, env, samples);
  const cdouble transform =
      c::two_pi * envelope_transform(env, grid, c::two_pi * drive.difference_frequency_hz);

  LightShiftResult out;
  const std::size_t n = kOpticalPhaseGridPoints;
  out.optical_phases.resize(n);
  out.phase_a.resize(n);
  out.phase_b.resize(n);
  out.fidelity_loss.resize(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double phi = c::two_pi * static_cast<double>(k) / static_cast<double>(n);
    const double projected = std::real(std::exp(kI * phi) * transform);
    out.optical_phases[k] = phi;
    out.phase_a[k] = drive.light_shift_a_hz * projected;
    out.phase_b[k] = drive.light_shift_b_hz * projected;
    const double s = std::sin(0.5 * (out.phase_a[k] + out.phase_b[k]));
    out.fidelity_loss[k] = s * s;
    total += out.fidelity_loss[k];
  }
  out.mean_loss = total / static_cast<double>(n);
  return out;
}

std::array<double, 2> light_shift_phases_at(const DriveConfig& drive, const Envelope& env,
                                            double start_time_s, std::size_t samples) {
  if (drive.light_shift_a_hz == 0.0 && drive.light_shift_b_hz == 0.0) return {0.0, 0.0};
  const UniformGrid grid = make_grid(drive, env, samples);
  const double omega = c::two_pi * drive.difference_frequency_hz;
  const cdouble transform = c::two_pi * envelope_transform(env, grid, omega);
  const double phi = drive.optical_phase_rad + omega * start_time_s;
  const double projected = std::real(std::exp(kI * phi) * transform);
  return {drive.light_shift_a_hz * projected, drive.light_shift_b_hz * projected};
}

double calibrate_light_shift_scale(const DriveConfig& drive, const Envelope& env,
                                   double target_loss) {
  if (!(target_loss > 0.0 && target_loss < 0.5))
    throw InvalidInput("calibrate_light_shift_scale: target loss must lie in (0, 0.5)");
  if (drive.light_shift_a_hz == 0.0 && drive.light_shift_b_hz == 0.0)
    throw InvalidInput("calibrate_light_shift_scale: light-shift amplitudes are zero");
  auto loss_at = [&](double scale) {
    DriveConfig scaled = drive;
    scaled.light_shift_a_hz *= scale;
    scaled.light_shift_b_hz *= scale;
    return light_shift_phase(scaled, env).mean_loss - target_loss;
  };
  // The loss grows monotonically from zero until the first Bessel extremum,
  // so walk up from a tiny scale and stop at the first bracket.
  double lo = 0.0, hi = 1e-6;
  while (loss_at(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error("calibrate_light_shift_scale: target loss not reachable");
  }
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t iterations = 200;
  const auto root = boost::math::tools::toms748_solve(loss_at, lo, hi, tol, iterations);
  return 0.5 * (root.first + root.second);
}

}  // namespace isogate::dynamics
