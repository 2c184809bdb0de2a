#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "isogate/constants.hpp"
#include "isogate/noise.hpp"

namespace isogate::noise {

using crystal::IonOrder;

void DriftModel::validate() const {
  if (!(b0_t > 0.0)) throw InvalidInput("drift: b0_t must be positive");
  if (!(volatility_t_per_sqrt_s >= 0.0)) throw InvalidInput("drift: volatility must be non-negative");
  if (!(correlation_time_s > 0.0)) throw InvalidInput("drift: correlation time must be positive");
  if (!(reorder_flip_probability > 0.0 && reorder_flip_probability <= 1.0))
    throw InvalidInput("drift: reorder flip probability must lie in (0, 1]");
  for (int j = 0; j < 2; ++j) {
    if (!(sensitivity_hz_per_t[j] > 0.0)) throw InvalidInput("drift: sensitivities must be positive");
  }
  const auto f = qubit_frequencies();
  if (!(f[0] > 0.0 && f[1] > 0.0)) throw InvalidInput("drift: qubit frequencies must be positive");
}

std::array<double, 2> DriftModel::qubit_frequencies(IonOrder assumed) const {
  // Position 0 sits at B - dB/2, position 1 at B + dB/2.
  const double b = common_field_t();
  const double field_a = assumed == IonOrder::AB ? b - 0.5 * delta_b_t : b + 0.5 * delta_b_t;
  const double field_b = assumed == IonOrder::AB ? b + 0.5 * delta_b_t : b - 0.5 * delta_b_t;
  return {zero_field_hz[0] + sensitivity_hz_per_t[0] * field_a,
          zero_field_hz[1] + sensitivity_hz_per_t[1] * field_b};
}

DriftModel drift_step(DriftModel model, double dt_s, Rng& rng) {
  if (!(dt_s >= 0.0)) throw InvalidInput("drift_step: dt must be non-negative");
  if (model.volatility_t_per_sqrt_s == 0.0 || dt_s == 0.0) return model;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tau = model.correlation_time_s;
  if (std::isinf(tau)) {
    model.drift_t += model.volatility_t_per_sqrt_s * std::sqrt(dt_s) * normal(rng);
  } else {
    // Exact Ornstein-Uhlenbeck update.
    const double decay = std::exp(-dt_s / tau);
    const double spread = model.volatility_t_per_sqrt_s * std::sqrt(0.5 * tau * (1.0 - decay * decay));
    model.drift_t = model.drift_t * decay + spread * normal(rng);
  }
  return model;
}

OrderEstimate detect_order(const DriftModel& model, const std::array<double, 2>& measured_hz) {
  const double field_a = (measured_hz[0] - model.zero_field_hz[0]) / model.sensitivity_hz_per_t[0];
  const double field_b = (measured_hz[1] - model.zero_field_hz[1]) / model.sensitivity_hz_per_t[1];
  OrderEstimate out;
  out.differential_field_t = field_b - field_a;
  out.order = out.differential_field_t >= 0.0 ? IonOrder::AB : IonOrder::BA;
  return out;
}

ReorderResult reorder(const DriftModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return reorder(model, rng);
}

ReorderResult reorder(const DriftModel& model, Rng& rng) {
  model.validate();
  std::bernoulli_distribution flip(model.reorder_flip_probability);
  ReorderResult out{model.order, 0};
  while (out.order != model.target_order) {
    ++out.cycles;
    if (flip(rng)) out.order = crystal::flipped(out.order);
  }
  return out;
}

double rabi_lineshape(double detuning_hz, double duration_s) {
  const double rabi = constants::pi / duration_s;
  const double delta = constants::two_pi * detuning_hz;
  const double generalized = std::hypot(rabi, delta);
  const double s = std::sin(0.5 * generalized * duration_s);
  return rabi * rabi / (generalized * generalized) * s * s;
}

namespace {

struct LineFit {
  double center_hz = 0.0;
  double sigma_hz = 0.0;
  bool converged = true;
};

LineFit fit_line(const std::vector<double>& scan_hz, const std::vector<double>& flips,
                 int shots, double duration_s, double half_width_hz) {
  const double n = static_cast<double>(shots);
  auto chi2 = [&](double center) {
    double sum = 0.0;
    for (std::size_t i = 0; i < scan_hz.size(); ++i) {
      const double p = rabi_lineshape(center - scan_hz[i], duration_s);
      const double var = std::max(p * (1.0 - p), 0.25 / n) / n;
      const double r = flips[i] - p;
      sum += r * r / var;
    }
    return sum;
  };
  const int grid = 801;
  const double step = 2.0 * half_width_hz / (grid - 1);
  double best = -half_width_hz, best_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid; ++k) {
    const double c = -half_width_hz + step * k;
    const double v = chi2(c);
    if (v < best_value) {
      best_value = v;
      best = c;
    }
  }
  const auto refined = boost::math::tools::brent_find_minima(chi2, best - step, best + step, 40);

  LineFit out;
  out.center_hz = refined.first;
  double information = 0.0;
  const double h = 1e-3 / duration_s;
  for (double x : scan_hz) {
    const double p = rabi_lineshape(out.center_hz - x, duration_s);
    const double dp = (rabi_lineshape(out.center_hz + h - x, duration_s) -
                       rabi_lineshape(out.center_hz - h - x, duration_s)) / (2.0 * h);
    information += n * dp * dp / std::max(p * (1.0 - p), 1.0 / n);
  }
  out.sigma_hz = information > 0.0 ? 1.0 / std::sqrt(information) : half_width_hz;
  const double peak = *std::max_element(flips.begin(), flips.end());
  out.converged = std::abs(out.center_hz) < 0.95 * half_width_hz && peak >= 0.3;
  return out;
}

}  // namespace

ProbeResult calibration_probe(const DriftModel& model, const std::array<double, 2>& lo_hz,
                              const ProbeOptions& options, Rng& rng) {
  if (!(options.duration_s > 0.0)) throw InvalidInput("calibration_probe: duration must be positive");
  if (options.points < 5 || options.shots_per_point < 1)
    throw InvalidInput("calibration_probe: need at least 5 points and 1 shot per point");
  const auto truth = model.qubit_frequencies();
  const double half_width = options.span_in_fourier_widths / options.duration_s;

  std::vector<double> scan(static_cast<std::size_t>(options.points));
  for (int i = 0; i < options.points; ++i)
    scan[i] = -half_width + 2.0 * half_width * i / (options.points - 1);

  ProbeResult out;
  for (int j = 0; j < 2; ++j) {
    const double offset = truth[j] - lo_hz[j];
    std::vector<double> flips(scan.size());
    for (std::size_t i = 0; i < scan.size(); ++i) {
      const double p = rabi_lineshape(offset - scan[i], options.duration_s);
      std::binomial_distribution<int> draw(options.shots_per_point, p);
      flips[i] = static_cast<double>(draw(rng)) / options.shots_per_point;
    }
    const auto fit = fit_line(scan, flips, options.shots_per_point, options.duration_s, half_width);
    out.offset_hz[j] = fit.center_hz;
    out.sigma_hz[j] = fit.sigma_hz;
    out.converged = out.converged && fit.converged;
  }
  return out;
}

CalibrationStep calibrate(DriftModel& model, std::array<double, 2>& lo_hz,
                          const ProbeOptions& options, Rng& rng, double deadband_sigmas) {
  CalibrationStep step;
  step.probe = calibration_probe(model, lo_hz, options, rng);
  if (!step.probe.converged) return step;

  const std::array<double, 2> measured{lo_hz[0] + step.probe.offset_hz[0],
                                       lo_hz[1] + step.probe.offset_hz[1]};
  step.order = detect_order(model, measured);
  if (step.order.order != model.target_order) {
    step.order_wrong = true;
    const auto result = reorder(model, rng);
    step.reorder_cycles = result.cycles;
    model.order = result.order;
    return step;
  }
  for (int j = 0; j < 2; ++j) {
    if (std::abs(step.probe.offset_hz[j]) > deadband_sigmas * step.probe.sigma_hz[j]) {
      step.correction_hz[j] = step.probe.offset_hz[j];
      lo_hz[j] += step.probe.offset_hz[j];
    }
  }
  return step;
}

}  // namespace isogate::noise
