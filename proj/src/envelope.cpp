#include <cmath>
#include <string>

#include "isogate/dynamics.hpp"

namespace isogate::dynamics {

namespace {
// 10-90 % rise of an erf edge spans 2 * 1.28155 sigma.
constexpr double kRiseTimeInSigma = 2.0 * 1.2815515655446004;
constexpr double kSupportInSigma = 8.0;
}  // namespace

const char* to_string(EnvelopeShape shape) {
  return shape == EnvelopeShape::square ? "square" : "shaped";
}

EnvelopeShape envelope_shape_from_string(const std::string& text) {
  if (text == "square") return EnvelopeShape::square;
  if (text == "shaped") return EnvelopeShape::shaped;
  throw InvalidInput("envelope shape must be \"square\" or \"shaped\", got \"" + text + "\"");
}

void Envelope::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw InvalidInput("envelope: duration must be positive");
  if (!(ramp_time_s >= 0.0 && ramp_time_s <= 0.5 * duration_s))
    throw InvalidInput("envelope: ramp time must lie in [0, duration / 2]");
}

double Envelope::sigma() const {
  return shape == EnvelopeShape::shaped ? ramp_time_s / kRiseTimeInSigma : 0.0;
}

double Envelope::begin() const { return -kSupportInSigma * sigma(); }

double Envelope::end() const { return duration_s + kSupportInSigma * sigma(); }

double Envelope::value(double t) const {
  if (t < begin() || t > end()) return 0.0;
  const double s = sigma();
  if (s == 0.0) return (t >= 0.0 && t <= duration_s) ? 1.0 : 0.0;
  const double scale = 1.0 / (std::sqrt(2.0) * s);
  return 0.5 * (std::erf(t * scale) - std::erf((t - duration_s) * scale));
}

}  // namespace isogate::dynamics
