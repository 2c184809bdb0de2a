#include "isogate/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

namespace isogate::config {

using nlohmann::json;

namespace {

// Tracks which keys of one JSON object were consumed so that leftovers can
// be reported as unknown fields.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  Section child(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required section");
    return Section(raw(key), field(key));
  }

  double number(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key) || obj_.at(key).is_null()) {
      if (has(key)) seen_.insert(key);
      return std::nullopt;
    }
    return number(key);
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    throw ConfigError(field(key), "must be a non-negative integer");
  }

  std::uint64_t required_count(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return count(key, 0);
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key), "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::array<double, 2> pair(const std::string& key, std::array<double, 2> fallback) {
    if (!has(key)) return fallback;
    const auto v = numbers(key, {});
    if (v.size() != 2) throw ConfigError(field(key), "must hold exactly two numbers (qubit a, qubit b)");
    return {v[0], v[1]};
  }

  // Parses an enum through a converter that throws InvalidInput.
  template <class Fn>
  auto choice(const std::string& key, decltype(std::declval<Fn>()(std::string{})) fallback, Fn convert) {
    if (!has(key)) return fallback;
    const std::string value = text(key, "");
    try {
      return convert(value);
    } catch (const InvalidInput& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
void checked(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
}

crystal::IonSpecies parse_species(Section s, const crystal::IonSpecies& fallback) {
  crystal::IonSpecies out = fallback;
  out.label = s.text("label", fallback.label);
  out.mass_amu = s.number("mass_amu", fallback.mass_amu);
  out.qubit_splitting_hz = s.number("qubit_splitting_hz", fallback.qubit_splitting_hz);
  s.finish();
  return out;
}

CrystalConfig parse_crystal(Section s) {
  CrystalConfig out;
  if (s.has("species_a")) out.species_a = parse_species(s.child("species_a"), out.species_a);
  if (s.has("species_b")) out.species_b = parse_species(s.child("species_b"), out.species_b);
  out.order = s.choice("order", out.order, crystal::ion_order_from_string);
  out.in_phase_frequency_hz = s.optional_number("in_phase_frequency_hz");
  out.axial_reference_frequency_hz = s.optional_number("axial_reference_frequency_hz");
  if (out.in_phase_frequency_hz.has_value() == out.axial_reference_frequency_hz.has_value())
    throw ConfigError(s.field("in_phase_frequency_hz"),
                      "give exactly one of in_phase_frequency_hz and axial_reference_frequency_hz");
  if (s.has("beam")) {
    Section b = s.child("beam");
    out.beam.wavelength_m = b.number("wavelength_m", out.beam.wavelength_m);
    out.beam.half_angle_factor = b.number("half_angle_factor", out.beam.half_angle_factor);
    b.finish();
  }
  s.finish();
  return out;
}

GateConfig parse_gate(Section s) {
  GateConfig out;
  out.raman_detuning_hz = s.number("raman_detuning_hz", out.raman_detuning_hz);
  out.gate_time_s = s.number("gate_time_s", out.gate_time_s);
  out.gate_detuning_hz = s.number("gate_detuning_hz", out.gate_detuning_hz);
  {
    Section c = s.child("couplings_hz");
    out.couplings_hz.a_up = c.number("a_up");
    out.couplings_hz.a_down = c.number("a_down");
    out.couplings_hz.b_up = c.number("b_up");
    out.couplings_hz.b_down = c.number("b_down");
    c.finish();
  }
  out.optical_phase_rad = s.number("optical_phase_rad", out.optical_phase_rad);
  if (s.has("light_shift_hz")) {
    Section l = s.child("light_shift_hz");
    out.light_shift_a_hz = l.number("a", 0.0);
    out.light_shift_b_hz = l.number("b", 0.0);
    l.finish();
  }
  if (s.has("envelope")) {
    Section e = s.child("envelope");
    out.shape = e.choice("shape", out.shape, dynamics::envelope_shape_from_string);
    out.ramp_time_s = e.number("ramp_time_s", out.ramp_time_s);
    e.finish();
  }
  if (s.has("force_sign")) {
    const json& v = s.raw("force_sign");
    if (v.is_string() && v.get<std::string>() == "auto") {
      out.force_sign.reset();
    } else if (v.is_number_integer() && (v.get<int>() == 1 || v.get<int>() == -1)) {
      out.force_sign = v.get<int>();
    } else {
      throw ConfigError(s.field("force_sign"), "must be 1, -1 or \"auto\"");
    }
  }
  out.echo = s.boolean("echo", out.echo);
  s.finish();
  return out;
}

noise::ConfusionMatrix parse_confusion(Section s) {
  noise::ConfusionMatrix out;
  if (s.has("eps_mean")) {
    if (s.has("eps_dark") || s.has("eps_bright"))
      throw ConfigError(s.field("eps_mean"), "use either eps_mean or eps_dark/eps_bright");
    out = noise::ConfusionMatrix::symmetric(s.number("eps_mean"));
  } else {
    out.eps_dark = s.number("eps_dark", 0.0);
    out.eps_bright = s.number("eps_bright", 0.0);
  }
  s.finish();
  return out;
}

noise::NoiseConfig parse_noise(Section s) {
  noise::NoiseConfig out;
  if (s.has("readout")) {
    Section r = s.child("readout");
    if (r.has("a")) out.readout_a = parse_confusion(r.child("a"));
    if (r.has("b")) out.readout_b = parse_confusion(r.child("b"));
    r.finish();
  }
  out.state_prep_error = s.number("state_prep_error", 0.0);
  out.scattering_error = s.number("scattering_error", 0.0);
  out.qubit_detuning_hz = s.pair("qubit_detuning_hz", {0.0, 0.0});
  out.detuning_jitter_hz = s.number("detuning_jitter_hz", 0.0);
  out.nbar = s.number("nbar", 0.0);
  out.finite_duration_rotations = s.boolean("finite_duration_rotations", false);
  s.finish();
  return out;
}

GateFidelityConfig parse_gate_fidelity(Section s) {
  GateFidelityConfig out;
  out.scan_points = s.integer("scan_points", out.scan_points);
  out.phase_start_rad = s.number("phase_start_rad", out.phase_start_rad);
  out.phase_stop_rad = s.number("phase_stop_rad", out.phase_stop_rad);
  out.shots_per_point = s.count("shots_per_point", out.shots_per_point);
  out.population_shots = s.count("population_shots", out.population_shots);
  out.readout_correction = s.boolean("readout_correction", out.readout_correction);
  s.finish();
  return out;
}

TomographyConfig parse_tomography(Section s) {
  TomographyConfig out;
  out.shots_per_setting = s.count("shots_per_setting", out.shots_per_setting);
  out.readout = s.choice("readout_handling", out.readout, analysis::readout_handling_from_string);
  out.max_iterations = s.integer("max_iterations", out.max_iterations);
  s.finish();
  return out;
}

ChshConfig parse_chsh(Section s) {
  ChshConfig out;
  out.shots_per_setting = s.count("shots_per_setting", out.shots_per_setting);
  if (s.has("angles_rad")) {
    Section a = s.child("angles_rad");
    out.angles.theta_a = a.number("theta_a", out.angles.theta_a);
    out.angles.theta_a_prime = a.number("theta_a_prime", out.angles.theta_a_prime);
    out.angles.theta_b = a.number("theta_b", out.angles.theta_b);
    out.angles.theta_b_prime = a.number("theta_b_prime", out.angles.theta_b_prime);
    a.finish();
  }
  out.detection_error = s.optional_number("detection_error");
  s.finish();
  return out;
}

LightShiftSweepConfig parse_lightshift(Section s) {
  LightShiftSweepConfig out;
  out.ramp_times_s = s.numbers("ramp_times_s", out.ramp_times_s);
  out.target_square_loss = s.optional_number("target_square_loss");
  out.phase_offsets_rad = s.numbers("phase_offsets_rad", out.phase_offsets_rad);
  s.finish();
  return out;
}

CalibrationDriftConfig parse_calibration(Section s) {
  CalibrationDriftConfig out;
  if (s.has("drift")) {
    Section d = s.child("drift");
    auto& m = out.drift;
    m.b0_t = d.number("b0_t", m.b0_t);
    m.delta_b_t = d.number("delta_b_t", m.delta_b_t);
    m.common_offset_t = d.number("common_offset_t", m.common_offset_t);
    m.volatility_t_per_sqrt_s = d.number("volatility_t_per_sqrt_s", m.volatility_t_per_sqrt_s);
    if (d.has("correlation_time_s") && d.raw("correlation_time_s").is_null()) {
      m.correlation_time_s = std::numeric_limits<double>::infinity();
    } else {
      m.correlation_time_s = d.number("correlation_time_s", m.correlation_time_s);
    }
    m.sensitivity_hz_per_t = d.pair("sensitivity_hz_per_t", m.sensitivity_hz_per_t);
    m.zero_field_hz = d.pair("zero_field_hz", m.zero_field_hz);
    m.order = d.choice("order", m.order, crystal::ion_order_from_string);
    m.target_order = d.choice("target_order", m.target_order, crystal::ion_order_from_string);
    m.reorder_flip_probability = d.number("reorder_flip_probability", m.reorder_flip_probability);
    d.finish();
  }
  if (s.has("probe")) {
    Section p = s.child("probe");
    out.probe.duration_s = p.number("duration_s", out.probe.duration_s);
    out.probe.points = p.integer("points", out.probe.points);
    out.probe.span_in_fourier_widths = p.number("span_in_fourier_widths", out.probe.span_in_fourier_widths);
    out.probe.shots_per_point = p.integer("shots_per_point", out.probe.shots_per_point);
    p.finish();
  }
  out.cycles = s.integer("cycles", out.cycles);
  out.interval_s = s.number("interval_s", out.interval_s);
  out.lo_offset_hz = s.pair("lo_offset_hz", out.lo_offset_hz);
  out.deadband_sigmas = s.number("deadband_sigmas", out.deadband_sigmas);
  out.reorder_trials = s.integer("reorder_trials", out.reorder_trials);
  s.finish();
  return out;
}

bool uses_physics(ScenarioKind k) {
  return k != ScenarioKind::calibration_drift && k != ScenarioKind::mode_geometry;
}
bool uses_noise(ScenarioKind k) {
  return k == ScenarioKind::gate_fidelity || k == ScenarioKind::tomography || k == ScenarioKind::chsh;
}

json species_json(const crystal::IonSpecies& s) {
  return {{"label", s.label}, {"mass_amu", s.mass_amu}, {"qubit_splitting_hz", s.qubit_splitting_hz}};
}

json confusion_json(const noise::ConfusionMatrix& c) {
  return {{"eps_dark", c.eps_dark}, {"eps_bright", c.eps_bright}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::gate_fidelity:
      return "gate_fidelity";
    case ScenarioKind::tomography:
      return "tomography";
    case ScenarioKind::chsh:
      return "chsh";
    case ScenarioKind::lightshift_sweep:
      return "lightshift_sweep";
    case ScenarioKind::calibration_drift:
      return "calibration_drift";
    case ScenarioKind::mode_geometry:
      return "mode_geometry";
  }
  return "gate_fidelity";
}

const std::vector<ScenarioKind>& all_scenarios() {
  static const std::vector<ScenarioKind> kinds{
      ScenarioKind::gate_fidelity,    ScenarioKind::tomography,        ScenarioKind::chsh,
      ScenarioKind::lightshift_sweep, ScenarioKind::calibration_drift, ScenarioKind::mode_geometry};
  return kinds;
}

ScenarioKind scenario_kind_from_string(const std::string& text) {
  for (auto k : all_scenarios())
    if (text == to_string(k)) return k;
  throw InvalidInput("unknown scenario '" + text +
                     "' (expected gate_fidelity, tomography, chsh, lightshift_sweep, "
                     "calibration_drift or mode_geometry)");
}

double GateConfig::resolved_gate_detuning_hz() const {
  return gate_detuning_hz != 0.0 ? gate_detuning_hz : 2.0 / gate_time_s;
}

void Scenario::validate() const {
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  checked("crystal.species_a", [&] { crystal.species_a.validate(); });
  checked("crystal.species_b", [&] { crystal.species_b.validate(); });
  checked("crystal.beam", [&] { crystal.beam.validate(); });
  const auto freq = crystal.in_phase_frequency_hz ? crystal.in_phase_frequency_hz
                                                  : crystal.axial_reference_frequency_hz;
  if (!freq || !(*freq > 0.0))
    throw ConfigError("crystal.in_phase_frequency_hz", "trap frequency must be positive");

  if (uses_physics(kind)) {
    if (!(gate.gate_time_s > 0.0)) throw ConfigError("gate.gate_time_s", "must be positive");
    if (!(gate.ramp_time_s >= 0.0 && gate.ramp_time_s <= 0.25 * gate.gate_time_s))
      throw ConfigError("gate.envelope.ramp_time_s", "must lie in [0, gate_time_s / 4]");
  }
  if (uses_noise(kind)) checked("noise", [&] { noise.validate(); });

  switch (kind) {
    case ScenarioKind::gate_fidelity: {
      const auto& g = gate_fidelity;
      if (g.scan_points < 5) throw ConfigError("gate_fidelity.scan_points", "need at least 5 points");
      if (!(g.phase_stop_rad > g.phase_start_rad))
        throw ConfigError("gate_fidelity.phase_stop_rad", "must exceed phase_start_rad");
      if ((g.shots_per_point == 0) != (g.population_shots == 0))
        throw ConfigError("gate_fidelity.population_shots",
                          "shots_per_point and population_shots must both be zero (exact) or both positive");
      break;
    }
    case ScenarioKind::tomography:
      if (tomography.shots_per_setting < 100)
        throw ConfigError("tomography.shots_per_setting", "need at least 100 shots per setting");
      if (tomography.max_iterations < 1)
        throw ConfigError("tomography.max_iterations", "must be positive");
      break;
    case ScenarioKind::chsh:
      if (chsh.shots_per_setting == 0) throw ConfigError("chsh.shots_per_setting", "must be positive");
      if (chsh.detection_error && !(*chsh.detection_error >= 0.0 && *chsh.detection_error < 0.5))
        throw ConfigError("chsh.detection_error", "must lie in [0, 0.5)");
      break;
    case ScenarioKind::lightshift_sweep:
      if (lightshift_sweep.ramp_times_s.empty())
        throw ConfigError("lightshift_sweep.ramp_times_s", "must not be empty");
      for (double r : lightshift_sweep.ramp_times_s)
        if (!(r >= 0.0 && r <= 0.25 * gate.gate_time_s))
          throw ConfigError("lightshift_sweep.ramp_times_s", "entries must lie in [0, gate_time_s / 4]");
      if (lightshift_sweep.target_square_loss &&
          !(*lightshift_sweep.target_square_loss > 0.0 && *lightshift_sweep.target_square_loss < 0.5))
        throw ConfigError("lightshift_sweep.target_square_loss", "must lie in (0, 0.5)");
      break;
    case ScenarioKind::calibration_drift: {
      const auto& c = calibration_drift;
      checked("calibration_drift.drift", [&] { c.drift.validate(); });
      if (!(c.probe.duration_s > 0.0)) throw ConfigError("calibration_drift.probe.duration_s", "must be positive");
      if (c.probe.points < 5) throw ConfigError("calibration_drift.probe.points", "need at least 5 points");
      if (c.probe.shots_per_point < 1)
        throw ConfigError("calibration_drift.probe.shots_per_point", "must be positive");
      if (c.cycles < 0) throw ConfigError("calibration_drift.cycles", "must be non-negative");
      if (!(c.interval_s >= 0.0)) throw ConfigError("calibration_drift.interval_s", "must be non-negative");
      if (!(c.deadband_sigmas >= 0.0))
        throw ConfigError("calibration_drift.deadband_sigmas", "must be non-negative");
      if (c.reorder_trials < 0) throw ConfigError("calibration_drift.reorder_trials", "must be non-negative");
      break;
    }
    case ScenarioKind::mode_geometry:
      break;
  }
}

Scenario parse_scenario(const json& doc) {
  Section root(doc, "");
  Scenario out;
  if (!root.has("scenario")) throw ConfigError("scenario", "missing required field");
  out.kind = root.choice("scenario", out.kind, scenario_kind_from_string);
  out.seed = root.required_count("seed");
  out.output_dir = root.text("output_dir", out.output_dir);

  const ScenarioKind k = out.kind;
  const bool needs_crystal = k != ScenarioKind::calibration_drift;
  if (needs_crystal) {
    out.crystal = parse_crystal(root.child("crystal"));
  } else {
    out.crystal.in_phase_frequency_hz = 2.0e6;
  }
  if (uses_physics(k)) out.gate = parse_gate(root.child("gate"));
  if (uses_noise(k) && root.has("noise")) out.noise = parse_noise(root.child("noise"));

  const std::string own = to_string(k);
  if (root.has(own)) {
    switch (k) {
      case ScenarioKind::gate_fidelity:
        out.gate_fidelity = parse_gate_fidelity(root.child(own));
        break;
      case ScenarioKind::tomography:
        out.tomography = parse_tomography(root.child(own));
        break;
      case ScenarioKind::chsh:
        out.chsh = parse_chsh(root.child(own));
        break;
      case ScenarioKind::lightshift_sweep:
        out.lightshift_sweep = parse_lightshift(root.child(own));
        break;
      case ScenarioKind::calibration_drift:
        out.calibration_drift = parse_calibration(root.child(own));
        break;
      case ScenarioKind::mode_geometry:
        root.child(own).finish();
        break;
    }
  }
  root.finish();
  out.noise.seed = out.seed;
  out.validate();
  return out;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

json to_json(const Scenario& s) {
  json doc;
  doc["scenario"] = to_string(s.kind);
  doc["seed"] = s.seed;
  doc["output_dir"] = s.output_dir;

  if (s.kind != ScenarioKind::calibration_drift) {
    json c;
    c["species_a"] = species_json(s.crystal.species_a);
    c["species_b"] = species_json(s.crystal.species_b);
    c["order"] = crystal::to_string(s.crystal.order);
    if (s.crystal.in_phase_frequency_hz) c["in_phase_frequency_hz"] = *s.crystal.in_phase_frequency_hz;
    if (s.crystal.axial_reference_frequency_hz)
      c["axial_reference_frequency_hz"] = *s.crystal.axial_reference_frequency_hz;
    c["beam"] = {{"wavelength_m", s.crystal.beam.wavelength_m},
                 {"half_angle_factor", s.crystal.beam.half_angle_factor}};
    doc["crystal"] = c;
  }
  if (uses_physics(s.kind)) {
    const auto& g = s.gate;
    doc["gate"] = {
        {"raman_detuning_hz", g.raman_detuning_hz},
        {"gate_time_s", g.gate_time_s},
        {"gate_detuning_hz", g.resolved_gate_detuning_hz()},
        {"couplings_hz",
         {{"a_up", g.couplings_hz.a_up},
          {"a_down", g.couplings_hz.a_down},
          {"b_up", g.couplings_hz.b_up},
          {"b_down", g.couplings_hz.b_down}}},
        {"optical_phase_rad", g.optical_phase_rad},
        {"light_shift_hz", {{"a", g.light_shift_a_hz}, {"b", g.light_shift_b_hz}}},
        {"envelope", {{"shape", dynamics::to_string(g.shape)}, {"ramp_time_s", g.ramp_time_s}}},
        {"force_sign", g.force_sign ? json(*g.force_sign) : json("auto")},
        {"echo", g.echo},
    };
  }
  if (uses_noise(s.kind)) {
    const auto& n = s.noise;
    doc["noise"] = {
        {"readout", {{"a", confusion_json(n.readout_a)}, {"b", confusion_json(n.readout_b)}}},
        {"state_prep_error", n.state_prep_error},
        {"scattering_error", n.scattering_error},
        {"qubit_detuning_hz", n.qubit_detuning_hz},
        {"detuning_jitter_hz", n.detuning_jitter_hz},
        {"nbar", n.nbar},
        {"finite_duration_rotations", n.finite_duration_rotations},
    };
  }

  switch (s.kind) {
    case ScenarioKind::gate_fidelity: {
      const auto& g = s.gate_fidelity;
      doc["gate_fidelity"] = {{"scan_points", g.scan_points},
                              {"phase_start_rad", g.phase_start_rad},
                              {"phase_stop_rad", g.phase_stop_rad},
                              {"shots_per_point", g.shots_per_point},
                              {"population_shots", g.population_shots},
                              {"readout_correction", g.readout_correction}};
      break;
    }
    case ScenarioKind::tomography:
      doc["tomography"] = {{"shots_per_setting", s.tomography.shots_per_setting},
                           {"readout_handling", analysis::to_string(s.tomography.readout)},
                           {"max_iterations", s.tomography.max_iterations}};
      break;
    case ScenarioKind::chsh: {
      const auto& a = s.chsh.angles;
      doc["chsh"] = {{"shots_per_setting", s.chsh.shots_per_setting},
                     {"angles_rad",
                      {{"theta_a", a.theta_a},
                       {"theta_a_prime", a.theta_a_prime},
                       {"theta_b", a.theta_b},
                       {"theta_b_prime", a.theta_b_prime}}},
                     {"detection_error", optional_json(s.chsh.detection_error)}};
      break;
    }
    case ScenarioKind::lightshift_sweep:
      doc["lightshift_sweep"] = {{"ramp_times_s", s.lightshift_sweep.ramp_times_s},
                                 {"target_square_loss", optional_json(s.lightshift_sweep.target_square_loss)},
                                 {"phase_offsets_rad", s.lightshift_sweep.phase_offsets_rad}};
      break;
    case ScenarioKind::calibration_drift: {
      const auto& c = s.calibration_drift;
      const auto& m = c.drift;
      doc["calibration_drift"] = {
          {"drift",
           {{"b0_t", m.b0_t},
            {"delta_b_t", m.delta_b_t},
            {"common_offset_t", m.common_offset_t},
            {"volatility_t_per_sqrt_s", m.volatility_t_per_sqrt_s},
            {"correlation_time_s", std::isinf(m.correlation_time_s) ? json(nullptr) : json(m.correlation_time_s)},
            {"sensitivity_hz_per_t", m.sensitivity_hz_per_t},
            {"zero_field_hz", m.zero_field_hz},
            {"order", crystal::to_string(m.order)},
            {"target_order", crystal::to_string(m.target_order)},
            {"reorder_flip_probability", m.reorder_flip_probability}}},
          {"probe",
           {{"duration_s", c.probe.duration_s},
            {"points", c.probe.points},
            {"span_in_fourier_widths", c.probe.span_in_fourier_widths},
            {"shots_per_point", c.probe.shots_per_point}}},
          {"cycles", c.cycles},
          {"interval_s", c.interval_s},
          {"lo_offset_hz", c.lo_offset_hz},
          {"deadband_sigmas", c.deadband_sigmas},
          {"reorder_trials", c.reorder_trials},
      };
      break;
    }
    case ScenarioKind::mode_geometry:
      break;
  }
  return doc;
}

std::uint64_t config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace isogate::config
