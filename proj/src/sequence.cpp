#include "isogate/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "isogate/constants.hpp"

namespace isogate::sequence {

namespace c = isogate::constants;
using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* qubit_name(Qubit q) { return q == Qubit::a ? "a" : "b"; }

Qubit qubit_from_name(const std::string& name) {
  if (name == "a") return Qubit::a;
  if (name == "b") return Qubit::b;
  throw InvalidInput("pulse op: qubit must be \"a\" or \"b\", got \"" + name + "\"");
}

class Executor {
 public:
  Executor(const GateSetups& gates, const noise::NoiseConfig& noise)
      : gates_(gates), noise_(noise) {
    noise_.validate();
    detuning_ = noise_.qubit_detuning_hz;
    if (noise_.detuning_jitter_hz > 0.0) {
      noise::Rng rng(noise_.seed);
      std::normal_distribution<double> normal(0.0, noise_.detuning_jitter_hz);
      detuning_[0] += normal(rng);
      detuning_[1] += normal(rng);
    }
  }

  void operator()(const Prepare&) {
    state_ = TwoQubitState::prepared(noise_.state_prep_error, noise_.state_prep_error);
  }

  void operator()(const Rotate& op) {
    const int target = static_cast<int>(op.target);
    Unitary2 u_target;
    double elapsed = 0.0;
    if (noise_.finite_duration_rotations && op.duration_s > 0.0) {
      u_target = detuned_rotation(op.angle_rad, op.phase_rad, op.duration_s, detuning_[target]);
      elapsed = op.duration_s;
    } else {
      u_target = rotation_unitary(op.angle_rad, op.phase_rad);
    }
    const Unitary2 u_other = z_rotation(c::two_pi * detuning_[1 - target] * elapsed);
    if (op.target == Qubit::a) {
      state_.apply_local(u_target, u_other);
    } else {
      state_.apply_local(u_other, u_target);
    }
    clock_ += elapsed;
  }

  void operator()(const GateHalf& op) {
    const auto it = gates_.find(op.drive);
    if (it == gates_.end()) throw InvalidInput("gate half references unconfigured drive '" + op.drive + "'");
    const GateSetup& setup = it->second;
    const auto& channel = channel_for(op.drive, setup);
    state_.matrix() = channel.apply(state_.matrix());

    const double span = setup.envelope.end() - setup.envelope.begin();
    const auto shift = dynamics::light_shift_phases_at(setup.drive, setup.envelope,
                                                       clock_ - setup.envelope.begin());
    state_.apply_local(z_rotation(shift[0]), z_rotation(shift[1]));
    precess(span);
    if (noise_.scattering_error > 0.0) noise::apply_scattering(state_, 0.5 * noise_.scattering_error);
  }

  void operator()(const Wait& op) { precess(op.duration_s); }

  void operator()(const Measure&) {}

  const TwoQubitState& state() const { return state_; }

 private:
  void precess(double dt) {
    if (dt <= 0.0) return;
    state_.apply_local(z_rotation(c::two_pi * detuning_[0] * dt),
                       z_rotation(c::two_pi * detuning_[1] * dt));
    clock_ += dt;
  }

  const dynamics::GateChannel& channel_for(const std::string& name, const GateSetup& setup) {
    auto found = channels_.find(name);
    if (found != channels_.end()) return found->second;
    auto channel = dynamics::gate_half_channel(setup.drive, setup.envelope, setup.mode,
                                               setup.force_sign, noise_.nbar);
    return channels_.emplace(name, channel).first->second;
  }

  const GateSetups& gates_;
  noise::NoiseConfig noise_;
  std::array<double, 2> detuning_{0.0, 0.0};
  std::map<std::string, dynamics::GateChannel> channels_;
  TwoQubitState state_;
  double clock_ = 0.0;
};

}  // namespace

Rotate make_rotate(Qubit target, double angle_rad, double phase_rad, double duration_s) {
  if (!(duration_s >= 0.0)) throw InvalidInput("rotate: duration must be non-negative");
  if (!std::isfinite(angle_rad) || !std::isfinite(phase_rad))
    throw InvalidInput("rotate: angle and phase must be finite");
  double wrapped = std::fmod(angle_rad, c::two_pi);
  if (wrapped < 0.0) wrapped += c::two_pi;
  return Rotate{target, wrapped, phase_rad, duration_s};
}

void PhaseTracker::advance(double dt_s) {
  if (!(dt_s >= 0.0)) throw InvalidInput("phase tracker: time cannot run backwards");
  for (int q = 0; q < 2; ++q) lo_phase_[q] += c::two_pi * lo_frequency_hz_[q] * dt_s;
  drive_phase_ += c::two_pi * drive_frequency_hz_ * dt_s;
  elapsed_s_ += dt_s;
}

TwoQubitState run_sequence(const Program& program, const GateSetups& gates,
                           const noise::NoiseConfig& noise, const Observer& observer) {
  if (program.empty() || !std::holds_alternative<Prepare>(program.front()))
    throw InvalidInput("pulse program must start with Prepare");
  for (std::size_t k = 0; k + 1 < program.size(); ++k) {
    if (std::holds_alternative<Measure>(program[k]))
      throw InvalidInput("Measure is only allowed as the last op (found at index " +
                         std::to_string(k) + ")");
  }
  for (const auto& op : program) {
    if (const auto* gate = std::get_if<GateHalf>(&op); gate && !gates.contains(gate->drive))
      throw InvalidInput("gate half references unconfigured drive '" + gate->drive + "'");
  }

  Executor exec(gates, noise);
  for (std::size_t k = 0; k < program.size(); ++k) {
    std::visit(exec, program[k]);
    if (observer) observer(k, exec.state());
  }
  return exec.state();
}

Program bell_program(const BellProgramOptions& options) {
  const double half_pi = 0.5 * c::pi;
  const auto& phases = kRamseyPhases;
  Program p;
  p.push_back(Prepare{});
  p.push_back(make_rotate(Qubit::a, half_pi, phases.first[0]));
  p.push_back(make_rotate(Qubit::b, half_pi, phases.first[1]));
  p.push_back(GateHalf{});
  if (options.echo) {
    p.push_back(make_rotate(Qubit::a, c::pi, 0.0));
    p.push_back(make_rotate(Qubit::b, c::pi, 0.0));
  }
  p.push_back(GateHalf{});
  const auto& second = options.echo ? phases.second_with_echo : phases.second_without_echo;
  p.push_back(make_rotate(Qubit::a, half_pi, second[0]));
  p.push_back(make_rotate(Qubit::b, half_pi, second[1]));
  if (options.analysis_pulses) {
    p.push_back(make_rotate(Qubit::a, half_pi, options.analysis_phase_rad));
    p.push_back(make_rotate(Qubit::b, half_pi, options.analysis_phase_rad));
  }
  if (options.measure) p.push_back(Measure{});
  return p;
}

Program chsh_program(double theta_a, double theta_b) {
  Program p = bell_program({.echo = true, .analysis_pulses = false, .measure = false});
  p.push_back(make_rotate(Qubit::a, theta_a, kChshAnalysisPhase));
  p.push_back(make_rotate(Qubit::b, theta_b, kChshAnalysisPhase));
  p.push_back(Measure{});
  return p;
}

PhaseIndependence gate_phase_independence_check(const Program& program, const GateSetups& gates,
                                                const std::vector<double>& phase_offsets,
                                                const noise::NoiseConfig& noise) {
  PhaseIndependence out;
  for (double offset : phase_offsets) {
    GateSetups shifted = gates;
    for (auto& [name, setup] : shifted) setup.drive.optical_phase_rad += offset;
    out.fidelities.push_back(run_sequence(program, shifted, noise).bell_fidelity());
  }
  if (!out.fidelities.empty()) {
    const auto [lo, hi] = std::minmax_element(out.fidelities.begin(), out.fidelities.end());
    out.spread = *hi - *lo;
  }
  return out;
}

json program_to_json(const Program& program) {
  json ops = json::array();
  for (const auto& op : program) {
    ops.push_back(std::visit(
        Overloaded{
            [](const Prepare&) { return json{{"op", "prepare"}}; },
            [](const Measure&) { return json{{"op", "measure"}}; },
            [](const Wait& w) { return json{{"op", "wait"}, {"duration_s", w.duration_s}}; },
            [](const GateHalf& g) { return json{{"op", "gate_half"}, {"drive", g.drive}}; },
            [](const Rotate& r) {
              return json{{"op", "rotate"},
                          {"qubit", qubit_name(r.target)},
                          {"angle_rad", r.angle_rad},
                          {"phase_rad", r.phase_rad},
                          {"duration_s", r.duration_s}};
            }},
        op));
  }
  return ops;
}

Program program_from_json(const json& doc) {
  if (!doc.is_array()) throw ConfigError("program", "must be an array of ops");
  Program out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const json& item = doc[k];
    const std::string where = "program[" + std::to_string(k) + "]";
    if (!item.is_object() || !item.contains("op") || !item["op"].is_string())
      throw ConfigError(where, "each op needs a string field \"op\"");
    const std::string kind = item["op"].get<std::string>();
    try {
      if (kind == "prepare") {
        out.push_back(Prepare{});
      } else if (kind == "measure") {
        out.push_back(Measure{});
      } else if (kind == "wait") {
        const double d = item.at("duration_s").get<double>();
        if (!(d >= 0.0)) throw ConfigError(where + ".duration_s", "must be non-negative");
        out.push_back(Wait{d});
      } else if (kind == "gate_half") {
        out.push_back(GateHalf{item.value("drive", std::string("main"))});
      } else if (kind == "rotate") {
        out.push_back(make_rotate(qubit_from_name(item.at("qubit").get<std::string>()),
                                  item.at("angle_rad").get<double>(),
                                  item.value("phase_rad", 0.0), item.value("duration_s", 0.0)));
      } else {
        throw ConfigError(where + ".op", "unknown op \"" + kind + "\"");
      }
    } catch (const json::exception& e) {
      throw ConfigError(where, e.what());
    } catch (const InvalidInput& e) {
      throw ConfigError(where, e.what());
    }
  }
  return out;
}

}  // namespace isogate::sequence
