#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isogate/analysis.hpp"
#include "isogate/config.hpp"
#include "isogate/crystal.hpp"
#include "isogate/dynamics.hpp"
#include "isogate/noise.hpp"
#include "isogate/scenario.hpp"
#include "isogate/sequence.hpp"
#include "isogate/state.hpp"

namespace py = pybind11;
using namespace isogate;

namespace {

noise::ShotSet shot_set(const std::string& label, const std::array<std::uint64_t, 4>& counts) {
  noise::ShotSet s;
  s.setting = label;
  s.counts = counts;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixed-isotope two-ion gate simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SamplingError>(m, "SamplingError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  // crystal
  py::class_<crystal::IonSpecies>(m, "IonSpecies")
      .def(py::init([](double mass, double split, std::string label) {
             return crystal::IonSpecies{mass, split, std::move(label)};
           }),
           py::arg("mass_amu"), py::arg("qubit_splitting_hz"), py::arg("label") = "")
      .def_readwrite("mass_amu", &crystal::IonSpecies::mass_amu)
      .def_readwrite("qubit_splitting_hz", &crystal::IonSpecies::qubit_splitting_hz)
      .def_readwrite("label", &crystal::IonSpecies::label);
  m.def("calcium40", &crystal::calcium40);
  m.def("calcium43", &crystal::calcium43);

  py::enum_<crystal::IonOrder>(m, "IonOrder").value("AB", crystal::IonOrder::AB).value("BA", crystal::IonOrder::BA);

  py::class_<crystal::TwoIonCrystal>(m, "TwoIonCrystal")
      .def(py::init([](crystal::IonSpecies a, crystal::IonSpecies b, double f, crystal::IonOrder order) {
             crystal::TwoIonCrystal c{std::move(a), std::move(b), f, order};
             c.validate();
             return c;
           }),
           py::arg("species_a"), py::arg("species_b"), py::arg("f_axial_reference_hz"),
           py::arg("order") = crystal::IonOrder::AB)
      .def_readwrite("species_a", &crystal::TwoIonCrystal::species_a)
      .def_readwrite("species_b", &crystal::TwoIonCrystal::species_b)
      .def_readwrite("f_axial_reference_hz", &crystal::TwoIonCrystal::f_axial_reference_hz)
      .def_readwrite("order", &crystal::TwoIonCrystal::order);

  py::class_<crystal::MotionalMode>(m, "MotionalMode")
      .def_readonly("frequency_hz", &crystal::MotionalMode::frequency_hz)
      .def_readonly("eigenvector", &crystal::MotionalMode::eigenvector)
      .def_readonly("eta_a", &crystal::MotionalMode::eta_a)
      .def_readonly("eta_b", &crystal::MotionalMode::eta_b);

  py::class_<crystal::BeamGeometry>(m, "BeamGeometry")
      .def(py::init([](double wl, double f) { return crystal::BeamGeometry{wl, f}; }), py::arg("wavelength_m"),
           py::arg("half_angle_factor"))
      .def_static("perpendicular", &crystal::BeamGeometry::perpendicular, py::arg("wavelength_m"))
      .def_readonly("wavelength_m", &crystal::BeamGeometry::wavelength_m)
      .def_readonly("half_angle_factor", &crystal::BeamGeometry::half_angle_factor)
      .def("k_eff", &crystal::BeamGeometry::k_eff)
      .def("lattice_period", &crystal::BeamGeometry::lattice_period);

  m.def("solve_axial_modes", [](const crystal::TwoIonCrystal& c) {
    const auto modes = crystal::solve_axial_modes(c);
    return py::make_tuple(modes.in_phase, modes.out_of_phase);
  });
  m.def("equilibrium_separation", &crystal::equilibrium_separation);
  m.def("with_lamb_dicke", &crystal::with_lamb_dicke, py::arg("mode"), py::arg("geometry"), py::arg("crystal"));
  m.def("reference_frequency_for_in_phase", &crystal::reference_frequency_for_in_phase, py::arg("crystal"),
        py::arg("target_in_phase_hz"));
  m.def(
      "standing_wave_alignment",
      [](double separation_m, const crystal::BeamGeometry& g) {
        const auto a = crystal::standing_wave_alignment(separation_m, g);
        return py::dict(py::arg("relative_force_sign") = a.relative_force_sign,
                        py::arg("residual_phase_rad") = a.residual_phase_rad, py::arg("periods") = a.periods);
      },
      py::arg("separation_m"), py::arg("geometry"));

  // dynamics
  py::class_<dynamics::ForceCouplings>(m, "ForceCouplings")
      .def(py::init([](double au, double ad, double bu, double bd) { return dynamics::ForceCouplings{au, ad, bu, bd}; }),
           py::arg("a_up"), py::arg("a_down"), py::arg("b_up"), py::arg("b_down"))
      .def_readwrite("a_up", &dynamics::ForceCouplings::a_up)
      .def_readwrite("a_down", &dynamics::ForceCouplings::a_down)
      .def_readwrite("b_up", &dynamics::ForceCouplings::b_up)
      .def_readwrite("b_down", &dynamics::ForceCouplings::b_down)
      .def("scaled", &dynamics::ForceCouplings::scaled);

  py::class_<dynamics::DriveConfig>(m, "DriveConfig")
      .def_static("for_mode", &dynamics::DriveConfig::for_mode, py::arg("mode_frequency_hz"),
                  py::arg("gate_detuning_hz"))
      .def_readwrite("raman_detuning_hz", &dynamics::DriveConfig::raman_detuning_hz)
      .def_readwrite("difference_frequency_hz", &dynamics::DriveConfig::difference_frequency_hz)
      .def_readwrite("gate_detuning_hz", &dynamics::DriveConfig::gate_detuning_hz)
      .def_readwrite("couplings", &dynamics::DriveConfig::couplings)
      .def_readwrite("optical_phase_rad", &dynamics::DriveConfig::optical_phase_rad)
      .def_readwrite("light_shift_a_hz", &dynamics::DriveConfig::light_shift_a_hz)
      .def_readwrite("light_shift_b_hz", &dynamics::DriveConfig::light_shift_b_hz);

  py::class_<dynamics::Envelope>(m, "Envelope")
      .def_static("square", &dynamics::Envelope::square, py::arg("duration_s"))
      .def_static("shaped", &dynamics::Envelope::shaped, py::arg("duration_s"), py::arg("ramp_time_s"))
      .def_readonly("duration_s", &dynamics::Envelope::duration_s)
      .def_readonly("ramp_time_s", &dynamics::Envelope::ramp_time_s)
      .def("value", &dynamics::Envelope::value);

  m.def(
      "displacement_trajectory",
      [](const dynamics::DriveConfig& d, const dynamics::Envelope& e, double coupling_hz, std::size_t samples) {
        const auto t = dynamics::displacement_trajectory(d, e, coupling_hz, samples);
        return py::dict(py::arg("times") = t.times, py::arg("alpha") = t.alpha_samples,
                        py::arg("geometric_phase") = t.geometric_phase,
                        py::arg("final_displacement") = t.final_displacement);
      },
      py::arg("drive"), py::arg("envelope"), py::arg("coupling_hz"), py::arg("samples") = 0);

  py::class_<dynamics::GateChannel>(m, "GateChannel")
      .def_readonly("phases", &dynamics::GateChannel::phases)
      .def_readonly("displacements", &dynamics::GateChannel::displacements)
      .def_readonly("nbar", &dynamics::GateChannel::nbar)
      .def("relative_phases", &dynamics::GateChannel::relative_phases)
      .def("coherence_factors", &dynamics::GateChannel::coherence_factors)
      .def("apply", &dynamics::GateChannel::apply);
  m.def("gate_half_channel", &dynamics::gate_half_channel, py::arg("drive"), py::arg("envelope"), py::arg("mode"),
        py::arg("force_sign"), py::arg("nbar") = 0.0, py::arg("samples") = 0);
  m.def("compose_symmetrized_gate", &dynamics::compose_symmetrized_gate);
  m.def("coupling_scale_for_phase", &dynamics::coupling_scale_for_phase, py::arg("drive"), py::arg("envelope"),
        py::arg("mode"), py::arg("force_sign"), py::arg("target_phase_rad"));
  m.def(
      "light_shift_loss",
      [](const dynamics::DriveConfig& d, const dynamics::Envelope& e) {
        return dynamics::light_shift_phase(d, e).mean_loss;
      },
      py::arg("drive"), py::arg("envelope"));
  m.def("calibrate_light_shift_scale", &dynamics::calibrate_light_shift_scale, py::arg("drive"),
        py::arg("envelope"), py::arg("target_loss"));

  // state
  m.def("rotation_unitary", &rotation_unitary, py::arg("theta"), py::arg("phi"));
  m.def("bell_phi_plus", &bell_phi_plus);
  m.def("bell_fidelity", [](const DensityMatrix& rho) { return TwoQubitState(rho).bell_fidelity(); });

  // noise
  py::class_<noise::ConfusionMatrix>(m, "ConfusionMatrix")
      .def(py::init([](double d, double b) {
             noise::ConfusionMatrix c{d, b};
             c.validate();
             return c;
           }),
           py::arg("eps_dark") = 0.0, py::arg("eps_bright") = 0.0)
      .def_static("symmetric", &noise::ConfusionMatrix::symmetric)
      .def_readwrite("eps_dark", &noise::ConfusionMatrix::eps_dark)
      .def_readwrite("eps_bright", &noise::ConfusionMatrix::eps_bright)
      .def("matrix", &noise::ConfusionMatrix::matrix);
  m.def("apply_confusion", &noise::apply_confusion);
  m.def(
      "sample_shots",
      [](const Populations& p, std::uint64_t shots, std::uint64_t seed) {
        return noise::sample_shots(p, shots, seed).counts;
      },
      py::arg("distribution"), py::arg("shots"), py::arg("seed"));

  // analysis
  m.def(
      "correct_readout",
      [](const Populations& freqs, const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b) {
        return analysis::correct_readout(freqs, a, b);
      },
      py::arg("frequencies"), py::arg("readout_a"), py::arg("readout_b"));
  m.def(
      "parity_scan_fit",
      [](const std::vector<double>& phi, const std::vector<double>& p, const std::vector<double>& sigma) {
        const auto f = analysis::parity_scan_fit(phi, p, sigma);
        return py::dict(py::arg("contrast") = f.contrast, py::arg("sigma_contrast") = f.sigma_contrast,
                        py::arg("phase_offset_rad") = f.phase_offset_rad, py::arg("baseline") = f.baseline,
                        py::arg("chi2") = f.chi2, py::arg("dof") = f.dof);
      },
      py::arg("phi"), py::arg("p_odd"), py::arg("sigma"));
  m.def(
      "fidelity_from_parity",
      [](double p_dd, double p_uu, double c, double s_dd, double s_uu, double s_c) {
        const auto f = analysis::fidelity_from_parity({p_dd, s_dd}, {p_uu, s_uu}, {c, s_c});
        return py::make_tuple(f.value, f.sigma);
      },
      py::arg("p_dd"), py::arg("p_uu"), py::arg("contrast"), py::arg("sigma_dd") = 0.0,
      py::arg("sigma_uu") = 0.0, py::arg("sigma_contrast") = 0.0);
  m.def("tomography_labels", [] {
    std::vector<std::string> out;
    for (const auto& s : analysis::tomography_settings()) out.push_back(s.label);
    return out;
  });
  m.def(
      "simulate_tomography",
      [](const DensityMatrix& rho, std::uint64_t shots, const noise::ConfusionMatrix& a,
         const noise::ConfusionMatrix& b, std::uint64_t seed) {
        std::map<std::string, std::array<std::uint64_t, 4>> out;
        for (const auto& s : analysis::simulate_tomography(rho, shots, a, b, seed)) out[s.setting] = s.counts;
        return out;
      },
      py::arg("rho"), py::arg("shots"), py::arg("readout_a") = noise::ConfusionMatrix{},
      py::arg("readout_b") = noise::ConfusionMatrix{}, py::arg("seed") = 0);
  m.def(
      "mle_tomography",
      [](const std::map<std::string, std::array<std::uint64_t, 4>>& counts, const std::string& readout,
         const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b, int max_iterations) {
        std::vector<noise::ShotSet> data;
        for (const auto& [label, c] : counts) data.push_back(shot_set(label, c));
        analysis::TomographyOptions opt;
        opt.readout = analysis::readout_handling_from_string(readout);
        opt.readout_a = a;
        opt.readout_b = b;
        opt.max_iterations = max_iterations;
        const auto r = analysis::mle_tomography(data, opt);
        return py::dict(py::arg("rho") = r.rho, py::arg("fidelity") = r.fidelity,
                        py::arg("log_likelihood") = r.log_likelihood, py::arg("iterations") = r.iterations,
                        py::arg("converged") = r.converged);
      },
      py::arg("counts"), py::arg("readout") = "none", py::arg("readout_a") = noise::ConfusionMatrix{},
      py::arg("readout_b") = noise::ConfusionMatrix{}, py::arg("max_iterations") = 100000);
  m.def(
      "chsh_E",
      [](const std::array<std::uint64_t, 4>& counts) {
        const auto e = analysis::chsh_E(shot_set("", counts), 0.0, 0.0);
        return py::make_tuple(e.E, e.sigma);
      },
      py::arg("counts"));
  m.def(
      "chsh_S",
      [](const std::array<double, 4>& E, const std::array<double, 4>& sigma) {
        std::array<analysis::Correlation, 4> c;
        for (int i = 0; i < 4; ++i) {
          c[i].E = E[i];
          c[i].sigma = sigma[i];
        }
        const auto r = analysis::chsh_S(c);
        return py::make_tuple(r.S, r.sigma_S);
      },
      py::arg("E"), py::arg("sigma") = std::array<double, 4>{});
  m.def("s_max", &analysis::s_max, py::arg("readout_a"), py::arg("readout_b"));
  m.def("s_max_symmetric_closed_form", &analysis::s_max_symmetric_closed_form, py::arg("eps_a"), py::arg("eps_b"));

  // scenarios
  m.def("scenario_names", [] {
    std::vector<std::string> out;
    for (auto k : config::all_scenarios()) out.push_back(config::to_string(k));
    return out;
  });
  m.def(
      "fixture_json", [](const std::string& name) { return scenario::fixture(config::scenario_kind_from_string(name)).dump(2); },
      py::arg("name"));
  m.def(
      "run_scenario_json",
      [](const std::string& doc, std::optional<std::uint64_t> seed, int jobs, std::optional<std::string> out_dir) {
        auto s = config::parse_scenario(nlohmann::json::parse(doc));
        scenario::RunOptions opt;
        opt.seed = seed;
        opt.jobs = jobs;
        opt.out_dir = out_dir;
        opt.write_files = out_dir.has_value();
        scenario::RunResult r;
        {
          py::gil_scoped_release release;
          r = scenario::run_scenario(std::move(s), opt);
        }
        return py::make_tuple(r.summary.dump(), r.report, r.exit_code());
      },
      py::arg("config_json"), py::arg("seed") = py::none(), py::arg("jobs") = 1, py::arg("out_dir") = py::none());
}
