#include "isogate/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "isogate/analysis.hpp"
#include "isogate/constants.hpp"

namespace isogate::scenario {

namespace c = isogate::constants;
namespace fs = std::filesystem;
using config::Scenario;
using config::ScenarioKind;
using nlohmann::json;

namespace {

std::string num(double x) { return fmt::format("{:.10g}", x); }

std::vector<std::string> count_cells(const noise::ShotSet& s) {
  return {std::to_string(s.counts[0]), std::to_string(s.counts[1]), std::to_string(s.counts[2]),
          std::to_string(s.counts[3])};
}

json populations_json(const Populations& p) {
  return {{"dd", p(0)}, {"du", p(1)}, {"ud", p(2)}, {"uu", p(3)}};
}

json estimate_json(const analysis::Estimate& e) { return {{"value", e.value}, {"sigma", e.sigma}}; }

json finish_summary(const Scenario& s, json results, const std::vector<std::string>& warnings,
                    bool converged) {
  const json resolved = config::to_json(s);
  json out;
  out["scenario"] = config::to_string(s.kind);
  out["seed"] = s.seed;
  out["config_hash"] = config::hex64(config::config_hash(resolved));
  out["config"] = resolved;
  out["results"] = std::move(results);
  out["converged"] = converged;
  out["warnings"] = warnings;
  return out;
}

sequence::GateSetups gates_of(const PhysicsSetup& physics) { return {{"main", physics.gate}}; }

// Product of (1 - eps_dark - eps_bright): the factor by which readout error
// shrinks a correlation between the two qubits.
double readout_visibility(const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b) {
  return (1.0 - a.eps_dark - a.eps_bright) * (1.0 - b.eps_dark - b.eps_bright);
}

// --- gate_fidelity -----------------------------------------------------------

RunResult run_gate_fidelity(const Scenario& s, int jobs) {
  const PhysicsSetup physics = build_physics(s);
  const auto gates = gates_of(physics);
  const auto& cfg = s.gate_fidelity;
  const bool exact = cfg.shots_per_point == 0;
  const auto& ra = s.noise.readout_a;
  const auto& rb = s.noise.readout_b;
  const double vis = readout_visibility(ra, rb);
  const bool correct = cfg.readout_correction;

  struct Point {
    double phi = 0.0;
    noise::ShotSet shots;
    double p_raw = 0.0, p_corr = 0.0, sigma_raw = 1.0, sigma_corr = 1.0;
  };
  const std::size_t n = static_cast<std::size_t>(cfg.scan_points);
  std::vector<Point> points(n);

  auto measure = [&](const sequence::Program& program, std::uint64_t seed, std::uint64_t shots,
                     Populations& raw, noise::ShotSet& set) {
    noise::NoiseConfig noise = s.noise;
    noise.seed = seed;
    const Populations truth = sequence::run_sequence(program, gates, noise).populations();
    const Populations recorded = noise::apply_confusion(truth, ra, rb);
    if (shots == 0) {
      raw = recorded;
    } else {
      set = noise::sample_shots(recorded, shots, derive_seed(seed, 1));
      raw = set.frequencies();
    }
  };

  parallel_for(n, jobs, [&](std::size_t k) {
    Point& pt = points[k];
    pt.phi = cfg.phase_start_rad + (cfg.phase_stop_rad - cfg.phase_start_rad) * k / static_cast<double>(n);
    sequence::BellProgramOptions opt;
    opt.echo = s.gate.echo;
    opt.analysis_pulses = true;
    opt.analysis_phase_rad = pt.phi;
    Populations raw;
    measure(sequence::bell_program(opt), derive_seed(s.seed, k), cfg.shots_per_point, raw, pt.shots);
    pt.p_raw = analysis::odd_parity(raw);
    pt.p_corr = analysis::odd_parity(analysis::correct_readout(raw, ra, rb));
    if (!exact) {
      pt.sigma_raw = analysis::binomial_sigma(pt.p_raw, cfg.shots_per_point);
      pt.sigma_corr = pt.sigma_raw / vis;
    }
  });

  sequence::BellProgramOptions pop_opt;
  pop_opt.echo = s.gate.echo;
  Populations pop_raw;
  noise::ShotSet pop_shots;
  measure(sequence::bell_program(pop_opt), derive_seed(s.seed, n), cfg.population_shots, pop_raw,
          pop_shots);
  const Populations pop_corr = analysis::correct_readout(pop_raw, ra, rb);

  auto fidelity_for = [&](bool corrected, analysis::ParityFit& fit_out) {
    std::vector<double> phi, p, sigma;
    for (const auto& pt : points) {
      phi.push_back(pt.phi);
      p.push_back(corrected ? pt.p_corr : pt.p_raw);
      sigma.push_back(corrected ? pt.sigma_corr : pt.sigma_raw);
    }
    fit_out = analysis::parity_scan_fit(phi, p, sigma);
    const Populations& pop = corrected ? pop_corr : pop_raw;
    analysis::Estimate dd{pop(0), 0.0}, uu{pop(3), 0.0}, con{fit_out.contrast, 0.0};
    if (!exact) {
      const double scale = corrected ? 1.0 / vis : 1.0;
      dd.sigma = analysis::binomial_sigma(pop(0), cfg.population_shots) * scale;
      uu.sigma = analysis::binomial_sigma(pop(3), cfg.population_shots) * scale;
      con.sigma = fit_out.sigma_contrast;
    } else {
      fit_out.sigma_contrast = fit_out.sigma_phase_offset = fit_out.sigma_baseline = 0.0;
    }
    return analysis::fidelity_from_parity(dd, uu, con);
  };

  analysis::ParityFit fit_raw, fit_corr;
  const auto f_raw = fidelity_for(false, fit_raw);
  const auto f_corr = fidelity_for(true, fit_corr);
  const auto& fit = correct ? fit_corr : fit_raw;
  const auto& f = correct ? f_corr : f_raw;

  noise::NoiseConfig state_noise = s.noise;
  state_noise.seed = derive_seed(s.seed, n);
  sequence::BellProgramOptions state_opt;
  state_opt.echo = s.gate.echo;
  const double state_fidelity =
      sequence::run_sequence(sequence::bell_program(state_opt), gates, state_noise).bell_fidelity();

  RunResult out;
  if (!exact && fit.contrast > 1.0 + 3.0 * fit.sigma_contrast)
    out.warnings.push_back("parity contrast exceeds 1 by more than 3 standard errors");

  Table t{"gate_fidelity",
          {"index", "phi_rad", "n_dd", "n_du", "n_ud", "n_uu", "p_odd_raw", "p_odd_corrected", "sigma_p_odd"},
          {}};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pt = points[k];
    std::vector<std::string> row{std::to_string(k), num(pt.phi)};
    const auto counts = count_cells(pt.shots);
    row.insert(row.end(), counts.begin(), counts.end());
    row.push_back(num(pt.p_raw));
    row.push_back(num(pt.p_corr));
    row.push_back(exact ? "0" : num(correct ? pt.sigma_corr : pt.sigma_raw));
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));

  json results = {
      {"fidelity", f.value},
      {"sigma_fidelity", f.sigma},
      {"fidelity_uncorrected", estimate_json(f_raw)},
      {"fidelity_corrected", estimate_json(f_corr)},
      {"apparent_infidelity_from_readout", f_corr.value - f_raw.value},
      {"contrast", fit.contrast},
      {"sigma_contrast", fit.sigma_contrast},
      {"phase_offset_rad", fit.phase_offset_rad},
      {"baseline", fit.baseline},
      {"chi2", fit.chi2},
      {"dof", fit.dof},
      {"populations_raw", populations_json(pop_raw)},
      {"populations_corrected", populations_json(pop_corr)},
      {"state_fidelity", state_fidelity},
      {"readout_corrected", correct},
      {"exact_expectation_values", exact},
  };
  out.summary = finish_summary(s, results, out.warnings, true);

  std::string r;
  r += fmt::format("gate_fidelity  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  in-phase mode        {:.6f} MHz\n", physics.crystal.modes.in_phase.frequency_hz / 1e6);
  r += fmt::format("  gate time            {:.3f} us (two halves)\n", s.gate.gate_time_s * 1e6);
  r += fmt::format("  parity points        {}  shots/point {}\n", n, cfg.shots_per_point);
  r += fmt::format("  parity contrast      {:.6f} +/- {:.6f}\n", fit.contrast, fit.sigma_contrast);
  r += fmt::format("  P(dd) + P(uu)        {:.6f}\n", (correct ? pop_corr : pop_raw)(0) + (correct ? pop_corr : pop_raw)(3));
  r += fmt::format("  fidelity             {:.6f} +/- {:.6f} ({})\n", f.value, f.sigma,
                   correct ? "readout corrected" : "uncorrected");
  r += fmt::format("  fidelity uncorrected {:.6f} +/- {:.6f}\n", f_raw.value, f_raw.sigma);
  r += fmt::format("  state fidelity       {:.6f} (density matrix, before readout)\n", state_fidelity);
  out.report = r;
  return out;
}

// --- tomography ----------------------------------------------------------------

RunResult run_tomography(const Scenario& s, int jobs) {
  const PhysicsSetup physics = build_physics(s);
  sequence::BellProgramOptions opt;
  opt.echo = s.gate.echo;
  noise::NoiseConfig noise = s.noise;
  noise.seed = derive_seed(s.seed, 0);
  const DensityMatrix rho = sequence::run_sequence(sequence::bell_program(opt), gates_of(physics), noise).matrix();

  const auto settings = analysis::tomography_settings();
  std::vector<noise::ShotSet> data(settings.size());
  parallel_for(settings.size(), jobs, [&](std::size_t i) {
    const Populations p = noise::apply_confusion(analysis::setting_populations(rho, settings[i]),
                                                 s.noise.readout_a, s.noise.readout_b);
    data[i] = noise::sample_shots(p, s.tomography.shots_per_setting, derive_seed(s.seed, i + 1), settings[i].label);
  });

  analysis::TomographyOptions topt;
  topt.readout = s.tomography.readout;
  topt.readout_a = s.noise.readout_a;
  topt.readout_b = s.noise.readout_b;
  topt.max_iterations = s.tomography.max_iterations;
  const auto result = analysis::mle_tomography(data, topt);
  const double state_fidelity = TwoQubitState(rho).bell_fidelity();

  RunResult out;
  out.converged = result.converged;
  if (!result.converged)
    out.warnings.push_back(fmt::format("MLE stopped at the iteration cap ({}) before converging", result.iterations));

  Table counts{"tomography", {"setting", "n_dd", "n_du", "n_ud", "n_uu"}, {}};
  for (const auto& d : data) {
    std::vector<std::string> row{d.setting};
    const auto cells = count_cells(d);
    row.insert(row.end(), cells.begin(), cells.end());
    counts.rows.push_back(std::move(row));
  }
  Table rho_table{"tomography_rho", {"row", "col", "re", "im"}, {}};
  json rho_re = json::array(), rho_im = json::array();
  for (int i = 0; i < 4; ++i) {
    json re_row = json::array(), im_row = json::array();
    for (int j = 0; j < 4; ++j) {
      rho_table.rows.push_back({kBasisLabels[i], kBasisLabels[j], num(result.rho(i, j).real()),
                                num(result.rho(i, j).imag())});
      re_row.push_back(result.rho(i, j).real());
      im_row.push_back(result.rho(i, j).imag());
    }
    rho_re.push_back(re_row);
    rho_im.push_back(im_row);
  }
  out.tables.push_back(std::move(counts));
  out.tables.push_back(std::move(rho_table));

  json results = {{"fidelity", result.fidelity},
                  {"log_likelihood", result.log_likelihood},
                  {"iterations", result.iterations},
                  {"mle_converged", result.converged},
                  {"state_fidelity", state_fidelity},
                  {"rho_real", rho_re},
                  {"rho_imag", rho_im}};
  out.summary = finish_summary(s, results, out.warnings, out.converged);

  std::string r;
  r += fmt::format("tomography  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  shots per setting   {}\n", s.tomography.shots_per_setting);
  r += fmt::format("  readout handling    {}\n", analysis::to_string(s.tomography.readout));
  r += fmt::format("  MLE iterations      {}{}\n", result.iterations, result.converged ? "" : " (not converged)");
  r += fmt::format("  Bell fidelity       {:.6f}\n", result.fidelity);
  r += fmt::format("  state fidelity      {:.6f} (simulated density matrix)\n\n", state_fidelity);
  r += "  Re(rho)                                   Im(rho)\n";
  for (int i = 0; i < 4; ++i) {
    r += fmt::format("  {:>2}", kBasisLabels[i]);
    for (int j = 0; j < 4; ++j) r += fmt::format(" {:>8.4f}", result.rho(i, j).real());
    r += "   ";
    for (int j = 0; j < 4; ++j) r += fmt::format(" {:>8.4f}", result.rho(i, j).imag());
    r += "\n";
  }
  out.report = r;
  return out;
}

// --- chsh ----------------------------------------------------------------------

RunResult run_chsh(const Scenario& s, int jobs) {
  const PhysicsSetup physics = build_physics(s);
  const auto gates = gates_of(physics);
  noise::ConfusionMatrix ra = s.noise.readout_a, rb = s.noise.readout_b;
  if (s.chsh.detection_error) {
    ra = rb = noise::ConfusionMatrix::symmetric(*s.chsh.detection_error);
  }
  const auto settings = s.chsh.angles.settings();
  std::array<noise::ShotSet, 4> shots;
  std::array<analysis::Correlation, 4> corr;
  std::array<double, 4> expected{};
  parallel_for(4, jobs, [&](std::size_t i) {
    noise::NoiseConfig noise = s.noise;
    noise.seed = derive_seed(s.seed, i);
    const auto [ta, tb] = settings[i];
    const Populations truth =
        sequence::run_sequence(sequence::chsh_program(ta, tb), gates, noise).populations();
    const Populations recorded = noise::apply_confusion(truth, ra, rb);
    expected[i] = recorded(0) - recorded(1) - recorded(2) + recorded(3);
    shots[i] = noise::sample_shots(recorded, s.chsh.shots_per_setting, derive_seed(noise.seed, 1),
                                   fmt::format("setting{}", i + 1));
    corr[i] = analysis::chsh_E(shots[i], ta, tb);
  });
  auto result = analysis::chsh_S(corr);
  result.s_max = analysis::s_max(ra, rb);
  const double s_expected =
      std::abs(expected[0] + expected[1]) + std::abs(expected[2] - expected[3]);

  RunResult out;
  Table t{"chsh", {"setting", "theta_a_rad", "theta_b_rad", "n_dd", "n_du", "n_ud", "n_uu", "E", "sigma_E"}, {}};
  json es = json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<std::string> row{std::to_string(i + 1), num(corr[i].theta_a), num(corr[i].theta_b)};
    const auto cells = count_cells(shots[i]);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(num(corr[i].E));
    row.push_back(num(corr[i].sigma));
    t.rows.push_back(std::move(row));
    es.push_back({{"theta_a_rad", corr[i].theta_a},
                  {"theta_b_rad", corr[i].theta_b},
                  {"E", corr[i].E},
                  {"sigma_E", corr[i].sigma},
                  {"E_expected", expected[i]},
                  {"shots", corr[i].shots}});
  }
  out.tables.push_back(std::move(t));

  json results = {{"S", result.S},
                  {"sigma_S", result.sigma_S},
                  {"S_expected", s_expected},
                  {"S_max", *result.s_max},
                  {"violation_sigmas", (result.S - 2.0) / result.sigma_S},
                  {"correlations", es},
                  {"readout", {{"a", {{"eps_dark", ra.eps_dark}, {"eps_bright", ra.eps_bright}}},
                               {"b", {{"eps_dark", rb.eps_dark}, {"eps_bright", rb.eps_bright}}}}},
                  {"readout_corrected", false},
                  {"sigma_E_estimator", "plug-in binomial sqrt((1 - E^2) / N)"}};
  out.summary = finish_summary(s, results, out.warnings, true);

  std::string r;
  r += fmt::format("chsh  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  {:>10}  {:>10}  {:>9}  {:>8}  {:>6}\n", "theta_a", "theta_b", "E", "sigma_E", "N");
  for (const auto& e : corr) {
    r += fmt::format("  {:>8.4f}pi  {:>8.4f}pi  {:>+9.4f}  {:>8.4f}  {:>6}\n", e.theta_a / c::pi,
                     e.theta_b / c::pi, e.E, e.sigma, e.shots);
  }
  r += fmt::format("\n  S      = {:.4f} +/- {:.4f}  ({:.1f} sigma above 2)\n", result.S, result.sigma_S,
                   (result.S - 2.0) / result.sigma_S);
  r += fmt::format("  S_max  = {:.4f}  (ideal Bell state through the readout confusion)\n", *result.s_max);
  r += fmt::format("  expected S for the simulated state = {:.4f}\n", s_expected);
  r += "  Counts are not corrected for readout error. sigma_E is the plug-in binomial\n"
       "  value sqrt((1 - E^2) / N); at N = 4000 and |E| near 0.56 that is about 0.013.\n";
  out.report = r;
  return out;
}

// --- lightshift_sweep ---------------------------------------------------------

RunResult run_lightshift(const Scenario& s, int jobs) {
  PhysicsSetup physics = build_physics(s);
  auto& drive = physics.gate.drive;
  const double half = 0.5 * s.gate.gate_time_s;
  const auto square = dynamics::Envelope::square(half);
  const auto& cfg = s.lightshift_sweep;

  if (cfg.target_square_loss) {
    if (drive.light_shift_a_hz == 0.0 && drive.light_shift_b_hz == 0.0) {
      drive.light_shift_a_hz = drive.light_shift_b_hz = 1.0;
    }
    const double scale = dynamics::calibrate_light_shift_scale(drive, square, *cfg.target_square_loss);
    drive.light_shift_a_hz *= scale;
    drive.light_shift_b_hz *= scale;
  }
  const double square_loss = dynamics::light_shift_phase(drive, square).mean_loss;

  const std::size_t n = cfg.ramp_times_s.size();
  std::vector<double> loss(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const double ramp = cfg.ramp_times_s[i];
    const auto env = ramp > 0.0 ? dynamics::Envelope::shaped(half, ramp) : square;
    loss[i] = dynamics::light_shift_phase(drive, env).mean_loss;
  });
  bool monotone = true;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return cfg.ramp_times_s[x] < cfg.ramp_times_s[y]; });
  for (std::size_t k = 1; k < n; ++k)
    monotone = monotone && loss[order[k]] <= loss[order[k - 1]] * (1.0 + 1e-9) + 1e-15;

  // Gate-drive phase dependence with and without the light shift.
  const auto program = sequence::bell_program({.echo = s.gate.echo});
  auto spread_for = [&](const dynamics::DriveConfig& d, const dynamics::Envelope& env) {
    sequence::GateSetups g{{"main", physics.gate}};
    g["main"].drive = d;
    g["main"].envelope = env;
    return sequence::gate_phase_independence_check(program, g, cfg.phase_offsets_rad).spread;
  };
  dynamics::DriveConfig no_shift = drive;
  no_shift.light_shift_a_hz = no_shift.light_shift_b_hz = 0.0;
  const double spread_clean = spread_for(no_shift, square);
  const double spread_shift = spread_for(drive, square);

  RunResult out;
  if (!monotone) out.warnings.push_back("light-shift error is not monotone in the ramp time");
  Table t{"lightshift_sweep", {"ramp_time_s", "shape", "mean_loss", "reduction_factor"}, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const double ramp = cfg.ramp_times_s[i];
    const double red = loss[i] > 0.0 ? square_loss / loss[i] : std::numeric_limits<double>::infinity();
    t.rows.push_back({num(ramp), ramp > 0.0 ? "shaped" : "square", num(loss[i]), num(red)});
    rows.push_back({{"ramp_time_s", ramp}, {"mean_loss", loss[i]},
                    {"reduction_factor", std::isinf(red) ? json(nullptr) : json(red)}});
  }
  out.tables.push_back(std::move(t));

  json results = {{"light_shift_hz", {{"a", drive.light_shift_a_hz}, {"b", drive.light_shift_b_hz}}},
                  {"difference_frequency_hz", drive.difference_frequency_hz},
                  {"square_mean_loss", square_loss},
                  {"sweep", rows},
                  {"monotone_in_ramp_time", monotone},
                  {"phase_offsets_rad", cfg.phase_offsets_rad},
                  {"fidelity_spread_without_light_shift", spread_clean},
                  {"fidelity_spread_with_light_shift", spread_shift}};
  out.summary = finish_summary(s, results, out.warnings, true);

  std::string r;
  r += fmt::format("lightshift_sweep  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  light-shift amplitude  a {:.1f} Hz  b {:.1f} Hz at delta = {:.4f} MHz\n", drive.light_shift_a_hz,
                   drive.light_shift_b_hz, drive.difference_frequency_hz / 1e6);
  r += fmt::format("  square-pulse mean loss {:.5f}\n\n", square_loss);
  r += fmt::format("  {:>12}  {:>12}  {:>10}\n", "ramp (us)", "mean loss", "reduction");
  for (std::size_t i = 0; i < n; ++i) {
    r += fmt::format("  {:>12.3f}  {:>12.4e}  {:>10.3g}\n", cfg.ramp_times_s[i] * 1e6, loss[i],
                     loss[i] > 0.0 ? square_loss / loss[i] : std::numeric_limits<double>::infinity());
  }
  r += fmt::format("\n  Bell fidelity spread over gate-drive phase offsets:\n");
  r += fmt::format("    no light shift   {:.3e}\n    with light shift {:.3e}\n", spread_clean, spread_shift);
  out.report = r;
  return out;
}

// --- calibration_drift -------------------------------------------------------

RunResult run_calibration(const Scenario& s, int jobs) {
  const auto& cfg = s.calibration_drift;
  noise::DriftModel model = cfg.drift;
  noise::Rng rng(derive_seed(s.seed, 0));
  auto lo = model.qubit_frequencies(model.target_order);
  for (int j = 0; j < 2; ++j) lo[j] += cfg.lo_offset_hz[j];

  RunResult out;
  Table t{"calibration_drift",
          {"cycle", "time_s", "order", "order_wrong", "reorder_cycles", "offset_a_hz", "offset_b_hz",
           "estimate_a_hz", "estimate_b_hz", "sigma_a_hz", "sigma_b_hz", "correction_a_hz",
           "correction_b_hz", "probe_converged"},
          {}};
  int detections = 0, probe_failures = 0;
  std::vector<double> residual_a, residual_b;
  for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
    const auto truth = model.qubit_frequencies();
    const std::array<double, 2> offset{truth[0] - lo[0], truth[1] - lo[1]};
    const auto order_before = model.order;
    const auto step = noise::calibrate(model, lo, cfg.probe, rng, cfg.deadband_sigmas);
    detections += step.order_wrong ? 1 : 0;
    probe_failures += step.probe.converged ? 0 : 1;
    t.rows.push_back({std::to_string(cycle), num(cycle * cfg.interval_s), crystal::to_string(order_before),
                      step.order_wrong ? "1" : "0", std::to_string(step.reorder_cycles), num(offset[0]),
                      num(offset[1]), num(step.probe.offset_hz[0]), num(step.probe.offset_hz[1]),
                      num(step.probe.sigma_hz[0]), num(step.probe.sigma_hz[1]), num(step.correction_hz[0]),
                      num(step.correction_hz[1]), step.probe.converged ? "1" : "0"});
    if (!step.order_wrong) {
      const auto after = model.qubit_frequencies();
      residual_a.push_back(after[0] - lo[0]);
      residual_b.push_back(after[1] - lo[1]);
    }
    model = noise::drift_step(model, cfg.interval_s, rng);
  }
  out.tables.push_back(std::move(t));

  // Reorder statistics starting from the wrong order.
  noise::DriftModel wrong = cfg.drift;
  wrong.order = crystal::flipped(wrong.target_order);
  std::vector<int> cycles(static_cast<std::size_t>(cfg.reorder_trials));
  parallel_for(cycles.size(), jobs, [&](std::size_t i) {
    cycles[i] = noise::reorder(wrong, derive_seed(s.seed, 1000000 + i)).cycles;
  });
  double mean = 0.0, var = 0.0;
  for (int x : cycles) mean += x;
  if (!cycles.empty()) mean /= static_cast<double>(cycles.size());
  for (int x : cycles) var += (x - mean) * (x - mean);
  const double stderr_mean =
      cycles.size() > 1 ? std::sqrt(var / (cycles.size() - 1.0) / static_cast<double>(cycles.size())) : 0.0;

  const auto ab = cfg.drift.qubit_frequencies(crystal::IonOrder::AB);
  const auto ba = cfg.drift.qubit_frequencies(crystal::IonOrder::BA);
  const std::array<double, 2> signature{ba[0] - ab[0], ba[1] - ab[1]};

  auto rms = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
  };

  out.converged = probe_failures == 0;
  if (probe_failures > 0)
    out.warnings.push_back(fmt::format("{} calibration probe fit(s) did not converge", probe_failures));

  json results = {{"order_signature_hz", signature},
                  {"order_detections", detections},
                  {"probe_failures", probe_failures},
                  {"final_order", crystal::to_string(model.order)},
                  {"residual_offset_rms_hz", {rms(residual_a), rms(residual_b)}},
                  {"reorder_trials", cfg.reorder_trials},
                  {"mean_reorder_cycles", mean},
                  {"sigma_mean_reorder_cycles", stderr_mean}};
  out.summary = finish_summary(s, results, out.warnings, out.converged);

  std::string r;
  r += fmt::format("calibration_drift  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  order signature (BA - AB)  a {:+.1f} Hz  b {:+.1f} Hz\n", signature[0], signature[1]);
  r += fmt::format("  calibration cycles         {}  (every {:g} s)\n", cfg.cycles, cfg.interval_s);
  r += fmt::format("  wrong order detected       {} time(s)\n", detections);
  r += fmt::format("  probe fit failures         {}\n", probe_failures);
  r += fmt::format("  residual LO offset rms     a {:.1f} Hz  b {:.1f} Hz\n", rms(residual_a), rms(residual_b));
  r += fmt::format("  mean reorder cycles        {:.4f} +/- {:.4f} over {} trials\n", mean, stderr_mean,
                   cfg.reorder_trials);
  out.report = r;
  return out;
}

// --- mode_geometry -----------------------------------------------------------

RunResult run_mode_geometry(const Scenario& s) {
  const auto summary = crystal::summarize(build_physics(s).crystal.crystal, s.crystal.beam);
  const auto& cr = summary.crystal;
  const auto& ip = summary.modes.in_phase;
  const auto op = crystal::with_lamb_dicke(summary.modes.out_of_phase, s.crystal.beam, cr);
  const double period = s.crystal.beam.lattice_period();

  RunResult out;
  Table t{"mode_geometry", {"mode", "frequency_hz", "b_a", "b_b", "eta_a", "eta_b"}, {}};
  auto mode_json = [&](const crystal::MotionalMode& m) {
    return json{{"frequency_hz", m.frequency_hz},
                {"b_a", m.component(cr, Qubit::a)},
                {"b_b", m.component(cr, Qubit::b)},
                {"eta_a", m.eta_a},
                {"eta_b", m.eta_b}};
  };
  for (const auto& [name, m] : {std::pair{"in_phase", ip}, std::pair{"out_of_phase", op}}) {
    t.rows.push_back({name, num(m.frequency_hz), num(m.component(cr, Qubit::a)), num(m.component(cr, Qubit::b)),
                      num(m.eta_a), num(m.eta_b)});
  }
  out.tables.push_back(std::move(t));

  json results = {{"axial_reference_frequency_hz", cr.f_axial_reference_hz},
                  {"in_phase", mode_json(ip)},
                  {"out_of_phase", mode_json(op)},
                  {"separation_m", summary.separation_m},
                  {"lattice_period_m", period},
                  {"lattice_periods", summary.alignment.periods},
                  {"relative_force_sign", summary.alignment.relative_force_sign},
                  {"residual_phase_rad", summary.alignment.residual_phase_rad}};
  out.summary = finish_summary(s, results, out.warnings, true);

  std::string r;
  r += fmt::format("mode_geometry  seed {}  config {}\n\n", s.seed, out.summary["config_hash"].get<std::string>());
  r += fmt::format("  ions                  {} (a), {} (b), order {}\n", cr.species_a.label, cr.species_b.label,
                   crystal::to_string(cr.order));
  r += fmt::format("  single-ion reference  {:.6f} MHz\n", cr.f_axial_reference_hz / 1e6);
  r += fmt::format("  in-phase mode         {:.6f} MHz  b = ({:.5f}, {:.5f})\n", ip.frequency_hz / 1e6,
                   ip.component(cr, Qubit::a), ip.component(cr, Qubit::b));
  r += fmt::format("  out-of-phase mode     {:.6f} MHz  b = ({:+.5f}, {:+.5f})\n", op.frequency_hz / 1e6,
                   op.component(cr, Qubit::a), op.component(cr, Qubit::b));
  r += fmt::format("  eta (in-phase)        ({:.3f}, {:.3f})\n", ip.eta_a, ip.eta_b);
  r += fmt::format("  separation            {:.3f} um\n", summary.separation_m * 1e6);
  r += fmt::format("  lattice period        {:.2f} nm\n", period * 1e9);
  r += fmt::format("  separation / period   {:.3f}  (force sign {:+d}, residual {:+.3f} rad)\n",
                   summary.alignment.periods, summary.alignment.relative_force_sign,
                   summary.alignment.residual_phase_rad);
  out.report = r;
  return out;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + csv_escape(columns[i]);
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
    out += "\n";
  }
  return out;
}

PhysicsSetup build_physics(const Scenario& s) {
  crystal::TwoIonCrystal cr{s.crystal.species_a, s.crystal.species_b, 0.0, s.crystal.order};
  if (s.crystal.axial_reference_frequency_hz) {
    cr.f_axial_reference_hz = *s.crystal.axial_reference_frequency_hz;
  } else {
    cr.f_axial_reference_hz = crystal::reference_frequency_for_in_phase(cr, *s.crystal.in_phase_frequency_hz);
  }
  PhysicsSetup out;
  out.crystal = crystal::summarize(cr, s.crystal.beam);
  const auto& mode = out.crystal.modes.in_phase;

  const auto& g = s.gate;
  auto drive = dynamics::DriveConfig::for_mode(mode.frequency_hz, g.resolved_gate_detuning_hz());
  drive.raman_detuning_hz = g.raman_detuning_hz;
  drive.couplings = g.couplings_hz;
  drive.optical_phase_rad = g.optical_phase_rad;
  drive.light_shift_a_hz = g.light_shift_a_hz;
  drive.light_shift_b_hz = g.light_shift_b_hz;

  const double half = 0.5 * g.gate_time_s;
  out.gate.drive = drive;
  out.gate.envelope = g.shape == dynamics::EnvelopeShape::shaped ? dynamics::Envelope::shaped(half, g.ramp_time_s)
                                                                 : dynamics::Envelope::square(half);
  out.gate.mode = mode;
  out.gate.force_sign = g.force_sign.value_or(out.crystal.alignment.relative_force_sign);
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over base and index
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

RunResult run_scenario(Scenario scenario, const RunOptions& options) {
  if (options.seed) {
    scenario.seed = *options.seed;
    scenario.noise.seed = *options.seed;
  }
  if (options.out_dir) scenario.output_dir = *options.out_dir;
  scenario.validate();
  const int jobs = std::max(1, options.jobs);

  RunResult result;
  switch (scenario.kind) {
    case ScenarioKind::gate_fidelity:
      result = run_gate_fidelity(scenario, jobs);
      break;
    case ScenarioKind::tomography:
      result = run_tomography(scenario, jobs);
      break;
    case ScenarioKind::chsh:
      result = run_chsh(scenario, jobs);
      break;
    case ScenarioKind::lightshift_sweep:
      result = run_lightshift(scenario, jobs);
      break;
    case ScenarioKind::calibration_drift:
      result = run_calibration(scenario, jobs);
      break;
    case ScenarioKind::mode_geometry:
      result = run_mode_geometry(scenario);
      break;
  }
  if (options.write_files) write_outputs(result, scenario.output_dir);
  return result;
}

void write_outputs(const RunResult& result, const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& t : result.tables) write_text(fs::path(dir) / (t.file_name + ".csv"), t.to_csv());
  write_text(fs::path(dir) / "summary.json", result.summary.dump(2) + "\n");
  write_text(fs::path(dir) / "report.txt", result.report);
}

json fixture(ScenarioKind kind) {
  Scenario s;
  s.kind = kind;
  s.seed = 1729;
  s.output_dir = std::string("out/") + config::to_string(kind);
  s.crystal.in_phase_frequency_hz = 2.00e6;

  // Unequal per-state forces; only their overall scale is fixed, by the
  // requirement that the symmetrized gate phase equal pi/2.
  s.gate.couplings_hz = {1.0, -0.6, 0.8, -0.9};
  {
    const auto physics = build_physics(s);
    const double scale = dynamics::coupling_scale_for_phase(physics.gate.drive, physics.gate.envelope,
                                                            physics.gate.mode, physics.gate.force_sign,
                                                            0.5 * c::pi);
    s.gate.couplings_hz = s.gate.couplings_hz.scaled(scale);
  }

  const auto reference_readout = [&] {
    s.noise.readout_a = noise::ConfusionMatrix::symmetric(0.077);
    s.noise.readout_b = noise::ConfusionMatrix::symmetric(0.044);
  };
  switch (kind) {
    case ScenarioKind::gate_fidelity:
      reference_readout();
      s.noise.state_prep_error = 0.001;
      s.noise.scattering_error = 0.001;
      break;
    case ScenarioKind::tomography:
      reference_readout();
      s.noise.state_prep_error = 0.001;
      s.noise.scattering_error = 0.001;
      break;
    case ScenarioKind::chsh:
      s.noise.state_prep_error = 0.001;
      s.noise.scattering_error = 0.001;
      s.chsh.detection_error = 0.06;
      break;
    case ScenarioKind::lightshift_sweep: {
      s.gate.light_shift_a_hz = s.gate.light_shift_b_hz = 1.0;
      const auto physics = build_physics(s);
      const double amp = dynamics::calibrate_light_shift_scale(
          physics.gate.drive, dynamics::Envelope::square(0.5 * s.gate.gate_time_s), 0.05);
      s.gate.light_shift_a_hz = s.gate.light_shift_b_hz = amp;
      break;
    }
    case ScenarioKind::calibration_drift: {
      auto& cd = s.calibration_drift;
      cd.drift.order = crystal::IonOrder::BA;
      cd.drift.volatility_t_per_sqrt_s = 2e-10;
      cd.lo_offset_hz = {2000.0, 2000.0};
      cd.cycles = 50;
      break;
    }
    case ScenarioKind::mode_geometry:
      break;
  }
  return config::to_json(s);
}

std::string write_fixture(ScenarioKind kind, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / (std::string(config::to_string(kind)) + ".json");
  write_text(path, fixture(kind).dump(2) + "\n");
  return path.string();
}

}  // namespace isogate::scenario
