#include <cmath>
#include <random>

#include <gsl/gsl_multimin.h>

#include "doctest.h"

#include "isogate/analysis.hpp"
#include "isogate/constants.hpp"
#include "isogate/sequence.hpp"

using namespace isogate;
using namespace isogate::analysis;
using noise::ConfusionMatrix;
namespace c = isogate::constants;

namespace {

DensityMatrix bell_rho() { return bell_phi_plus() * bell_phi_plus().adjoint(); }

DensityMatrix werner(double p) { return p * bell_rho() + (1 - p) * DensityMatrix::Identity() / 4.0; }

DensityMatrix random_full_rank(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix4cd a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = cdouble(g(rng), g(rng));
  DensityMatrix rho = a * a.adjoint() + 0.05 * DensityMatrix::Identity();
  return rho / rho.trace().real();
}

double min_eigenvalue(const DensityMatrix& rho) {
  return Eigen::SelfAdjointEigenSolver<DensityMatrix>(rho).eigenvalues().minCoeff();
}

// Parity fringe of a state with the ideal Ramsey sequence, built directly:
// P_odd(phi) = (1 - C sin(2 phi + phi0)) / 2.
std::vector<double> fringe(const std::vector<double>& phis, double contrast, double phi0, double base) {
  std::vector<double> out;
  for (double p : phis) out.push_back(0.5 * (1 - contrast * std::sin(2 * p + phi0)) + base);
  return out;
}

std::vector<double> scan_phases(int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(c::pi * i / n);
  return out;
}

struct NmData {
  const std::vector<noise::ShotSet>* data;
  const TomographyOptions* options;
};

double nm_objective(const gsl_vector* x, void* params) {
  const auto* d = static_cast<NmData*>(params);
  std::array<double, 16> p;
  for (int i = 0; i < 16; ++i) p[i] = gsl_vector_get(x, i);
  return -tomography_log_likelihood(*d->data, cholesky_to_rho(p), *d->options);
}

// Independent maximizer: Nelder-Mead simplex over the same parameterization,
// restarted until the objective stops moving.
DensityMatrix nelder_mead_mle(const std::vector<noise::ShotSet>& data, const TomographyOptions& options) {
  NmData d{&data, &options};
  gsl_multimin_function f{&nm_objective, 16, &d};
  gsl_vector* x = gsl_vector_alloc(16);
  gsl_vector_set_zero(x);
  for (int i = 0; i < 4; ++i) gsl_vector_set(x, i, 0.5);
  gsl_vector* step = gsl_vector_alloc(16);
  double last = 1e300;
  for (int restart = 0; restart < 40; ++restart) {
    gsl_vector_set_all(step, restart == 0 ? 0.2 : 0.02);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 16);
    gsl_multimin_fminimizer_set(s, &f, x, step);
    for (int it = 0; it < 20000; ++it) {
      if (gsl_multimin_fminimizer_iterate(s)) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) break;
    }
    gsl_vector_memcpy(x, s->x);
    const double value = s->fval;
    gsl_multimin_fminimizer_free(s);
    if (std::abs(last - value) < 1e-9) break;
    last = value;
  }
  std::array<double, 16> p;
  for (int i = 0; i < 16; ++i) p[i] = gsl_vector_get(x, i);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return cholesky_to_rho(p);
}

}  // namespace

TEST_CASE("readout correction inverts the confusion map") {
  const ConfusionMatrix a{0.08, 0.06};
  const ConfusionMatrix b{0.04, 0.05};
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Populations p;
    for (int k = 0; k < 4; ++k) p[k] = gamma(rng);
    p /= p.sum();
    const Populations back = correct_readout(noise::apply_confusion(p, a, b), a, b);
    CHECK((back - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(back.sum() - 1.0) < 1e-15);
  }
  const Populations p(0.3, 0.2, 0.1, 0.4);
  CHECK((correct_readout(p, {}, {}) - p).norm() < 1e-15);
  CHECK_THROWS_AS(correct_readout(p, ConfusionMatrix::symmetric(0.5), {}), InvalidInput);
  CHECK_THROWS_AS(correct_readout(p, ConfusionMatrix::symmetric(0.6), {}), InvalidInput);
}

TEST_CASE("corrected Bell populations at 10^6 shots sit within 4 sigma") {
  const auto a = ConfusionMatrix::symmetric(0.077);
  const auto b = ConfusionMatrix::symmetric(0.044);
  const Populations truth(0.5, 0, 0, 0.5);
  const std::uint64_t n = 1000000;
  const auto shots = noise::sample_shots(noise::apply_confusion(truth, a, b), n, 77);
  const Populations corrected = correct_readout(shots, a, b);
  const Eigen::Matrix4d inv = noise::confusion_map(a, b).inverse();
  const Populations measured = noise::apply_confusion(truth, a, b);
  for (int k = 0; k < 4; ++k) {
    // Multinomial covariance pushed through the inverse.
    double var = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double cov = (i == j ? measured[i] : 0.0) - measured[i] * measured[j];
        var += inv(k, i) * inv(k, j) * cov / n;
      }
    CHECK(std::abs(corrected[k] - truth[k]) < 4 * std::sqrt(var));
  }
}

TEST_CASE("binomial sigma") {
  CHECK(binomial_sigma(0.5, 100) == doctest::Approx(0.05));
  CHECK(binomial_sigma(0.0, 100) > 0.0);
  CHECK(binomial_sigma(1.0, 100) > 0.0);
  CHECK_THROWS_AS(binomial_sigma(0.5, 0), InvalidInput);
}

TEST_CASE("parity fit on exact fringes") {
  const auto phis = scan_phases(16);
  const std::vector<double> sigma(16, 0.01);
  const auto ideal = parity_scan_fit(phis, fringe(phis, 1.0, sequence::kParityPhaseOffset, 0.0), sigma);
  CHECK(ideal.contrast == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(ideal.baseline) < 1e-12);
  CHECK(ideal.phase_offset_rad == doctest::Approx(sequence::kParityPhaseOffset).epsilon(1e-12));
  CHECK(ideal.chi2 < 1e-20);
  CHECK(ideal.dof == 13);
  CHECK(ideal.predict(0.3) == doctest::Approx(0.5 * (1 - std::sin(0.6 - 0.5 * c::pi))));

  // A quarter-strength gate (Phi = pi/4) has contrast 1/sqrt(2).
  const auto& rp = sequence::kRamseyPhases;
  const cdouble i(0, 1);
  const Unitary4 first = kron(rotation_unitary(0.5 * c::pi, rp.first[0]), rotation_unitary(0.5 * c::pi, rp.first[1]));
  const Unitary4 second = kron(rotation_unitary(0.5 * c::pi, rp.second_without_echo[0]),
                               rotation_unitary(0.5 * c::pi, rp.second_without_echo[1]));
  const Eigen::Vector4cd gate(1, std::exp(i * 0.25 * c::pi), std::exp(i * 0.25 * c::pi), 1);
  const Eigen::Vector4cd prepared = second * gate.asDiagonal() * first * Eigen::Vector4cd(1, 0, 0, 0);
  std::vector<double> p_odd;
  for (double phi : phis) {
    const Eigen::Vector4cd ket =
        kron(rotation_unitary(0.5 * c::pi, phi), rotation_unitary(0.5 * c::pi, phi)) * prepared;
    p_odd.push_back(std::norm(ket[1]) + std::norm(ket[2]));
  }
  CHECK(std::norm(bell_phi_plus().dot(prepared)) == doctest::Approx(std::pow(std::cos(c::pi / 8), 2)));
  const auto quarter = parity_scan_fit(phis, p_odd, sigma);
  CHECK(quarter.contrast == doctest::Approx(M_SQRT1_2).epsilon(1e-3));
}

TEST_CASE("parity fit recovers injected fringes within 3 standard errors") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> uc(0.5, 1.0), uphi(-c::pi, c::pi);
  const auto phis = scan_phases(16);
  const std::uint64_t n = 500;
  int contrast_misses = 0, phase_misses = 0;
  const int datasets = 500;
  for (int d = 0; d < datasets; ++d) {
    const double contrast = uc(rng), phi0 = uphi(rng);
    const auto truth = fringe(phis, contrast, phi0, 0.0);
    std::vector<double> p, s;
    for (double t : truth) {
      std::binomial_distribution<std::uint64_t> draw(n, t);
      const double est = static_cast<double>(draw(rng)) / n;
      p.push_back(est);
      s.push_back(binomial_sigma(est, n));
    }
    const auto fit = parity_scan_fit(phis, p, s);
    if (std::abs(fit.contrast - contrast) > 3 * fit.sigma_contrast) ++contrast_misses;
    if (std::abs(std::remainder(fit.phase_offset_rad - phi0, 2 * c::pi)) > 3 * fit.sigma_phase_offset)
      ++phase_misses;
  }
  // Gaussian coverage leaves about 1.4 misses per parameter.
  CHECK(contrast_misses <= 5);
  CHECK(phase_misses <= 5);
}

TEST_CASE("parity fit rejects unusable scans") {
  const std::vector<double> four{0, 0.1, 0.2, 0.3};
  CHECK_THROWS_AS(parity_scan_fit(four, {0.5, 0.5, 0.5, 0.5}, {0.1, 0.1, 0.1, 0.1}), InvalidInput);
  const std::vector<double> degenerate{0, c::pi, 2 * c::pi, 3 * c::pi, 4 * c::pi};
  CHECK_THROWS_AS(parity_scan_fit(degenerate, std::vector<double>(5, 0.5), std::vector<double>(5, 0.1)),
                  InvalidInput);
  const auto phis = scan_phases(8);
  CHECK_THROWS_AS(parity_scan_fit(phis, std::vector<double>(8, 0.5), std::vector<double>(8, 0.0)),
                  InvalidInput);
  CHECK_THROWS_AS(parity_scan_fit(phis, std::vector<double>(7, 0.5), std::vector<double>(8, 0.1)),
                  InvalidInput);
}

TEST_CASE("fidelity from parity") {
  const auto f = fidelity_from_parity({0.5, 0.01}, {0.5, 0.02}, {1.0, 0.02});
  CHECK(f.value == doctest::Approx(1.0));
  CHECK(f.sigma == doctest::Approx(0.5 * std::sqrt(0.0001 + 0.0004 + 0.0004)));
  CHECK(fidelity_from_parity({0.499, 0}, {0.499, 0}, {0.998, 0}).value == doctest::Approx(0.998));
  CHECK(fidelity_from_parity({0.25, 0}, {0.25, 0}, {0.0, 0}).value == doctest::Approx(0.25));
}

TEST_CASE("Cholesky parameterization") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix rho = random_full_rank(rng);
    const DensityMatrix back = cholesky_to_rho(rho_to_cholesky(rho));
    CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-11);
  }
  std::array<double, 16> params{};
  CHECK_THROWS_AS(cholesky_to_rho(params), InvalidInput);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    for (auto& v : params) v = g(rng);
    const DensityMatrix rho = cholesky_to_rho(params);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-14);
    CHECK((rho - rho.adjoint()).norm() < 1e-15);
    CHECK(min_eigenvalue(rho) > -1e-14);
  }
}

TEST_CASE("tomography settings") {
  const auto settings = tomography_settings();
  REQUIRE(settings.size() == 9);
  CHECK(settings[0].label == "ZZ");
  CHECK(settings[8].label == "YY");
  // X and Y settings map the Bell state's correlations to +1, -1 as expected.
  for (const auto& s : settings) {
    const Populations p = setting_populations(bell_rho(), s);
    const double corr = p[0] + p[3] - p[1] - p[2];
    double expected = 0.0;
    if (s.label == "ZZ" || s.label == "XX") expected = 1.0;
    if (s.label == "YY") expected = -1.0;
    CHECK(corr == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("MLE tomography on synthetic data") {
  SUBCASE("noiseless Bell state") {
    const auto data = simulate_tomography(bell_rho(), 100000, {}, {}, 5);
    TomographyOptions opt;
    opt.readout = ReadoutHandling::none;
    const auto r = mle_tomography(data, opt);
    CHECK(r.converged);
    CHECK(r.fidelity >= 0.999);
    CHECK(min_eigenvalue(r.rho) > -1e-12);
    CHECK(std::abs(r.rho.trace() - 1.0) < 1e-12);
  }
  SUBCASE("readout error folded into the likelihood") {
    const auto a = ConfusionMatrix::symmetric(0.077);
    const auto b = ConfusionMatrix::symmetric(0.044);
    const auto data = simulate_tomography(bell_rho(), 100000, a, b, 6);
    TomographyOptions opt;
    opt.readout_a = a;
    opt.readout_b = b;
    const auto folded = mle_tomography(data, opt);
    CHECK(folded.converged);
    CHECK(folded.fidelity >= 0.99);
    // The estimate must beat the true state on its own data.
    CHECK(folded.log_likelihood >= tomography_log_likelihood(data, bell_rho(), opt));
    opt.readout = ReadoutHandling::pre_inverted;
    const auto inverted = mle_tomography(data, opt);
    CHECK(inverted.fidelity >= 0.98);
    opt.readout = ReadoutHandling::none;
    CHECK(mle_tomography(data, opt).fidelity < 0.9);
  }
  SUBCASE("maximally mixed input") {
    const auto data = simulate_tomography(DensityMatrix::Identity() / 4.0, 100000, {}, {}, 7);
    TomographyOptions opt;
    opt.readout = ReadoutHandling::none;
    const auto r = mle_tomography(data, opt);
    CHECK(trace_distance(r.rho, DensityMatrix::Identity() / 4.0) < 0.01);
  }
  SUBCASE("bad inputs") {
    auto data = simulate_tomography(bell_rho(), 1000, {}, {}, 8);
    auto missing = data;
    missing.pop_back();
    CHECK_THROWS_AS(mle_tomography(missing), InvalidInput);
    auto duplicate = data;
    duplicate.back() = duplicate.front();
    CHECK_THROWS_AS(mle_tomography(duplicate), InvalidInput);
    auto sparse = simulate_tomography(bell_rho(), 50, {}, {}, 8);
    CHECK_THROWS_AS(mle_tomography(sparse), InvalidInput);
    CHECK(readout_handling_from_string("pre_inverted") == ReadoutHandling::pre_inverted);
    CHECK_THROWS_AS(readout_handling_from_string("inverse"), InvalidInput);
  }
}

TEST_CASE("gradient MLE agrees with a Nelder-Mead maximizer") {
  std::mt19937_64 rng(31);
  const auto a = ConfusionMatrix::symmetric(0.05);
  const auto b = ConfusionMatrix{0.03, 0.06};
  const std::array<DensityMatrix, 3> states{werner(0.8), random_full_rank(rng),
                                            0.7 * DensityMatrix(Eigen::Vector4cd(0.5, 0.5, 0.5, 0.5) *
                                                                Eigen::RowVector4cd(0.5, 0.5, 0.5, 0.5)) +
                                                0.3 * DensityMatrix::Identity() / 4.0};
  for (std::size_t k = 0; k < states.size(); ++k) {
    CAPTURE(k);
    const auto data = simulate_tomography(states[k], 2000, a, b, 100 + k);
    TomographyOptions opt;
    opt.readout_a = a;
    opt.readout_b = b;
    const auto grad = mle_tomography(data, opt);
    const DensityMatrix nm = nelder_mead_mle(data, opt);
    const double l_nm = tomography_log_likelihood(data, nm, opt);
    CHECK(grad.log_likelihood >= l_nm - 1e-6 * std::abs(l_nm));
    CHECK(trace_distance(grad.rho, nm) < 5e-3);
  }
}

TEST_CASE("CHSH correlations of the ideal Bell state") {
  const ChshAngles angles;
  const auto settings = angles.settings();
  const std::array<double, 4> sign{1, 1, 1, -1};
  std::array<double, 4> e{};
  for (int k = 0; k < 4; ++k) {
    e[k] = correlation(bell_rho(), settings[k][0], settings[k][1]);
    CHECK(e[k] * sign[k] == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  }
  const double s = std::abs(e[0] + e[1]) + std::abs(e[2] - e[3]);
  CHECK(s == doctest::Approx(2 * M_SQRT2).epsilon(1e-12));

  // Same numbers from explicit outcome enumeration with hand-built rotations.
  auto rot = [](double th) {
    Eigen::Matrix2cd m;  // R(theta, pi/2) is a real rotation about y
    m << std::cos(th / 2), -std::sin(th / 2), std::sin(th / 2), std::cos(th / 2);
    return m;
  };
  for (int k = 0; k < 4; ++k) {
    const Eigen::Vector4cd out = kron(rot(settings[k][0]), rot(settings[k][1])) * bell_phi_plus();
    const double enumerated = std::norm(out[0]) + std::norm(out[3]) - std::norm(out[1]) - std::norm(out[2]);
    CHECK(enumerated == doctest::Approx(e[k]).epsilon(1e-12));
  }
}

TEST_CASE("CHSH estimator") {
  // Measured reference correlations.
  const std::array<double, 4> measured{0.551, 0.544, 0.562, -0.571};
  std::array<Correlation, 4> corr;
  for (int k = 0; k < 4; ++k) corr[k] = {0, 0, measured[k], 0.007, 4000};
  const auto r = chsh_S(corr);
  CHECK(std::abs(r.S - 2.228) < 1e-12);
  CHECK(r.sigma_S == doctest::Approx(0.014).epsilon(1e-12));

  noise::ShotSet shots;
  shots.counts = {1500, 500, 500, 1500};
  const auto e = chsh_E(shots, 0.1, 0.2);
  CHECK(e.E == doctest::Approx(0.5));
  CHECK(e.sigma == doctest::Approx(std::sqrt(0.75 / 4000)));
  corr[0].E = 1.2;
  CHECK_THROWS_AS(chsh_S(corr), InvalidInput);
  CHECK_THROWS_AS(chsh_E(noise::ShotSet{}, 0, 0), InvalidInput);
}

TEST_CASE("product states never violate the CHSH bound") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, c::two_pi);
  const ChshAngles angles;
  for (int trial = 0; trial < 300; ++trial) {
    const Unitary2 ua = rotation_unitary(u(rng), u(rng));
    const Unitary2 ub = rotation_unitary(u(rng), u(rng));
    Eigen::Vector4cd ket = kron(ua, ub) * Eigen::Vector4cd(1, 0, 0, 0);
    const DensityMatrix rho = ket * ket.adjoint();
    ChshAngles random_angles{u(rng), u(rng), u(rng), u(rng)};
    for (const auto& ang : {angles, random_angles}) {
      const auto st = ang.settings();
      std::array<double, 4> e;
      for (int k = 0; k < 4; ++k) e[k] = correlation(rho, st[k][0], st[k][1]);
      CHECK(std::abs(e[0] + e[1]) + std::abs(e[2] - e[3]) <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("sampled S of any state stays below the Tsirelson bound") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, c::two_pi);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityMatrix rho = trial % 2 ? random_full_rank(rng) : bell_rho();
    const ChshAngles ang = trial % 2 ? ChshAngles{u(rng), u(rng), u(rng), u(rng)} : ChshAngles{};
    std::array<Correlation, 4> corr;
    const auto st = ang.settings();
    for (int k = 0; k < 4; ++k) {
      const Unitary4 rot = kron(rotation_unitary(st[k][0], sequence::kChshAnalysisPhase),
                                rotation_unitary(st[k][1], sequence::kChshAnalysisPhase));
      const DensityMatrix out = rot * rho * rot.adjoint();
      Populations p = out.diagonal().real();
      p /= p.sum();
      corr[k] = chsh_E(noise::sample_shots(p.cwiseMax(0.0) / p.cwiseMax(0.0).sum(), 4000, rng()), st[k][0],
                       st[k][1]);
    }
    const auto r = chsh_S(corr);
    CHECK(r.S <= 2 * M_SQRT2 + 4 * r.sigma_S);
  }
}

TEST_CASE("S_max under detection error") {
  CHECK(s_max({}, {}) == doctest::Approx(2 * M_SQRT2).epsilon(1e-9));
  const auto e5 = ConfusionMatrix::symmetric(0.05);
  CHECK(s_max_symmetric_closed_form(0.05, 0.05) == doctest::Approx(2.2910).epsilon(1e-4));
  CHECK(std::abs(s_max(e5, e5) - s_max_symmetric_closed_form(0.05, 0.05)) < 1e-6);
  CHECK(std::abs(s_max(ConfusionMatrix::symmetric(0.03), ConfusionMatrix::symmetric(0.08)) -
                 s_max_symmetric_closed_form(0.03, 0.08)) < 1e-6);
  // Band over the plausible error range contains the measured 2.236.
  const double hi = s_max(ConfusionMatrix::symmetric(0.045), ConfusionMatrix::symmetric(0.045));
  const double lo = s_max(ConfusionMatrix::symmetric(0.065), ConfusionMatrix::symmetric(0.065));
  CHECK(lo <= 2.236);
  CHECK(hi >= 2.236);
  // Non-increasing in each error parameter.
  double previous = 3.0;
  for (double eps = 0.0; eps <= 0.2; eps += 0.02) {
    const double s = s_max(ConfusionMatrix{eps, 0.0}, ConfusionMatrix::symmetric(0.03));
    CHECK(s <= previous + 1e-9);
    previous = s;
  }
}

TEST_CASE("plug-in sigma_E agrees with the bootstrap") {
  const double e_true = 0.545;
  const Populations dist(0.25 * (1 + e_true), 0.25 * (1 - e_true), 0.25 * (1 - e_true), 0.25 * (1 + e_true));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto shots = noise::sample_shots(dist, 4000, seed);
    const auto e = chsh_E(shots, 0, 0);
    const double boot = bootstrap_sigma_E(shots, 1000, seed + 10);
    CHECK(std::abs(boot / e.sigma - 1.0) < 0.10);
  }
}
