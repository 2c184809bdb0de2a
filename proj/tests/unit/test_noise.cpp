#include <cmath>
#include <random>

#include "doctest.h"

#include "isogate/constants.hpp"
#include "isogate/noise.hpp"

using namespace isogate;
using namespace isogate::noise;

namespace {

TwoQubitState bell() { return TwoQubitState::pure(bell_phi_plus()); }

Populations bell_populations() { return Populations(0.5, 0.0, 0.0, 0.5); }

}  // namespace

TEST_CASE("confusion matrices") {
  const auto id = confusion_map({}, {});
  CHECK((id - Eigen::Matrix4d::Identity()).norm() == 0.0);
  const ConfusionMatrix a{0.08, 0.05};
  const ConfusionMatrix b{0.03, 0.06};
  const auto m = confusion_map(a, b);
  for (int col = 0; col < 4; ++col) CHECK(m.col(col).sum() == doctest::Approx(1.0).epsilon(1e-15));
  // Column = true state: a prepared up ion is read down with eps_dark.
  CHECK(a.matrix()(0, 1) == 0.08);
  CHECK(a.matrix()(1, 0) == 0.05);
  // Symmetric errors fix the uniform distribution.
  const auto sym = confusion_map(ConfusionMatrix::symmetric(0.1), ConfusionMatrix::symmetric(0.2));
  const Populations uniform = Populations::Constant(0.25);
  CHECK((sym * uniform - uniform).norm() < 1e-15);
  CHECK_THROWS_AS(ConfusionMatrix({1.2, 0.0}).validate(), InvalidInput);
  CHECK_THROWS_AS(ConfusionMatrix({-0.1, 0.0}).validate(), InvalidInput);
}

TEST_CASE("readout error costs about 3/2 (eps_a + eps_b) of apparent Bell fidelity") {
  const auto a = ConfusionMatrix::symmetric(0.077);
  const auto b = ConfusionMatrix::symmetric(0.044);
  const Populations p = apply_confusion(bell_populations(), a, b);
  // Parity contrast shrinks by (1 - 2 eps_a)(1 - 2 eps_b).
  const double contrast = (1 - 2 * 0.077) * (1 - 2 * 0.044);
  const double apparent = 0.5 * (p[0] + p[3]) + 0.5 * contrast;
  CHECK(1.0 - apparent == doctest::Approx(0.1713).epsilon(1e-3));
  CHECK(std::abs((1.0 - apparent) - 0.18) <= 0.01);
  CHECK(1.5 * (0.077 + 0.044) == doctest::Approx(0.1815));
}

TEST_CASE("shot sampling") {
  const Populations dist(0.4, 0.0, 0.1, 0.5);
  const auto s1 = sample_shots(dist, 1000, 17, "zz");
  const auto s2 = sample_shots(dist, 1000, 17, "zz");
  CHECK(s1.counts == s2.counts);
  CHECK(s1.total() == 1000);
  CHECK(s1.counts[1] == 0);
  CHECK(s1.setting == "zz");
  CHECK(sample_shots(dist, 1000, 18).counts != s1.counts);

  const std::uint64_t n = 1000000;
  const auto big = sample_shots(dist, n, 5);
  for (int k = 0; k < 4; ++k) {
    const double sigma = std::sqrt(dist[k] * (1 - dist[k]) / n);
    CHECK(std::abs(big.frequencies()[k] - dist[k]) <= 4 * sigma + 1e-15);
  }
  CHECK_THROWS_AS(sample_shots(Populations(0.5, 0.5, 0.5, -0.5), 10, 1), InvalidInput);
}

TEST_CASE("scattering costs exactly p_scat of Bell fidelity") {
  for (double p : {0.0, 1e-4, 1e-3, 0.01, 0.1, 0.5}) {
    auto state = bell();
    apply_scattering(state, p);
    CHECK(state.bell_fidelity() == doctest::Approx(1.0 - p).epsilon(1e-12));
    CHECK_NOTHROW(state.check_invariants());
  }
  auto state = bell();
  apply_scattering(state, 0.001);
  CHECK(std::abs(state.bell_fidelity() - 0.999) < 1e-4);
  apply_scattering(state = bell(), 0.5);
  CHECK(state.bell_fidelity() >= 0.25);
  CHECK(depolarizing_strength(0.75) == doctest::Approx(1.0));
  CHECK_THROWS_AS(depolarizing_strength(0.8), InvalidInput);
  CHECK_THROWS_AS(depolarizing_strength(-0.1), InvalidInput);
}

TEST_CASE("state preparation leakage") {
  const auto s = TwoQubitState::prepared(0.01, 0.02);
  const auto p = s.populations();
  CHECK(p[0] == doctest::Approx(0.99 * 0.98).epsilon(1e-15));
  CHECK(p[3] == doctest::Approx(0.01 * 0.02).epsilon(1e-15));
}

TEST_CASE("differential Zeeman signature of the ion order") {
  DriftModel model;
  const auto ab = model.qubit_frequencies(crystal::IonOrder::AB);
  const auto ba = model.qubit_frequencies(crystal::IonOrder::BA);
  // 0.18 uT times each sensitivity.
  CHECK(ab[0] - ba[0] == doctest::Approx(-0.18e-6 * 2.8025e10).epsilon(1e-9));
  CHECK(ab[1] - ba[1] == doctest::Approx(0.18e-6 * 2.45e10).epsilon(1e-9));
  CHECK(std::abs(ab[0] - ba[0]) == doctest::Approx(5044.5).epsilon(1e-6));
  CHECK(detect_order(model, ab).order == crystal::IonOrder::AB);
  CHECK(detect_order(model, ba).order == crystal::IonOrder::BA);
  CHECK(detect_order(model, ab).differential_field_t == doctest::Approx(0.18e-6).epsilon(1e-6));
}

TEST_CASE("drift walk") {
  DriftModel model;
  Rng rng(3);
  CHECK(drift_step(model, 10.0, rng).drift_t == 0.0);
  model.volatility_t_per_sqrt_s = 1e-9;
  // Stationary OU variance is sigma^2 tau / 2.
  double sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    model = drift_step(model, 60.0, rng);
    sum2 += model.drift_t * model.drift_t;
  }
  const double expected = 1e-18 * 60.0 / 2;
  CHECK(sum2 / n == doctest::Approx(expected).epsilon(0.05));
  CHECK_THROWS_AS(drift_step(model, -1.0, rng), InvalidInput);
}

TEST_CASE("reorder takes two melt cycles on average") {
  DriftModel model;
  model.order = crystal::IonOrder::BA;
  Rng rng(11);
  const int trials = 10000;
  double sum = 0.0;
  for (int i = 0; i < trials; ++i) {
    const auto r = reorder(model, rng);
    CHECK(r.order == model.target_order);
    CHECK(r.cycles >= 1);
    sum += r.cycles;
  }
  CHECK(std::abs(sum / trials - 2.0) <= 0.05);
  model.order = crystal::IonOrder::AB;
  CHECK(reorder(model, 1).cycles == 0);
}

TEST_CASE("calibration probe") {
  DriftModel model;
  ProbeOptions opts;
  Rng rng(21);
  const auto truth = model.qubit_frequencies();
  CHECK(rabi_lineshape(0.0, 100e-6) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rabi_lineshape(1e4, 100e-6) < 0.05);

  SUBCASE("centered LO stays put") {
    auto lo = truth;
    const auto r = calibration_probe(model, lo, opts, rng);
    CHECK(r.converged);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(r.offset_hz[j]) < 4 * r.sigma_hz[j]);
  }
  SUBCASE("common offset is recovered") {
    std::array<double, 2> lo{truth[0] - 2000.0, truth[1] - 2000.0};
    const auto r = calibration_probe(model, lo, opts, rng);
    CHECK(r.converged);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(r.offset_hz[j] - 2000.0) < 4 * r.sigma_hz[j] + 1.0);
    auto model_copy = model;
    const auto step = calibrate(model_copy, lo, opts, rng);
    CHECK_FALSE(step.order_wrong);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(lo[j] - truth[j]) < 3.0 / opts.duration_s);
  }
  SUBCASE("wrong order is detected and repaired") {
    auto lo = truth;
    model.order = crystal::IonOrder::BA;
    const auto step = calibrate(model, lo, opts, rng);
    CHECK(step.order_wrong);
    CHECK(step.order.order == crystal::IonOrder::BA);
    CHECK(step.reorder_cycles >= 1);
    CHECK(model.order == crystal::IonOrder::AB);
  }
}
