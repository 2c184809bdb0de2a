#include <algorithm>
#include <cmath>
#include <random>

#include <gsl/gsl_multimin.h>

#include "isogate/analysis.hpp"
#include "isogate/sequence.hpp"

namespace isogate::analysis {

std::array<std::array<double, 2>, 4> ChshAngles::settings() const {
  return {{{theta_a, theta_b}, {theta_a_prime, theta_b}, {theta_a, theta_b_prime},
           {theta_a_prime, theta_b_prime}}};
}

Correlation chsh_E(const noise::ShotSet& shots, double theta_a, double theta_b) {
  const auto n = shots.total();
  if (n == 0) throw InvalidInput("chsh_E: shot set is empty");
  const double same = static_cast<double>(shots.counts[0] + shots.counts[3]);
  const double diff = static_cast<double>(shots.counts[1] + shots.counts[2]);
  Correlation out;
  out.theta_a = theta_a;
  out.theta_b = theta_b;
  out.shots = n;
  out.E = (same - diff) / static_cast<double>(n);
  out.sigma = std::sqrt(std::max(0.0, 1.0 - out.E * out.E) / static_cast<double>(n));
  return out;
}

CHSHResult chsh_S(const std::array<Correlation, 4>& correlations) {
  for (const auto& e : correlations) {
    if (!(std::abs(e.E) <= 1.0)) throw InvalidInput("chsh_S: |E| must not exceed 1");
  }
  CHSHResult out;
  out.correlations = correlations;
  const auto& e = correlations;
  out.S = std::abs(e[0].E + e[1].E) + std::abs(e[2].E - e[3].E);
  double var = 0.0;
  for (const auto& x : e) var += x.sigma * x.sigma;
  out.sigma_S = std::sqrt(var);
  return out;
}

double correlation(const DensityMatrix& rho, double theta_a, double theta_b,
                   const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b) {
  const double phi = sequence::kChshAnalysisPhase;
  const Unitary4 u = kron(rotation_unitary(theta_a, phi), rotation_unitary(theta_b, phi));
  const Populations p = noise::apply_confusion((u * rho * u.adjoint()).diagonal().real(), a, b);
  return p(0) - p(1) - p(2) + p(3);
}

namespace {

struct SmaxProblem {
  DensityMatrix rho;
  noise::ConfusionMatrix a, b;
};

double negative_s(const gsl_vector* v, void* params) {
  const auto* prob = static_cast<const SmaxProblem*>(params);
  const double ta = gsl_vector_get(v, 0), tap = gsl_vector_get(v, 1);
  const double tb = gsl_vector_get(v, 2), tbp = gsl_vector_get(v, 3);
  auto e = [&](double x, double y) { return correlation(prob->rho, x, y, prob->a, prob->b); };
  return -(std::abs(e(ta, tb) + e(tap, tb)) + std::abs(e(ta, tbp) - e(tap, tbp)));
}

double minimize_from(SmaxProblem& prob, const std::array<double, 4>& start) {
  gsl_multimin_function fn{&negative_s, 4, &prob};
  gsl_vector* x = gsl_vector_alloc(4);
  gsl_vector* step = gsl_vector_alloc(4);
  for (int i = 0; i < 4; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, 0.3);
  }
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  for (int it = 0; it < 5000; ++it) {
    if (gsl_multimin_fminimizer_iterate(m)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-10) == GSL_SUCCESS) break;
  }
  const double best = -gsl_multimin_fminimizer_minimum(m);
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return best;
}

}  // namespace

double s_max(const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b) {
  a.validate();
  b.validate();
  SmaxProblem prob{TwoQubitState::pure(bell_phi_plus()).matrix(), a, b};
  const ChshAngles table;
  double best = 0.0;
  const std::array<std::array<double, 4>, 3> starts{{
      {table.theta_a, table.theta_a_prime, table.theta_b, table.theta_b_prime},
      {0.1, 1.7, 0.9, 2.4},
      {-0.6, 0.8, 0.2, -1.3},
  }};
  for (const auto& s : starts) best = std::max(best, minimize_from(prob, s));
  return best;
}

double s_max_symmetric_closed_form(double eps_a, double eps_b) {
  return 2.0 * std::numbers::sqrt2 * (1.0 - 2.0 * eps_a) * (1.0 - 2.0 * eps_b);
}

double bootstrap_sigma_E(const noise::ShotSet& shots, int replicates, std::uint64_t seed) {
  if (replicates < 2) throw InvalidInput("bootstrap_sigma_E: need at least 2 replicates");
  const Populations p = shots.frequencies();
  noise::Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const auto resample = noise::sample_shots(p, shots.total(), rng);
    const double e = chsh_E(resample, 0.0, 0.0).E;
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(replicates);
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)));
}

}  // namespace isogate::analysis
