#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "isogate/noise.hpp"
#include "isogate/state.hpp"
#include "isogate/types.hpp"

/// Analysis chain from outcome counts: readout correction, parity fringes,
/// Bell-state fidelity, maximum-likelihood tomography and CHSH statistics.
namespace isogate::analysis {

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// (Ca x Cb)^-1 applied to the empirical frequencies. Entries may come out
/// slightly negative; they sum to 1 up to rounding.
Populations correct_readout(const noise::ShotSet& shots, const noise::ConfusionMatrix& a,
                            const noise::ConfusionMatrix& b);
Populations correct_readout(const Populations& frequencies, const noise::ConfusionMatrix& a,
                            const noise::ConfusionMatrix& b);

/// Odd-parity probability P(du) + P(ud).
inline double odd_parity(const Populations& p) { return p[1] + p[2]; }

/// Binomial standard error, floored so that p = 0 or 1 keeps a finite weight.
double binomial_sigma(double p, std::uint64_t shots);

/// P_odd(phi) = 1/2 (1 - C sin(2 phi + phi0)) + baseline.
struct ParityFit {
  double contrast = 0.0;
  double phase_offset_rad = 0.0;
  double baseline = 0.0;
  double sigma_contrast = 0.0;
  double sigma_phase_offset = 0.0;
  double sigma_baseline = 0.0;
  double chi2 = 0.0;
  int dof = 0;

  double predict(double phi) const;
};

/// Weighted linear least squares on (1, sin 2phi, cos 2phi). Needs at least
/// five distinct phases that are not all equal modulo pi.
ParityFit parity_scan_fit(const std::vector<double>& phi, const std::vector<double>& p_odd,
                          const std::vector<double>& sigma);

/// F = (P_dd + P_uu) / 2 + C / 2 with linear error propagation.
Estimate fidelity_from_parity(const Estimate& p_dd, const Estimate& p_uu, const Estimate& contrast);

// --- tomography ---------------------------------------------------------

struct TomographySetting {
  std::string label;  ///< measured Pauli pair, e.g. "XZ"
  Unitary2 rotation_a;
  Unitary2 rotation_b;

  Unitary4 rotation() const { return kron(rotation_a, rotation_b); }
};

/// The nine Pauli-basis settings {Z, X, Y} x {Z, X, Y}. Z uses no rotation,
/// X uses R(pi/2, pi/2), Y uses R(pi/2, 0).
std::vector<TomographySetting> tomography_settings();

/// Ideal-measurement populations of rho in one setting.
Populations setting_populations(const DensityMatrix& rho, const TomographySetting& setting);

/// Sampled counts for all nine settings, seeds derived from `seed`.
std::vector<noise::ShotSet> simulate_tomography(const DensityMatrix& rho, std::uint64_t shots,
                                                const noise::ConfusionMatrix& a,
                                                const noise::ConfusionMatrix& b,
                                                std::uint64_t seed);

enum class ReadoutHandling { none, folded, pre_inverted };

const char* to_string(ReadoutHandling handling);
ReadoutHandling readout_handling_from_string(const std::string& text);

struct TomographyOptions {
  ReadoutHandling readout = ReadoutHandling::folded;
  noise::ConfusionMatrix readout_a;
  noise::ConfusionMatrix readout_b;
  int max_iterations = 100000;
  /// Stop when one accepted step improves the mean log-likelihood per shot by less.
  double tolerance = 1e-10;
  std::uint64_t min_shots = 100;
  Eigen::Vector4cd target = bell_phi_plus();
};

struct TomographyResult {
  DensityMatrix rho = DensityMatrix::Zero();
  double log_likelihood = 0.0;
  double fidelity = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Multinomial log-likelihood of the counts for rho under the given options.
double tomography_log_likelihood(const std::vector<noise::ShotSet>& data, const DensityMatrix& rho,
                                 const TomographyOptions& options = {});

/// Maximum-likelihood density matrix over rho = T^dag T / tr(T^dag T), T
/// lower triangular with real diagonal. Gradient ascent with backtracking,
/// started from the eigenvalue-clipped linear inversion.
TomographyResult mle_tomography(const std::vector<noise::ShotSet>& data,
                                const TomographyOptions& options = {});

/// Maps 16 real parameters onto a physical density matrix.
DensityMatrix cholesky_to_rho(const std::array<double, 16>& params);
/// Inverse of cholesky_to_rho for full-rank rho (regularized otherwise).
std::array<double, 16> rho_to_cholesky(const DensityMatrix& rho);

// --- CHSH ----------------------------------------------------------------

struct ChshAngles {
  double theta_a = 0.25 * std::numbers::pi;
  double theta_a_prime = 0.75 * std::numbers::pi;
  double theta_b = 0.5 * std::numbers::pi;
  double theta_b_prime = 0.0;

  /// (theta_a, theta_b) for the four settings in the order
  /// (a, b), (a', b), (a, b'), (a', b').
  std::array<std::array<double, 2>, 4> settings() const;
};

struct Correlation {
  double theta_a = 0.0;
  double theta_b = 0.0;
  double E = 0.0;
  double sigma = 0.0;
  std::uint64_t shots = 0;
};

/// E = P(same) - P(different) from raw frequencies, sigma = sqrt((1 - E^2) / N).
Correlation chsh_E(const noise::ShotSet& shots, double theta_a, double theta_b);

struct CHSHResult {
  std::array<Correlation, 4> correlations;
  double S = 0.0;
  double sigma_S = 0.0;
  std::optional<double> s_max;
};

/// S = |E(a,b) + E(a',b)| + |E(a,b') - E(a',b')| with sigma in quadrature.
CHSHResult chsh_S(const std::array<Correlation, 4>& correlations);

/// Expected recorded E for rho after the analysis rotations (exact, no shots).
double correlation(const DensityMatrix& rho, double theta_a, double theta_b,
                   const noise::ConfusionMatrix& a = {}, const noise::ConfusionMatrix& b = {});

/// Largest S reachable by an ideal Bell state seen through the confusion
/// matrices, maximized numerically over the four analysis angles.
double s_max(const noise::ConfusionMatrix& a, const noise::ConfusionMatrix& b);

/// 2 sqrt(2) (1 - 2 eps_a)(1 - 2 eps_b), valid for per-ion symmetric errors.
double s_max_symmetric_closed_form(double eps_a, double eps_b);

/// Bootstrap standard error of E from multinomial resampling of the counts.
double bootstrap_sigma_E(const noise::ShotSet& shots, int replicates, std::uint64_t seed);

}  // namespace isogate::analysis
