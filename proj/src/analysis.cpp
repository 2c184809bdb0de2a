#include "isogate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>

namespace isogate::analysis {

Populations correct_readout(const Populations& frequencies, const noise::ConfusionMatrix& a,
                            const noise::ConfusionMatrix& b) {
  a.validate();
  b.validate();
  const double det_a = 1.0 - a.eps_dark - a.eps_bright;
  const double det_b = 1.0 - b.eps_dark - b.eps_bright;
  if (det_a <= 1e-12 || det_b <= 1e-12)
    throw InvalidInput("correct_readout: confusion matrix is singular or inverts the outcomes");
  // The inverse of a Kronecker product is the product of the inverses.
  const Eigen::Matrix2d inv_a = a.matrix().inverse();
  const Eigen::Matrix2d inv_b = b.matrix().inverse();
  Eigen::Matrix4d inv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) inv.block<2, 2>(2 * i, 2 * j) = inv_a(i, j) * inv_b;
  Populations out = inv * frequencies;
  // Columns of the inverse sum to one; remove the rounding residue.
  out(3) = 1.0 - out(0) - out(1) - out(2);
  return out;
}

Populations correct_readout(const noise::ShotSet& shots, const noise::ConfusionMatrix& a,
                            const noise::ConfusionMatrix& b) {
  if (shots.total() == 0) throw InvalidInput("correct_readout: shot set is empty");
  return correct_readout(shots.frequencies(), a, b);
}

double binomial_sigma(double p, std::uint64_t shots) {
  if (shots == 0) throw InvalidInput("binomial_sigma: need at least one shot");
  const double n = static_cast<double>(shots);
  const double var = std::max(p * (1.0 - p), 1.0 / n);
  return std::sqrt(var / n);
}

double ParityFit::predict(double phi) const {
  return 0.5 * (1.0 - contrast * std::sin(2.0 * phi + phase_offset_rad)) + baseline;
}

ParityFit parity_scan_fit(const std::vector<double>& phi, const std::vector<double>& p_odd,
                          const std::vector<double>& sigma) {
  const std::size_t n = phi.size();
  if (p_odd.size() != n || sigma.size() != n)
    throw InvalidInput("parity_scan_fit: phi, p_odd and sigma must have equal length");
  std::set<double> distinct(phi.begin(), phi.end());
  if (distinct.size() < 5) throw InvalidInput("parity_scan_fit: need at least 5 distinct phases");
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidInput("parity_scan_fit: standard errors must be positive");

  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    X(k, 0) = 1.0;
    X(k, 1) = std::sin(2.0 * phi[k]);
    X(k, 2) = std::cos(2.0 * phi[k]);
    y(k) = p_odd[k];
    w(k) = 1.0 / (sigma[k] * sigma[k]);
  }
  const Eigen::Matrix3d normal = X.transpose() * w.asDiagonal() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
  const auto ev = eig.eigenvalues();
  if (ev(0) <= 1e-10 * ev(2))
    throw InvalidInput("parity_scan_fit: degenerate design (phases do not resolve sin/cos 2 phi)");
  const Eigen::Matrix3d cov = normal.inverse();
  const Eigen::Vector3d beta = cov * (X.transpose() * w.asDiagonal() * y);

  // beta1 = -(C/2) cos phi0, beta2 = -(C/2) sin phi0.
  const double r = std::hypot(beta(1), beta(2));
  ParityFit fit;
  fit.contrast = 2.0 * r;
  fit.phase_offset_rad = std::atan2(-beta(2), -beta(1));
  fit.baseline = beta(0) - 0.5;
  fit.sigma_baseline = std::sqrt(cov(0, 0));
  if (r > 0.0) {
    const Eigen::Vector3d jc{0.0, 2.0 * beta(1) / r, 2.0 * beta(2) / r};
    const Eigen::Vector3d jp{0.0, -beta(2) / (r * r), beta(1) / (r * r)};
    fit.sigma_contrast = std::sqrt(jc.dot(cov * jc));
    fit.sigma_phase_offset = std::sqrt(jp.dot(cov * jp));
  } else {
    fit.sigma_contrast = 2.0 * std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
    fit.sigma_phase_offset = std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd resid = y - X * beta;
  fit.chi2 = resid.dot(w.asDiagonal() * resid);
  fit.dof = static_cast<int>(n) - 3;
  return fit;
}

Estimate fidelity_from_parity(const Estimate& p_dd, const Estimate& p_uu, const Estimate& contrast) {
  Estimate f;
  f.value = 0.5 * (p_dd.value + p_uu.value) + 0.5 * contrast.value;
  f.sigma = 0.5 * std::sqrt(p_dd.sigma * p_dd.sigma + p_uu.sigma * p_uu.sigma +
                            contrast.sigma * contrast.sigma);
  return f;
}

}  // namespace isogate::analysis
