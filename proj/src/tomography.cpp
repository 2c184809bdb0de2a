#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "isogate/analysis.hpp"
#include "isogate/constants.hpp"

namespace isogate::analysis {

namespace c = isogate::constants;

namespace {

struct Povm {
  // elements[s][k]: effect for recorded outcome k in setting s
  std::vector<std::array<DensityMatrix, 4>> elements;
  std::vector<std::array<double, 4>> counts;
  double total = 0.0;
};

Unitary2 basis_rotation(char axis) {
  switch (axis) {
    case 'Z':
      return Unitary2::Identity();
    case 'X':
      return rotation_unitary(0.5 * c::pi, 0.5 * c::pi);
    default:
      return rotation_unitary(0.5 * c::pi, 0.0);
  }
}

Povm build_povm(const std::vector<noise::ShotSet>& data, const TomographyOptions& options) {
  const auto settings = tomography_settings();
  std::map<std::string, const noise::ShotSet*> by_label;
  for (const auto& s : data) {
    if (!by_label.emplace(s.setting, &s).second)
      throw InvalidInput("mle_tomography: duplicate setting '" + s.setting + "'");
  }

  Eigen::Matrix4d cmap = Eigen::Matrix4d::Identity();
  if (options.readout == ReadoutHandling::folded)
    cmap = noise::confusion_map(options.readout_a, options.readout_b);

  Povm povm;
  for (const auto& setting : settings) {
    const auto it = by_label.find(setting.label);
    if (it == by_label.end())
      throw InvalidInput("mle_tomography: missing setting '" + setting.label + "'");
    const noise::ShotSet& shots = *it->second;
    if (shots.total() < options.min_shots)
      throw InvalidInput("mle_tomography: setting '" + setting.label + "' has fewer than " +
                         std::to_string(options.min_shots) + " shots");

    const Unitary4 u = setting.rotation();
    std::array<DensityMatrix, 4> ideal;
    for (int k = 0; k < 4; ++k) {
      DensityMatrix proj = DensityMatrix::Zero();
      proj(k, k) = 1.0;
      ideal[k] = u.adjoint() * proj * u;
    }
    std::array<DensityMatrix, 4> effects;
    for (int k = 0; k < 4; ++k) {
      effects[k] = DensityMatrix::Zero();
      for (int j = 0; j < 4; ++j) effects[k] += cmap(k, j) * ideal[j];
    }
    povm.elements.push_back(effects);

    std::array<double, 4> counts{};
    if (options.readout == ReadoutHandling::pre_inverted) {
      // Quasi-probabilities are clipped so the multinomial likelihood stays defined.
      Populations p = correct_readout(shots, options.readout_a, options.readout_b).cwiseMax(0.0);
      p /= p.sum();
      for (int k = 0; k < 4; ++k) counts[k] = p(k) * static_cast<double>(shots.total());
    } else {
      for (int k = 0; k < 4; ++k) counts[k] = static_cast<double>(shots.counts[k]);
    }
    povm.counts.push_back(counts);
    for (double n : counts) povm.total += n;
  }
  return povm;
}

double mean_log_likelihood(const Povm& povm, const DensityMatrix& rho) {
  double sum = 0.0;
  for (std::size_t s = 0; s < povm.elements.size(); ++s) {
    for (int k = 0; k < 4; ++k) {
      const double n = povm.counts[s][k];
      if (n == 0.0) continue;
      const double p = (povm.elements[s][k] * rho).trace().real();
      sum += n * std::log(std::max(p, 1e-300));
    }
  }
  return sum / povm.total;
}

using Params = Eigen::Matrix<double, 16, 1>;

// T lower triangular with real diagonal: 4 diagonal entries, then the six
// strictly lower entries as (re, im) pairs in row-major order.
Eigen::Matrix4cd params_to_t(const Params& x) {
  Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = x(i);
  int idx = 4;
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < i; ++j, idx += 2) t(i, j) = cdouble(x(idx), x(idx + 1));
  return t;
}

DensityMatrix t_to_rho(const Eigen::Matrix4cd& t) {
  const DensityMatrix a = t.adjoint() * t;
  return a / a.trace().real();
}

Params gradient(const Povm& povm, const Eigen::Matrix4cd& t) {
  const DensityMatrix a = t.adjoint() * t;
  const double tr_a = a.trace().real();
  const DensityMatrix rho = a / tr_a;
  DensityMatrix r = DensityMatrix::Zero();
  for (std::size_t s = 0; s < povm.elements.size(); ++s) {
    for (int k = 0; k < 4; ++k) {
      const double n = povm.counts[s][k];
      if (n == 0.0) continue;
      const double p = std::max((povm.elements[s][k] * rho).trace().real(), 1e-300);
      r += (n / (povm.total * p)) * povm.elements[s][k];
    }
  }
  const DensityMatrix g =
      (r - (r * rho).trace().real() * DensityMatrix::Identity()) / tr_a;
  const Eigen::Matrix4cd tg = t * g;
  Params out;
  for (int i = 0; i < 4; ++i) out(i) = 2.0 * tg(i, i).real();
  int idx = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j, idx += 2) {
      out(idx) = 2.0 * tg(i, j).real();
      out(idx + 1) = 2.0 * tg(i, j).imag();
    }
  }
  return out;
}

Params to_params(const std::array<double, 16>& a) { return Eigen::Map<const Params>(a.data()); }

std::array<double, 16> from_params(const Params& x) {
  std::array<double, 16> out{};
  Eigen::Map<Params>(out.data()) = x;
  return out;
}

// Least-squares inversion in the Pauli basis, then eigenvalue clipping.
DensityMatrix linear_inversion(const Povm& povm) {
  std::array<Unitary2, 4> pauli;
  pauli[0] = Unitary2::Identity();
  pauli[1] << 0, 1, 1, 0;
  pauli[2] << 0, cdouble(0, -1), cdouble(0, 1), 0;
  pauli[3] << -1, 0, 0, 1;  // Z|up> = +|up> with up = index 1
  std::array<DensityMatrix, 16> basis;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) basis[4 * i + j] = kron(pauli[i], pauli[j]) / 4.0;

  const int rows = static_cast<int>(povm.elements.size()) * 4;
  Eigen::MatrixXd design(rows, 16);
  Eigen::VectorXd y(rows);
  int row = 0;
  for (std::size_t s = 0; s < povm.elements.size(); ++s) {
    double n_s = 0.0;
    for (double n : povm.counts[s]) n_s += n;
    for (int k = 0; k < 4; ++k, ++row) {
      for (int m = 0; m < 16; ++m) design(row, m) = (povm.elements[s][k] * basis[m]).trace().real();
      y(row) = povm.counts[s][k] / n_s;
    }
  }
  const Eigen::VectorXd coeff = design.colPivHouseholderQr().solve(y);
  DensityMatrix rho = DensityMatrix::Zero();
  for (int m = 0; m < 16; ++m) rho += coeff(m) * basis[m];
  rho = 0.5 * (rho + rho.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<DensityMatrix> eig(rho);
  Eigen::Vector4d lambda = eig.eigenvalues().cwiseMax(1e-3);
  lambda /= lambda.sum();
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

std::vector<TomographySetting> tomography_settings() {
  std::vector<TomographySetting> out;
  for (char a : {'Z', 'X', 'Y'}) {
    for (char b : {'Z', 'X', 'Y'}) {
      out.push_back({std::string{a, b}, basis_rotation(a), basis_rotation(b)});
    }
  }
  return out;
}

Populations setting_populations(const DensityMatrix& rho, const TomographySetting& setting) {
  const Unitary4 u = setting.rotation();
  return (u * rho * u.adjoint()).diagonal().real();
}

std::vector<noise::ShotSet> simulate_tomography(const DensityMatrix& rho, std::uint64_t shots,
                                                const noise::ConfusionMatrix& a,
                                                const noise::ConfusionMatrix& b,
                                                std::uint64_t seed) {
  std::vector<noise::ShotSet> out;
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> seeds(9);
  seq.generate(seeds.begin(), seeds.end());
  const auto settings = tomography_settings();
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const Populations p = noise::apply_confusion(setting_populations(rho, settings[s]), a, b);
    out.push_back(noise::sample_shots(p, shots, seeds[s], settings[s].label));
  }
  return out;
}

const char* to_string(ReadoutHandling handling) {
  switch (handling) {
    case ReadoutHandling::none:
      return "none";
    case ReadoutHandling::folded:
      return "folded";
    case ReadoutHandling::pre_inverted:
      return "pre_inverted";
  }
  return "none";
}

ReadoutHandling readout_handling_from_string(const std::string& text) {
  if (text == "none") return ReadoutHandling::none;
  if (text == "folded") return ReadoutHandling::folded;
  if (text == "pre_inverted") return ReadoutHandling::pre_inverted;
  throw InvalidInput("readout handling must be none, folded or pre_inverted, got '" + text + "'");
}

DensityMatrix cholesky_to_rho(const std::array<double, 16>& params) {
  const Eigen::Matrix4cd t = params_to_t(to_params(params));
  if (!((t.adjoint() * t).trace().real() > 0.0))
    throw InvalidInput("cholesky_to_rho: all parameters are zero");
  return t_to_rho(t);
}

std::array<double, 16> rho_to_cholesky(const DensityMatrix& rho) {
  // rho = T^dag T with T lower triangular; reverse the basis order so that a
  // standard Cholesky factor L (rho_rev = L L^dag) gives T = J L^dag J.
  DensityMatrix rev;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rev(i, j) = rho(3 - i, 3 - j);
  rev = 0.5 * (rev + rev.adjoint()).eval();
  rev += 1e-12 * DensityMatrix::Identity();
  const Eigen::Matrix4cd l = rev.llt().matrixL();
  const Eigen::Matrix4cd ld = l.adjoint();
  Eigen::Matrix4cd t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = ld(3 - i, 3 - j);
  Params x;
  for (int i = 0; i < 4; ++i) x(i) = t(i, i).real();
  int idx = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j, idx += 2) {
      x(idx) = t(i, j).real();
      x(idx + 1) = t(i, j).imag();
    }
  }
  return from_params(x);
}

double tomography_log_likelihood(const std::vector<noise::ShotSet>& data, const DensityMatrix& rho,
                                 const TomographyOptions& options) {
  const Povm povm = build_povm(data, options);
  return mean_log_likelihood(povm, rho) * povm.total;
}

TomographyResult mle_tomography(const std::vector<noise::ShotSet>& data,
                                const TomographyOptions& options) {
  if (options.max_iterations < 1) throw InvalidInput("mle_tomography: iteration cap must be positive");
  const Povm povm = build_povm(data, options);

  Params x = to_params(rho_to_cholesky(linear_inversion(povm)));
  double f = mean_log_likelihood(povm, t_to_rho(params_to_t(x)));
  double step = 1.0;
  TomographyResult out;
  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    const Params g = gradient(povm, params_to_t(x));
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    double f_new = f;
    Params x_new;
    for (int tries = 0; tries < 80; ++tries) {
      x_new = x + step * g;
      f_new = mean_log_likelihood(povm, t_to_rho(params_to_t(x_new)));
      if (f_new >= f + 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double gain = f_new - f;
    x = x_new;
    f = f_new;
    step *= 2.0;
    // Keep T well scaled; rho is invariant under rescaling.
    x /= std::sqrt((params_to_t(x).adjoint() * params_to_t(x)).trace().real());
    if (gain < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.rho = t_to_rho(params_to_t(x));
  out.log_likelihood = f * povm.total;
  out.fidelity = (options.target.adjoint() * out.rho * options.target)(0, 0).real();
  return out;
}

}  // namespace isogate::analysis
