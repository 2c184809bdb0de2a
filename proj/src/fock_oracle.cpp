#include <cmath>
#include <vector>

#include <boost/math/special_functions/laguerre.hpp>
#include <boost/numeric/odeint.hpp>

#include "isogate/constants.hpp"
#include "isogate/dynamics.hpp"

namespace isogate::dynamics {

namespace c = isogate::constants;
namespace odeint = boost::numeric::odeint;

namespace {

using RealState = std::vector<double>;

// Off-diagonal elements <n+1| O |n> (without the time-dependent drive
// factor) for one basis branch.
std::vector<double> ladder_elements(const DriveConfig& drive, const crystal::MotionalMode& mode,
                                    int force_sign, int basis, int n_max, CouplingModel model) {
  const double ca = mode.eta_a * drive.couplings.a(qubit_a_bit(basis));
  const double cb = force_sign * mode.eta_b * drive.couplings.b(qubit_b_bit(basis));
  std::vector<double> out(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n) {
    const double root = std::sqrt(static_cast<double>(n + 1));
    if (model == CouplingModel::lamb_dicke) {
      out[n] = (ca + cb) * root;
    } else {
      auto ratio = [n](double eta) {
        const double x = eta * eta;
        return std::exp(-0.5 * x) * boost::math::laguerre(static_cast<unsigned>(n), 1u, x) /
               static_cast<double>(n + 1);
      };
      out[n] = (ca * ratio(mode.eta_a) + cb * ratio(mode.eta_b)) * root;
    }
  }
  return out;
}

struct DrivenMode {
  const DriveConfig* drive;
  const Envelope* env;
  const std::vector<double>* ladder;
  int dim;

  // y holds (Re psi_0, Im psi_0, Re psi_1, ...). d psi/dt = -i H psi with
  // H = g(t) a_dag' + conj(g(t)) a', g = 2 pi env(t) exp(i(2 pi delta_g t + phi)).
  void operator()(const RealState& y, RealState& dydt, double t) const {
    const double amplitude = c::two_pi * env->value(t);
    const double theta = c::two_pi * drive->gate_detuning_hz * t + drive->optical_phase_rad;
    const cdouble g = std::polar(amplitude, theta);
    const cdouble minus_i{0.0, -1.0};
    for (int n = 0; n < dim; ++n) {
      cdouble h_psi = 0.0;
      if (n > 0) h_psi += g * (*ladder)[n - 1] * cdouble(y[2 * (n - 1)], y[2 * (n - 1) + 1]);
      if (n + 1 < dim) h_psi += std::conj(g) * (*ladder)[n] * cdouble(y[2 * (n + 1)], y[2 * (n + 1) + 1]);
      const cdouble d = minus_i * h_psi;
      dydt[2 * n] = d.real();
      dydt[2 * n + 1] = d.imag();
    }
  }
};

double evolve(const DriveConfig& drive, const Envelope& env, const std::vector<double>& ladder,
              double tolerance, RealState& y) {
  const int dim = static_cast<int>(y.size() / 2);
  DrivenMode system{&drive, &env, &ladder, dim};
  double leakage = 0.0;
  auto observe = [&](const RealState& state, double) {
    const double top = state[2 * (dim - 1)] * state[2 * (dim - 1)] +
                       state[2 * (dim - 1) + 1] * state[2 * (dim - 1) + 1];
    leakage = std::max(leakage, top);
  };
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<RealState>>(tolerance, tolerance);
  const double t0 = env.begin();
  const double t1 = env.end();
  const double dt0 = (t1 - t0) * 1e-3;
  odeint::integrate_adaptive(stepper, system, y, t0, t1, dt0, observe);
  return leakage;
}

}  // namespace

FockOracleResult fock_oracle(const DriveConfig& drive, const Envelope& env,
                             const crystal::MotionalMode& mode, int force_sign,
                             const FockOracleOptions& options) {
  drive.validate();
  env.validate();
  if (options.n_max < 10) throw InvalidInput("fock_oracle: n_max must be at least 10");
  if (!(options.nbar >= 0.0)) throw InvalidInput("fock_oracle: nbar must be non-negative");
  if (force_sign != 1 && force_sign != -1) throw InvalidInput("force sign must be +1 or -1");

  FockOracleResult out;
  out.n_max = options.n_max;
  const int dim = options.n_max + 1;

  // Thermal occupation p_n = nbar^n / (1 + nbar)^(n + 1), renormalized after the cutoff.
  double total = 0.0;
  for (int n = 0; n < dim; ++n) {
    const double p = std::pow(options.nbar, n) / std::pow(1.0 + options.nbar, n + 1);
    if (n > 0 && p < options.thermal_cutoff) break;
    out.thermal_weights.push_back(p);
    total += p;
  }
  for (auto& p : out.thermal_weights) p /= total;

  for (int s = 0; s < 4; ++s) {
    const auto first = ladder_elements(drive, mode, force_sign, s, options.n_max, options.coupling);
    const auto second = ladder_elements(drive, mode, force_sign, double_flip(s), options.n_max,
                                        options.coupling);
    for (std::size_t n = 0; n < out.thermal_weights.size(); ++n) {
      RealState y(static_cast<std::size_t>(2 * dim), 0.0);
      y[2 * n] = 1.0;
      double leak = evolve(drive, env, first, options.tolerance, y);
      if (options.symmetrized) leak = std::max(leak, evolve(drive, env, second, options.tolerance, y));
      out.max_leakage = std::max(out.max_leakage, leak);

      Eigen::VectorXcd ket(dim);
      for (int k = 0; k < dim; ++k) ket(k) = cdouble(y[2 * k], y[2 * k + 1]);
      out.final_kets[s].push_back(std::move(ket));
    }
  }
  out.converged = out.max_leakage <= options.leakage_limit;
  return out;
}

DensityMatrix FockOracleResult::reduce(const DensityMatrix& initial) const {
  DensityMatrix out = DensityMatrix::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      cdouble overlap = 0.0;
      for (std::size_t n = 0; n < thermal_weights.size(); ++n) {
        overlap += thermal_weights[n] * final_kets[j][n].dot(final_kets[i][n]);
      }
      out(i, j) = initial(i, j) * overlap;
    }
  }
  return out;
}

Eigen::MatrixXcd FockOracleResult::joint_state(const DensityMatrix& initial) const {
  const int dim = n_max + 1;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(4 * dim, 4 * dim);
  for (std::size_t n = 0; n < thermal_weights.size(); ++n) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        out.block(i * dim, j * dim, dim, dim) +=
            thermal_weights[n] * initial(i, j) * final_kets[i][n] * final_kets[j][n].adjoint();
      }
    }
  }
  return out;
}

}  // namespace isogate::dynamics
