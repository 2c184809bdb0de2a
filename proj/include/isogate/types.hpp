#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace isogate {

using cdouble = std::complex<double>;
using DensityMatrix = Eigen::Matrix4cd;
using Unitary2 = Eigen::Matrix2cd;
using Unitary4 = Eigen::Matrix4cd;
/// Outcome probabilities or counts in basis order (dd, du, ud, uu).
using Populations = Eigen::Vector4d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Time grid too coarse for the oscillation frequencies involved.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration document.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Two-qubit computational basis, qubit a is the more significant bit.
/// Index = 2 * a + b with down = 0, up = 1.
enum class Basis : int { down_down = 0, down_up = 1, up_down = 2, up_up = 3 };

inline constexpr std::array<const char*, 4> kBasisLabels = {"dd", "du", "ud", "uu"};

inline constexpr int qubit_a_bit(int basis) { return (basis >> 1) & 1; }
inline constexpr int qubit_b_bit(int basis) { return basis & 1; }
/// Basis index after flipping both qubits.
inline constexpr int double_flip(int basis) { return 3 - basis; }

/// Which ion the analysis or noise operation refers to.
enum class Qubit : int { a = 0, b = 1 };

}  // namespace isogate
