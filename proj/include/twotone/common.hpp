// Copyright 2026 The twotone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TWOTONE_COMMON_HPP
#define TWOTONE_COMMON_HPP

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace twotone {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
constexpr double angular(double hz) noexcept { return kTwoPi * hz; }

/// Numerical tolerances shared by every module. Tests pin against these.
namespace tol {
/// Max |H - H^dagger| relative to max |H|.
inline constexpr double kHermitian = 1e-12;
/// |Tr rho - 1| allowed for a physical state.
inline constexpr double kTrace = 1e-9;
/// Smallest eigenvalue allowed for a physical state.
inline constexpr double kPositivity = -1e-9;
/// Trace-functional residual max |1^dagger L| relative to ||L||.
inline constexpr double kTracePreserving = 1e-9;
/// Eigenvector-matrix condition number above which the propagator falls
/// back to scaling-and-squaring.
inline constexpr double kMaxEigenCondition = 1e8;
/// Required gap between the two smallest singular values of L for a
/// unique steady state.
inline constexpr double kKernelGap = 1e6;
/// Default cap on the Hilbert-space dimension.
inline constexpr int kMaxDimension = 256;
/// Slack on map values outside [0, 1].
inline constexpr double kPopulationSlack = 1e-6;
}  // namespace tol

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented range or schema. `key` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Matrix/vector shapes do not fit together, or the dimension cap is exceeded.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Closed-form expression evaluated at (or numerically on) its pole.
class PoleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The Liouvillian kernel is not one-dimensional.
class DegenerateKernelError : public NumericalError {
 public:
  DegenerateKernelError(const std::string& what, double gap)
      : NumericalError(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

/// Pulse-B calibration could not reach the requested population.
class CalibrationError : public NumericalError {
 public:
  CalibrationError(const std::string& what, double achieved)
      : NumericalError(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace twotone

#endif  // TWOTONE_COMMON_HPP
