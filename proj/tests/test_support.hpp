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

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the library's numerical routines.

#ifndef TWOTONE_TESTS_TEST_SUPPORT_HPP
#define TWOTONE_TESTS_TEST_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "twotone/model.hpp"

namespace twotone::testing {

/// Transmon + one TLS, the reference parameter set used throughout.
inline SystemSpec reference_spec() {
  SystemSpec s;
  s.transmon = {7e9, 180e6, 1.0 / 10e-6, 2.0 / 1e-6, 3};
  s.tls.push_back({7.08e9, 30e6, 0.0, 1.0 / 800e-9, 2.0 / 1.6e-6});
  return s;
}

inline SystemSpec bare_transmon(int n_levels = 3) {
  SystemSpec s;
  s.transmon = {7e9, 180e6, 0.0, 0.0, n_levels};
  return s;
}

inline Matrix random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(nd(rng), nd(rng));
  return m;
}

inline Matrix random_hermitian(int n, std::mt19937_64& rng) {
  const Matrix m = random_matrix(n, rng);
  return 0.5 * (m + m.adjoint());
}

/// Random density matrix: G G^dag / Tr.
inline Matrix random_density(int n, std::mt19937_64& rng) {
  const Matrix g = random_matrix(n, rng);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// exp(M) by scaling to ||M||_1 <= 1/2, a 30-term Taylor series, then
/// repeated squaring.
inline Matrix taylor_expm(const Matrix& m) {
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm))) + 1;
  const Matrix a = m / std::ldexp(1.0, s);
  Matrix term = Matrix::Identity(m.rows(), m.cols());
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

/// exp(-i H t) for Hermitian H through its spectral decomposition.
inline Matrix unitary(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXcd phase(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    phase(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * t));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

/// Column-stacking Kronecker product built element by element.
inline Matrix kron_oracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace twotone::testing

#endif  // TWOTONE_TESTS_TEST_SUPPORT_HPP
