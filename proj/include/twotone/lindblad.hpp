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

// Vectorized Lindblad dynamics.
//
// Density matrices are flattened column by column, so a d x d matrix becomes
// a length-d^2 vector and a superoperator is a dense d^2 x d^2 matrix. With
// this ordering vec(A X B) = (B^T kron A) vec(X).

#ifndef TWOTONE_LINDBLAD_HPP
#define TWOTONE_LINDBLAD_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "twotone/common.hpp"
#include "twotone/model.hpp"

namespace twotone {

/// Hermitian, unit-trace, positive semidefinite d x d matrix.
using DensityMatrix = Matrix;
/// Column-stacked density matrix of length d^2.
using VectorizedState = Vector;

inline VectorizedState vectorize(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols()) {
    throw DimensionError("vectorize: matrix is " + std::to_string(rho.rows()) + "x" +
                         std::to_string(rho.cols()));
  }
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline DensityMatrix devectorize(const VectorizedState& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size()) {
    throw DimensionError("devectorize: length " + std::to_string(v.size()) +
                         " is not a perfect square");
  }
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

/// M with M vec(rho) = vec(left * rho * right).
inline Matrix sandwich_superop(const Matrix& left, const Matrix& right) {
  if (left.rows() != left.cols() || right.rows() != right.cols() || left.rows() != right.rows()) {
    throw DimensionError("sandwich_superop: operands must be square and of equal size");
  }
  return detail::kron(right.transpose(), left);
}

/// Superoperator of rho -> -i [H, rho].
inline Matrix commutator_superop(const Matrix& h) {
  const Matrix id = Matrix::Identity(h.rows(), h.cols());
  return Complex(0.0, -1.0) * (sandwich_superop(h, id) - sandwich_superop(id, h));
}

/// Superoperator of D[O] rho = O rho O^dag - (O^dag O rho + rho O^dag O) / 2.
inline Matrix dissipator(const Matrix& jump) {
  const Matrix id = Matrix::Identity(jump.rows(), jump.cols());
  const Matrix n = jump.adjoint() * jump;
  return sandwich_superop(jump, jump.adjoint()) - 0.5 * sandwich_superop(n, id) -
         0.5 * sandwich_superop(id, n);
}

/// Dense Liouvillian with a lazily computed, thread-safe eigendecomposition.
class Liouvillian {
 public:
  struct Eigensystem {
    Vector values;
    Matrix vectors;
    Matrix inverse;
    /// ||V||_1 ||V^-1||_1
    double condition = std::numeric_limits<double>::infinity();
  };

  explicit Liouvillian(Matrix generator)
      : generator_(std::move(generator)), cache_(std::make_shared<Cache>()) {
    if (generator_.rows() != generator_.cols()) {
      throw DimensionError("Liouvillian must be square");
    }
    const auto n = static_cast<Eigen::Index>(
        std::llround(std::sqrt(static_cast<double>(generator_.rows()))));
    if (n * n != generator_.rows()) {
      throw DimensionError("Liouvillian size " + std::to_string(generator_.rows()) +
                           " is not d^2");
    }
    hilbert_dimension_ = static_cast<int>(n);
  }

  const Matrix& matrix() const noexcept { return generator_; }
  int hilbert_dimension() const noexcept { return hilbert_dimension_; }

  /// max |1^dag L| / max |L|, where 1 is the vectorized identity. Zero for a
  /// trace-preserving generator.
  double trace_defect() const {
    const double scale = generator_.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    const Vector one = vectorize(Matrix::Identity(hilbert_dimension_, hilbert_dimension_));
    return (one.adjoint() * generator_).cwiseAbs().maxCoeff() / scale;
  }

  const Eigensystem& eigensystem() const {
    std::call_once(cache_->once, [this] {
      Eigen::ComplexEigenSolver<Matrix> solver(generator_, true);
      auto& eig = cache_->eig;
      if (solver.info() != Eigen::Success) return;
      eig.values = solver.eigenvalues();
      eig.vectors = solver.eigenvectors();
      Eigen::PartialPivLU<Matrix> lu(eig.vectors);
      eig.inverse = lu.inverse();
      const double norm_v = eig.vectors.cwiseAbs().colwise().sum().maxCoeff();
      const double norm_vi = eig.inverse.cwiseAbs().colwise().sum().maxCoeff();
      eig.condition = norm_v * norm_vi;
      if (!std::isfinite(eig.condition)) eig.condition = std::numeric_limits<double>::infinity();
    });
    return cache_->eig;
  }

 private:
  struct Cache {
    std::once_flag once;
    Eigensystem eig;
  };

  Matrix generator_;
  int hilbert_dimension_ = 0;
  std::shared_ptr<Cache> cache_;
};

/// Lindblad generator for `h` (H/hbar, rad/s) with the decay and dephasing
/// channels of `spec`: gamma_q D[a] + kappa_q D[a^dag a] + sum_k gamma_k D[b_k]
/// + kappa_k D[b_k^dag b_k]. For hard-core bosons (b^dag b)^2 = b^dag b, so the
/// TLS dephasing channel needs no separate squared form.
inline Liouvillian liouvillian(const SystemSpec& spec, const OperatorMatrix& h, const Operators& ops) {
  if (h.rows() != ops.dimension() || h.cols() != ops.dimension()) {
    throw DimensionError("liouvillian: Hamiltonian does not match the operator space");
  }
  if (!is_hermitian(h)) {
    throw ValidationError("hamiltonian", "not Hermitian (defect " +
                                             std::to_string(hermiticity_defect(h)) + ")");
  }
  Matrix gen = commutator_superop(h);
  const auto& q = spec.transmon;
  if (q.gamma > 0.0) gen += q.gamma * dissipator(ops.a);
  if (q.kappa > 0.0) gen += q.kappa * dissipator(ops.transmon_number());
  for (int k = 0; k < spec.n_tls(); ++k) {
    const auto& t = spec.tls[k];
    if (t.gamma > 0.0) gen += t.gamma * dissipator(ops.b[k]);
    if (t.kappa > 0.0) gen += t.kappa * dissipator(ops.tls_number(k));
  }
  return Liouvillian(std::move(gen));
}

inline Liouvillian liouvillian(const SystemSpec& spec, const OperatorMatrix& h) {
  return liouvillian(spec, h, build_operators(spec));
}

enum class PropagatorMethod { kEigendecomposition, kScalingSquaring };

struct Propagation {
  Matrix matrix;
  PropagatorMethod method = PropagatorMethod::kEigendecomposition;
};

/// V diag(exp(t lambda)) V^-1. No conditioning check; see propagate().
inline Matrix expm_eigen(const Liouvillian& l, double t) {
  const auto& eig = l.eigensystem();
  if (eig.values.size() == 0) throw NumericalError("eigendecomposition failed");
  const Vector scale = (t * eig.values).array().exp();
  return eig.vectors * scale.asDiagonal() * eig.inverse;
}

/// Pade scaling-and-squaring exponential of t L.
inline Matrix expm_scaling_squaring(const Matrix& l, double t) {
  const Matrix scaled = t * l;
  return scaled.exp();
}

/// exp(t L) through the eigendecomposition when the eigenvector matrix is
/// well conditioned, otherwise through scaling-and-squaring.
inline Propagation propagate(const Liouvillian& l, double t,
                             double max_condition = tol::kMaxEigenCondition) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("t", "must be finite and >= 0");
  const auto n = l.matrix().rows();
  if (t == 0.0) return {Matrix::Identity(n, n), PropagatorMethod::kEigendecomposition};
  const auto& eig = l.eigensystem();
  if (eig.values.size() == n && eig.condition <= max_condition) {
    return {expm_eigen(l, t), PropagatorMethod::kEigendecomposition};
  }
  return {expm_scaling_squaring(l.matrix(), t), PropagatorMethod::kScalingSquaring};
}

inline Matrix propagator(const Liouvillian& l, double t) { return propagate(l, t).matrix; }

/// Hermitian part with unit trace.
inline DensityMatrix hermitize_normalize(const DensityMatrix& rho) {
  DensityMatrix out = 0.5 * (rho + rho.adjoint());
  const Complex tr = out.trace();
  if (std::abs(tr) == 0.0) throw NumericalError("state has zero trace");
  return out / tr.real();
}

/// Unique fixed point of L. The kernel is checked through the singular values:
/// the second smallest must exceed the smallest (floored at n eps sigma_max)
/// by tol::kKernelGap.
inline DensityMatrix steady_state(const Liouvillian& l, double min_gap = tol::kKernelGap) {
  Eigen::BDCSVD<Matrix> svd(l.matrix(), Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const auto n = s.size();
  if (n < 2) throw DimensionError("steady_state: Liouvillian too small");
  // Singular values below n * eps * sigma_max are indistinguishable from zero.
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * s(0);
  const double smallest = std::max(s(n - 1), floor);
  const double second = s(n - 2);
  const double gap = smallest > 0.0 ? second / smallest : 0.0;
  if (!(gap >= min_gap)) {
    throw DegenerateKernelError("Liouvillian kernel is not one-dimensional (singular-value gap " +
                                    std::to_string(gap) + ")",
                                gap);
  }
  const Vector null = svd.matrixV().col(n - 1);
  return hermitize_normalize(devectorize(null));
}

struct Physicality {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;

  bool ok(double trace_tol = tol::kTrace, double positivity = tol::kPositivity) const {
    return trace_error < trace_tol && hermiticity_error < trace_tol && min_eigenvalue > positivity;
  }
};

inline Physicality check_physical(const DensityMatrix& rho) {
  Physicality p;
  p.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  p.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  p.min_eigenvalue = es.eigenvalues().minCoeff();
  return p;
}

}  // namespace twotone

#endif  // TWOTONE_LINDBLAD_HPP
