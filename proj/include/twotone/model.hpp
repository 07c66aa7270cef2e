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

// Physical model of a transmon coupled to hard-core-boson defects (TLSs).
//
// All user-facing frequencies and amplitudes are ordinary frequencies in Hz;
// rates are in 1/s. Operators returned here are H/hbar in rad/s, i.e. the
// 2*pi conversion happens exactly once, when a Hamiltonian is assembled.
//
// Basis ordering: the transmon occupies the most significant slot, followed by
// TLS 0, TLS 1, ... A basis index is n * 2^K + (m_0 << (K-1)) + ... + m_{K-1}.

#ifndef TWOTONE_MODEL_HPP
#define TWOTONE_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "twotone/common.hpp"

namespace twotone {

struct TransmonParams {
  double omega_q = 0.0;        // bare frequency, Hz
  double anharmonicity = 0.0;  // U, Hz
  double gamma = 0.0;          // dissipation rate 1/T1, 1/s
  double kappa = 0.0;          // pure dephasing rate 2/T_phi, 1/s
  int n_levels = 3;
};

struct TlsParams {
  double omega = 0.0;     // Hz
  double coupling = 0.0;  // g_k, Hz
  double lambda = 0.0;    // direct-drive factor
  double gamma = 0.0;     // 1/s
  double kappa = 0.0;     // 1/s
};

struct SystemSpec {
  TransmonParams transmon;
  std::vector<TlsParams> tls;

  int n_tls() const noexcept { return static_cast<int>(tls.size()); }
  int dimension() const noexcept { return transmon.n_levels << n_tls(); }
};

/// Rectangular microwave pulse.
struct DrivePulse {
  double amplitude = 0.0;  // A, Hz
  double omega_d = 0.0;    // drive frequency, Hz
  double duration = 0.0;   // s
};

/// Dense complex matrix on the full product space.
using OperatorMatrix = Matrix;

/// 1/T1 with T1 <= 0 or infinite meaning "no decay".
inline double rate_from_t1(double t1) {
  return (t1 > 0.0 && std::isfinite(t1)) ? 1.0 / t1 : 0.0;
}

/// 2/T_phi with the same convention as rate_from_t1.
inline double rate_from_tphi(double tphi) {
  return (tphi > 0.0 && std::isfinite(tphi)) ? 2.0 / tphi : 0.0;
}

/// Copy of `spec` with every dissipation and dephasing rate zeroed.
inline SystemSpec without_decoherence(SystemSpec spec) {
  spec.transmon.gamma = 0.0;
  spec.transmon.kappa = 0.0;
  for (auto& t : spec.tls) {
    t.gamma = 0.0;
    t.kappa = 0.0;
  }
  return spec;
}

/// Throws ValidationError naming the first offending field.
inline void validate(const SystemSpec& spec, int max_dimension = tol::kMaxDimension) {
  const auto& q = spec.transmon;
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(q.omega_q) || q.omega_q <= 0.0) throw ValidationError("transmon.omega_q", "must be > 0");
  if (!finite(q.anharmonicity) || q.anharmonicity <= 0.0)
    throw ValidationError("transmon.anharmonicity", "must be > 0");
  if (!finite(q.gamma) || q.gamma < 0.0) throw ValidationError("transmon.gamma", "must be >= 0");
  if (!finite(q.kappa) || q.kappa < 0.0) throw ValidationError("transmon.kappa", "must be >= 0");
  if (q.n_levels < 2) throw ValidationError("transmon.n_levels", "must be >= 2");
  for (std::size_t k = 0; k < spec.tls.size(); ++k) {
    const auto& t = spec.tls[k];
    const std::string p = "tls[" + std::to_string(k) + "].";
    if (!finite(t.omega) || t.omega <= 0.0) throw ValidationError(p + "omega", "must be > 0");
    if (!finite(t.coupling) || t.coupling < 0.0) throw ValidationError(p + "coupling", "must be >= 0");
    if (!finite(t.lambda) || t.lambda < 0.0) throw ValidationError(p + "lambda", "must be >= 0");
    if (!finite(t.gamma) || t.gamma < 0.0) throw ValidationError(p + "gamma", "must be >= 0");
    if (!finite(t.kappa) || t.kappa < 0.0) throw ValidationError(p + "kappa", "must be >= 0");
  }
  // Compare in floating point so absurd K cannot overflow the shift.
  const double dim = static_cast<double>(q.n_levels) * std::ldexp(1.0, spec.n_tls());
  if (dim > max_dimension) {
    throw DimensionError("Hilbert-space dimension " + std::to_string(static_cast<long long>(dim)) +
                         " exceeds cap " + std::to_string(max_dimension));
  }
}

inline void validate(const DrivePulse& pulse) {
  if (!std::isfinite(pulse.amplitude) || pulse.amplitude < 0.0)
    throw ValidationError("pulse.amplitude", "must be >= 0");
  if (!std::isfinite(pulse.omega_d) || pulse.omega_d < 0.0)
    throw ValidationError("pulse.omega_d", "must be >= 0");
  if (!std::isfinite(pulse.duration) || pulse.duration < 0.0)
    throw ValidationError("pulse.duration", "must be >= 0");
}

/// Ladder operators embedded in the full product space.
struct Operators {
  OperatorMatrix a;
  OperatorMatrix a_dag;
  std::vector<OperatorMatrix> b;
  std::vector<OperatorMatrix> b_dag;
  int n_levels = 0;

  int dimension() const noexcept { return static_cast<int>(a.rows()); }
  int n_tls() const noexcept { return static_cast<int>(b.size()); }

  OperatorMatrix transmon_number() const { return a_dag * a; }
  OperatorMatrix tls_number(int k) const { return b_dag.at(k) * b.at(k); }

  /// Total excitation number a^dag a + sum_k b_k^dag b_k.
  OperatorMatrix excitation_number() const {
    OperatorMatrix n = transmon_number();
    for (int k = 0; k < n_tls(); ++k) n += tls_number(k);
    return n;
  }
};

namespace detail {

inline Matrix kron(const Matrix& lhs, const Matrix& rhs) {
  Matrix out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
  for (Eigen::Index i = 0; i < lhs.rows(); ++i)
    for (Eigen::Index j = 0; j < lhs.cols(); ++j)
      out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) = lhs(i, j) * rhs;
  return out;
}

// Places `local` in tensor slot `slot` (0 = transmon) and identities elsewhere.
inline Matrix embed(const Matrix& local, int slot, int n_levels, int n_tls) {
  Matrix out = slot == 0 ? local : Matrix::Identity(n_levels, n_levels);
  for (int k = 0; k < n_tls; ++k) {
    out = kron(out, slot == k + 1 ? local : Matrix(Matrix::Identity(2, 2)));
  }
  return out;
}

}  // namespace detail

/// Truncated bosonic `a` on the transmon factor and hard-core `b_k` per TLS.
inline Operators build_operators(const SystemSpec& spec, int max_dimension = tol::kMaxDimension) {
  validate(spec, max_dimension);
  const int nl = spec.transmon.n_levels;
  const int nk = spec.n_tls();

  Matrix a_local = Matrix::Zero(nl, nl);
  for (int n = 1; n < nl; ++n) a_local(n - 1, n) = std::sqrt(static_cast<double>(n));
  Matrix b_local = Matrix::Zero(2, 2);
  b_local(0, 1) = 1.0;

  Operators ops;
  ops.n_levels = nl;
  ops.a = detail::embed(a_local, 0, nl, nk);
  ops.a_dag = ops.a.adjoint();
  for (int k = 0; k < nk; ++k) {
    ops.b.push_back(detail::embed(b_local, k + 1, nl, nk));
    ops.b_dag.push_back(ops.b.back().adjoint());
  }
  return ops;
}

/// max |H - H^dagger| / max |H|; zero for the zero matrix.
inline double hermiticity_defect(const Matrix& h) {
  const double scale = h.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline bool is_hermitian(const Matrix& h, double rel_tol = tol::kHermitian) {
  return h.rows() == h.cols() && hermiticity_defect(h) <= rel_tol;
}

namespace detail {

// Shared body of the static and rotating-frame Hamiltonians; every frequency
// is measured relative to `frame` (Hz).
inline Matrix frame_hamiltonian(const SystemSpec& spec, const Operators& ops, double frame) {
  const auto& q = spec.transmon;
  const Matrix n_q = ops.a_dag * ops.a;
  Matrix h = angular(q.omega_q - frame) * n_q -
             angular(0.5 * q.anharmonicity) * (ops.a_dag * ops.a_dag * ops.a * ops.a);
  for (int k = 0; k < spec.n_tls(); ++k) {
    const auto& t = spec.tls[k];
    h += angular(t.omega - frame) * (ops.b_dag[k] * ops.b[k]);
    h += angular(t.coupling) * (ops.a_dag * ops.b[k] + ops.a * ops.b_dag[k]);
  }
  return h;
}

// a + a^dag + sum_k lambda_k (b_k + b_k^dag)
inline Matrix drive_operator(const SystemSpec& spec, const Operators& ops) {
  Matrix x = ops.a + ops.a_dag;
  for (int k = 0; k < spec.n_tls(); ++k) {
    x += spec.tls[k].lambda * (ops.b[k] + ops.b_dag[k]);
  }
  return x;
}

}  // namespace detail

/// H/hbar = w_q a^dag a - (U/2) a^dag a^dag a a
///          + sum_k [w_k b_k^dag b_k + g_k (a^dag b_k + a b_k^dag)],   rad/s.
inline OperatorMatrix hamiltonian_static(const SystemSpec& spec, const Operators& ops) {
  return detail::frame_hamiltonian(spec, ops, 0.0);
}

inline OperatorMatrix hamiltonian_static(const SystemSpec& spec) {
  return hamiltonian_static(spec, build_operators(spec));
}

/// Time-independent Hamiltonian in the frame rotating at the drive frequency,
/// counter-rotating terms dropped. The drive enters as (A/2)(a + a^dag + ...).
inline OperatorMatrix hamiltonian_rwa(const SystemSpec& spec, const DrivePulse& pulse,
                                      const Operators& ops) {
  validate(pulse);
  Matrix h = detail::frame_hamiltonian(spec, ops, pulse.omega_d);
  h += angular(0.5 * pulse.amplitude) * detail::drive_operator(spec, ops);
  return h;
}

inline OperatorMatrix hamiltonian_rwa(const SystemSpec& spec, const DrivePulse& pulse) {
  return hamiltonian_rwa(spec, pulse, build_operators(spec));
}

/// Lab-frame Hamiltonian with the full A cos(w_d t) drive. Used to validate
/// the rotating-wave treatment; not needed by the map pipeline.
inline OperatorMatrix hamiltonian_lab(const SystemSpec& spec, const DrivePulse& pulse, double t,
                                      const Operators& ops) {
  validate(pulse);
  Matrix h = hamiltonian_static(spec, ops);
  h += angular(pulse.amplitude) * std::cos(angular(pulse.omega_d) * t) *
       detail::drive_operator(spec, ops);
  return h;
}

inline OperatorMatrix hamiltonian_lab(const SystemSpec& spec, const DrivePulse& pulse, double t) {
  return hamiltonian_lab(spec, pulse, t, build_operators(spec));
}

}  // namespace twotone

#endif  // TWOTONE_MODEL_HPP
