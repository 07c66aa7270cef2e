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

// Two-pulse (omega, t) spectroscopy.
//
// Sequence: start in |0...0>, drive for t_A at omega_d (pulse A), apply a
// pi-pulse at the calibrated qubit frequency (pulse B), read out the
// population of transmon level 1. Each pulse is evolved under its own
// rotating-frame Liouvillian.

#ifndef TWOTONE_PROTOCOL_HPP
#define TWOTONE_PROTOCOL_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "twotone/common.hpp"
#include "twotone/lindblad.hpp"
#include "twotone/model.hpp"

namespace twotone {

/// 1/(60 ns): default pulse-A amplitude, Hz.
inline constexpr double kDefaultPulseAAmplitude = 1.0 / 60e-9;
inline constexpr double kDefaultPiPulseLength = 100e-9;
inline constexpr double kDefaultPulseBAmplitude = 5e6;

/// Sampling grid of an (omega, t)-map.
struct MapGrid {
  std::vector<double> drive_frequencies;  // Hz, strictly increasing
  std::vector<double> durations;          // s, uniform, starting at 0 or dt

  std::size_t n_freq() const noexcept { return drive_frequencies.size(); }
  std::size_t n_time() const noexcept { return durations.size(); }

  double time_step() const {
    if (durations.size() >= 2) return durations[1] - durations[0];
    if (durations.size() == 1 && durations[0] > 0.0) return durations[0];
    throw ValidationError("grid.durations", "need at least two samples or one nonzero sample");
  }

  /// Spacing of the frequency axis (mean step).
  double frequency_step() const {
    if (drive_frequencies.size() < 2) return 0.0;
    return (drive_frequencies.back() - drive_frequencies.front()) /
           static_cast<double>(drive_frequencies.size() - 1);
  }

  /// Number of propagation steps taken before the first sample (0 or 1).
  int leading_steps() const { return durations.front() > 0.5 * time_step() ? 1 : 0; }

  void validate() const {
    if (drive_frequencies.empty()) throw ValidationError("grid.drive_frequencies", "empty");
    if (durations.empty()) throw ValidationError("grid.durations", "empty");
    for (std::size_t i = 0; i < drive_frequencies.size(); ++i) {
      if (!std::isfinite(drive_frequencies[i]) || drive_frequencies[i] < 0.0)
        throw ValidationError("grid.drive_frequencies", "must be finite and >= 0");
      if (i > 0 && !(drive_frequencies[i] > drive_frequencies[i - 1]))
        throw ValidationError("grid.drive_frequencies", "must be strictly increasing");
    }
    const double dt = time_step();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("grid.durations", "step must be > 0");
    const double first = durations.front();
    if (std::abs(first) > 1e-9 * dt && std::abs(first - dt) > 1e-9 * dt)
      throw ValidationError("grid.durations", "must start at 0 or at the time step");
    for (std::size_t n = 0; n < durations.size(); ++n) {
      const double expected = first + static_cast<double>(n) * dt;
      if (std::abs(durations[n] - expected) > 1e-6 * dt)
        throw ValidationError("grid.durations", "must be uniformly spaced");
    }
  }

  /// f_start, f_start + f_step, ... up to f_stop (inclusive within half a step).
  static MapGrid uniform(double f_start, double f_stop, double f_step, double t_start, double t_step,
                         int n_time) {
    if (!(f_step > 0.0)) throw ValidationError("grid.drive_step", "must be > 0");
    if (!(f_stop >= f_start)) throw ValidationError("grid.drive_stop", "must be >= drive_start");
    if (!(t_step > 0.0)) throw ValidationError("grid.duration_step", "must be > 0");
    if (n_time < 1) throw ValidationError("grid.duration_count", "must be >= 1");
    MapGrid g;
    const auto n_freq = static_cast<std::size_t>(std::floor((f_stop - f_start) / f_step + 0.5)) + 1;
    g.drive_frequencies.reserve(n_freq);
    for (std::size_t i = 0; i < n_freq; ++i)
      g.drive_frequencies.push_back(f_start + static_cast<double>(i) * f_step);
    g.durations.reserve(static_cast<std::size_t>(n_time));
    for (int n = 0; n < n_time; ++n) g.durations.push_back(t_start + n * t_step);
    g.validate();
    return g;
  }

  /// 6.8-7.2 GHz in 2 MHz steps, 0-2 us in 10 ns steps (201 x 201).
  static MapGrid default_grid() { return uniform(6.8e9, 7.2e9, 2e6, 0.0, 10e-9, 201); }
};

struct PulseBCalibration {
  double omega_tilde_q = 0.0;  // Hz
  double t_pi = kDefaultPiPulseLength;
  double amplitude = kDefaultPulseBAmplitude;
  /// Post-pulse P_q reached in the decoherence-free system.
  double achieved_population = 0.0;
};

struct CalibrationOptions {
  double t_pi = kDefaultPiPulseLength;
  double amplitude = kDefaultPulseBAmplitude;
  double scan_step = 0.1e6;
  double refine_tolerance = 1e3;
  /// CalibrationError below this; 0 disables the check.
  double min_population = 0.8;
};

/// Populations after pulse B, rows = drive frequency, columns = t_A.
struct OmegaTMap {
  RealMatrix values;
  MapGrid grid;
  SystemSpec spec;
  PulseBCalibration calibration;
  double pulse_a_amplitude = kDefaultPulseAAmplitude;
};

// ---------------------------------------------------------------------------
// Observables

/// Projector onto transmon level 1, identity on every TLS.
inline Matrix qubit_projector(const SystemSpec& spec) {
  const int d = spec.dimension();
  const int block = 1 << spec.n_tls();
  Matrix p = Matrix::Zero(d, d);
  for (int i = block; i < 2 * block; ++i) p(i, i) = 1.0;
  return p;
}

/// b_k^dag b_k as a diagonal matrix.
inline Matrix tls_number(const SystemSpec& spec, int k) {
  if (k < 0 || k >= spec.n_tls()) throw ValidationError("k", "TLS index out of range");
  const int d = spec.dimension();
  const int bit = spec.n_tls() - 1 - k;
  Matrix p = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    if ((i >> bit) & 1) p(i, i) = 1.0;
  return p;
}

inline double qubit_population(const DensityMatrix& rho, const SystemSpec& spec) {
  if (rho.rows() != spec.dimension() || rho.cols() != spec.dimension())
    throw DimensionError("qubit_population: state does not match spec");
  const int block = 1 << spec.n_tls();
  double p = 0.0;
  for (int i = block; i < 2 * block; ++i) p += rho(i, i).real();
  return p;
}

inline double tls_population(const DensityMatrix& rho, const SystemSpec& spec, int k) {
  if (rho.rows() != spec.dimension() || rho.cols() != spec.dimension())
    throw DimensionError("tls_population: state does not match spec");
  return (tls_number(spec, k) * rho).trace().real();
}

inline DensityMatrix ground_state(const SystemSpec& spec) {
  const int d = spec.dimension();
  DensityMatrix rho = DensityMatrix::Zero(d, d);
  rho(0, 0) = 1.0;
  return rho;
}

// ---------------------------------------------------------------------------
// Pulse-B calibration

namespace detail {

// P_q after a coherent rectangular pulse from the ground state.
inline double coherent_pulse_population(const SystemSpec& clean, const Operators& ops,
                                        const DrivePulse& pulse) {
  const Matrix h = hamiltonian_rwa(clean, pulse, ops);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& v = es.eigenvectors();
  Vector phase(v.rows());
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    phase(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * pulse.duration));
  // psi = V exp(-i E t) V^dag |0>
  const Vector psi = v * phase.asDiagonal() * v.row(0).adjoint();
  const int block = 1 << clean.n_tls();
  double p = 0.0;
  for (int i = block; i < 2 * block; ++i) p += std::norm(psi(i));
  return p;
}

}  // namespace detail

/// Drive frequency maximizing post-pi-pulse P_q in the decoherence-free system.
/// The scan covers omega_q +- 3 sum_k g_k^2/|Delta_k| (at least 1 MHz, at most U/2)
/// and the best sample is refined by golden-section search.
inline PulseBCalibration calibrate_pulse_b(const SystemSpec& spec,
                                           const CalibrationOptions& opt = {}) {
  const SystemSpec clean = without_decoherence(spec);
  const Operators ops = build_operators(clean);
  const double wq = spec.transmon.omega_q;
  if (!(opt.scan_step > 0.0)) throw ValidationError("calibration.scan_step", "must be > 0");
  if (!(opt.t_pi > 0.0)) throw ValidationError("pulse_b.duration", "must be > 0");

  double half_width = 0.0;
  for (const auto& t : spec.tls) {
    const double detuning = std::max({std::abs(wq - t.omega), t.coupling, 1.0});
    half_width += 3.0 * t.coupling * t.coupling / detuning;
  }
  half_width = std::clamp(half_width, std::max(1e6, 5.0 * opt.scan_step),
                          std::max(0.5 * spec.transmon.anharmonicity, 1e6));

  auto population = [&](double omega_d) {
    return detail::coherent_pulse_population(clean, ops, {opt.amplitude, omega_d, opt.t_pi});
  };

  const auto n_half = static_cast<long>(std::ceil(half_width / opt.scan_step));
  double best_w = wq;
  double best_p = -1.0;
  for (long i = -n_half; i <= n_half; ++i) {
    const double w = wq + static_cast<double>(i) * opt.scan_step;
    const double p = population(w);
    if (p > best_p) {
      best_p = p;
      best_w = w;
    }
  }

  // Golden-section refinement on [best - step, best + step].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_w - opt.scan_step;
  double hi = best_w + opt.scan_step;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = population(x1);
  double f2 = population(x2);
  while (hi - lo > opt.refine_tolerance) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = population(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = population(x2);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double p_mid = population(mid);
  if (p_mid > best_p) {
    best_p = p_mid;
    best_w = mid;
  }

  PulseBCalibration cal{best_w, opt.t_pi, opt.amplitude, best_p};
  if (opt.min_population > 0.0 && best_p < opt.min_population) {
    throw CalibrationError("pulse-B calibration reached P_q = " + std::to_string(best_p) +
                               " < " + std::to_string(opt.min_population),
                           best_p);
  }
  return cal;
}

// ---------------------------------------------------------------------------
// Sequence and map

/// P_q after ground state -> pulse A (omega_d, amplitude, t_A) -> pulse B.
/// Each pulse uses a single exponential of its full duration.
inline double run_sequence(const SystemSpec& spec, const PulseBCalibration& cal, double omega_d,
                           double t_a, double pulse_a_amplitude = kDefaultPulseAAmplitude) {
  const Operators ops = build_operators(spec);
  const Liouvillian la =
      liouvillian(spec, hamiltonian_rwa(spec, {pulse_a_amplitude, omega_d, t_a}, ops), ops);
  const Liouvillian lb = liouvillian(
      spec, hamiltonian_rwa(spec, {cal.amplitude, cal.omega_tilde_q, cal.t_pi}, ops), ops);
  Vector rho = vectorize(ground_state(spec));
  rho = propagator(la, t_a) * rho;
  rho = propagator(lb, cal.t_pi) * rho;
  return qubit_population(devectorize(rho), spec);
}

namespace detail {

// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 256));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(std::min(workers, n));
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Fast map: the row vector P^dag exp(t_pi L_B) is formed once, and for each
/// drive frequency a single-step propagator exp(dt L_A) is iterated on the
/// state, so each cell costs one matrix-vector and one inner product.
/// Rows are independent and are computed in parallel; the result does not
/// depend on the thread count.
inline OmegaTMap generate_map(const SystemSpec& spec, const PulseBCalibration& cal,
                              const MapGrid& grid,
                              double pulse_a_amplitude = kDefaultPulseAAmplitude, int threads = 1) {
  grid.validate();
  if (!(pulse_a_amplitude >= 0.0)) throw ValidationError("pulse_a.amplitude", "must be >= 0");
  const Operators ops = build_operators(spec);
  const double dt = grid.time_step();

  const Liouvillian lb = liouvillian(
      spec, hamiltonian_rwa(spec, {cal.amplitude, cal.omega_tilde_q, cal.t_pi}, ops), ops);
  const Eigen::RowVectorXcd readout =
      vectorize(qubit_projector(spec)).adjoint() * propagator(lb, cal.t_pi);
  const Vector rho0 = vectorize(ground_state(spec));
  const int lead = grid.leading_steps();

  OmegaTMap map;
  map.values = RealMatrix::Zero(static_cast<Eigen::Index>(grid.n_freq()),
                                static_cast<Eigen::Index>(grid.n_time()));
  detail::parallel_for(grid.n_freq(), threads, [&](std::size_t i) {
    const Liouvillian la = liouvillian(
        spec, hamiltonian_rwa(spec, {pulse_a_amplitude, grid.drive_frequencies[i], dt}, ops), ops);
    const Matrix step = propagator(la, dt);
    Vector v = rho0;
    for (int s = 0; s < lead; ++s) v = step * v;
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t n = 0; n < grid.n_time(); ++n) {
      map.values(row, static_cast<Eigen::Index>(n)) = (readout * v)(0).real();
      if (n + 1 < grid.n_time()) v = step * v;
    }
  });

  const double lo = map.values.minCoeff();
  const double hi = map.values.maxCoeff();
  if (lo < -tol::kPopulationSlack || hi > 1.0 + tol::kPopulationSlack) {
    throw NumericalError("map population outside [0, 1]: [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  }
  map.grid = grid;
  map.spec = spec;
  map.calibration = cal;
  map.pulse_a_amplitude = pulse_a_amplitude;
  return map;
}

}  // namespace twotone

#endif  // TWOTONE_PROTOCOL_HPP
