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

// Perturbative predictions for map features, a three-state rate model of the
// driven steady state, and classical feature extraction / TLS estimation.
//
// Closed forms take and return ordinary frequencies (Hz). Detuning convention:
// delta = omega_q - omega_k.

#ifndef TWOTONE_ANALYTICS_HPP
#define TWOTONE_ANALYTICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "twotone/common.hpp"
#include "twotone/model.hpp"
#include "twotone/protocol.hpp"

namespace twotone {

namespace detail {

inline bool near_zero(double x, double scale) {
  return !(std::abs(x) > 1e-12 * std::max(std::abs(scale), 1.0));
}

inline double checked_divide(double num, double den, double scale, const char* what) {
  if (near_zero(den, scale)) throw PoleError(std::string(what) + ": pole");
  return num / den;
}

}  // namespace detail

/// Per-TLS derived quantities.
struct DerivedQuantities {
  double delta = 0.0;        // omega_q - omega_k, Hz
  double delta_tilde = 0.0;  // delta + 2 g^2 / delta, Hz
  double gamma_total = 0.0;  // gamma_q + gamma_k + kappa_q + kappa_k, 1/s
};

inline double delta_tilde(double g, double delta) {
  return delta + detail::checked_divide(2.0 * g * g, delta, std::abs(g), "delta_tilde");
}

inline DerivedQuantities derive(const SystemSpec& spec, int k) {
  if (k < 0 || k >= spec.n_tls()) throw ValidationError("k", "TLS index out of range");
  const auto& q = spec.transmon;
  const auto& t = spec.tls[static_cast<std::size_t>(k)];
  DerivedQuantities d;
  d.delta = q.omega_q - t.omega;
  d.delta_tilde = delta_tilde(t.coupling, d.delta);
  d.gamma_total = q.gamma + t.gamma + q.kappa + t.kappa;
  return d;
}

// ---------------------------------------------------------------------------
// Closed forms

/// Qubit-frequency difference between TLS ground and excited:
/// 4 g^2/(U - delta) + A^2 delta / g^2.
inline double shift_delta_omega(double g, double delta, double u, double a) {
  if (!(g > 0.0)) throw PoleError("shift_delta_omega: g must be > 0");
  const double scale = std::max(std::abs(u), std::abs(delta));
  return detail::checked_divide(4.0 * g * g, u - delta, scale, "shift_delta_omega") +
         a * a * delta / (g * g);
}

/// Two-photon |20> resonance: omega_q - U/2 - g^2/(U - delta).
inline double freq_two_photon(double omega_q, double u, double g, double delta) {
  const double scale = std::max(std::abs(u), std::abs(delta));
  return omega_q - 0.5 * u - detail::checked_divide(g * g, u - delta, scale, "freq_two_photon");
}

/// Dressed TLS line |00> -> |01>: omega_k - g^2/delta.
inline double freq_01(double omega_k, double g, double delta) {
  return omega_k - detail::checked_divide(g * g, delta, std::abs(g), "freq_01");
}

/// g A / delta_tilde + lambda A (signed).
inline double rabi_01_raw(double g, double delta_t, double lambda, double a) {
  return detail::checked_divide(g * a, delta_t, std::max(std::abs(g), std::abs(a)), "rabi_01") +
         lambda * a;
}

inline double rabi_01(double g, double delta_t, double lambda, double a) {
  return std::abs(rabi_01_raw(g, delta_t, lambda, a));
}

/// bSWAP-type |00> -> |11> line: (omega_q + omega_k)/2 + g^2/(U - delta_tilde).
inline double freq_11(double omega_q, double omega_k, double g, double u, double delta_t) {
  const double scale = std::max(std::abs(u), std::abs(delta_t));
  return 0.5 * (omega_q + omega_k) +
         detail::checked_divide(g * g, u - delta_t, scale, "freq_11");
}

/// 2 A^2 g (U + lambda^2 (U - delta_tilde)) / (delta_tilde^2 (U - delta_tilde)) (signed).
inline double rabi_11_raw(double a, double g, double u, double delta_t, double lambda) {
  const double scale = std::max(std::abs(u), std::abs(delta_t));
  const double den = delta_t * delta_t * (u - delta_t);
  if (detail::near_zero(u - delta_t, scale) || detail::near_zero(delta_t, scale))
    throw PoleError("rabi_11: pole");
  return 2.0 * a * a * g * (u + lambda * lambda * (u - delta_t)) / den;
}

inline double rabi_11(double a, double g, double u, double delta_t, double lambda) {
  return std::abs(rabi_11_raw(a, g, u, delta_t, lambda));
}

// ---------------------------------------------------------------------------
// Steady state and rate model

struct DecoherenceRates {
  double gamma_q = 0.0;
  double kappa_q = 0.0;
  double gamma_k = 0.0;
  double kappa_k = 0.0;

  double total() const noexcept { return gamma_q + gamma_k + kappa_q + kappa_k; }

  static DecoherenceRates from(const SystemSpec& spec, int k) {
    if (k < 0 || k >= spec.n_tls()) throw ValidationError("k", "TLS index out of range");
    const auto& t = spec.tls[static_cast<std::size_t>(k)];
    return {spec.transmon.gamma, spec.transmon.kappa, t.gamma, t.kappa};
  }

  void validate() const {
    for (double r : {gamma_q, kappa_q, gamma_k, kappa_k})
      if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("rates", "must be finite and >= 0");
  }
};

/// Driven steady-state qubit population near the |01> line:
/// (2 g^2 G + A^2 (gq + kq)) / (6 g^2 G + 3 A^2 (gq + kq) + 8 gq delta^2),
/// with g, A, delta converted to rad/s.
inline double steady_population_approx(double g, double a, double delta,
                                       const DecoherenceRates& r) {
  r.validate();
  if (r.total() == 0.0) throw ValidationError("rates", "at least one rate must be nonzero");
  const double wg = angular(g), wa = angular(a), wd = angular(delta);
  const double gt = r.total();
  const double gq = r.gamma_q + r.kappa_q;
  const double num = 2.0 * wg * wg * gt + wa * wa * gq;
  const double den = 6.0 * wg * wg * gt + 3.0 * wa * wa * gq + 8.0 * r.gamma_q * wd * wd;
  if (!(den > 0.0)) throw PoleError("steady_population_approx: zero denominator");
  return num / den;
}

/// Transition rates of the three-state model (1/s).
struct RateCoefficients {
  double c1 = 0.0;  // |0> <-> qubit, direct drive
  double c2 = 0.0;  // |0> <-> TLS, via the |01> Rabi drive
  double c3 = 0.0;  // qubit <-> TLS exchange
  /// g and A both at most |delta|/10.
  bool in_regime = false;
};

inline RateCoefficients rate_coefficients(double g, double a, double delta, double lambda,
                                          const DecoherenceRates& r) {
  r.validate();
  const double wg = angular(g), wa = angular(a), wd = angular(delta);
  const double omega01 = angular(rabi_01(g, delta_tilde(g, delta), lambda, a));
  const double gq = r.gamma_q + r.kappa_q;
  const double gk = r.gamma_k + r.kappa_k;
  const double gt = r.total();
  RateCoefficients c;
  c.c1 = 0.25 * wa * wa * gq / (wd * wd + gq * gq);
  const double shift = 2.0 * wg * wg / wd;
  c.c2 = gk > 0.0 ? omega01 * omega01 * gk / (shift * shift + gk * gk) : 0.0;
  c.c3 = wg * wg * gt / (wd * wd + gt * gt);
  c.in_regime = g <= 0.1 * std::abs(delta) && a <= 0.1 * std::abs(delta);
  return c;
}

inline RateCoefficients rate_coefficients(const SystemSpec& spec, int k, double a) {
  const auto d = derive(spec, k);
  const auto& t = spec.tls[static_cast<std::size_t>(k)];
  return rate_coefficients(t.coupling, a, d.delta, t.lambda, DecoherenceRates::from(spec, k));
}

/// (P_0, P_q, P_TLS)
using RatePopulations = std::array<double, 3>;

struct RateTrajectory {
  std::vector<double> times;
  std::vector<RatePopulations> populations;
};

namespace detail {

inline std::array<RatePopulations, 3> rate_generator(const RateCoefficients& c, double gamma_q,
                                                     double gamma_k) {
  return {{{-(c.c1 + c.c2), gamma_q + c.c1, gamma_k + c.c2},
           {c.c1, -(gamma_q + c.c1 + c.c3), c.c3},
           {c.c2, c.c3, -(gamma_k + c.c2 + c.c3)}}};
}

inline RatePopulations apply(const std::array<RatePopulations, 3>& m, const RatePopulations& p) {
  RatePopulations out{};
  for (int i = 0; i < 3; ++i) out[i] = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2];
  return out;
}

}  // namespace detail

/// Fixed-step RK4 integration of the rate equations, sampled at n_samples
/// equally spaced times in [0, t_end]. The internal step never exceeds
/// 1/(100 * fastest rate).
inline RateTrajectory rate_evolve(const RateCoefficients& c, double gamma_q, double gamma_k,
                                  const RatePopulations& p0, double t_end,
                                  std::size_t n_samples = 101) {
  for (double v : {c.c1, c.c2, c.c3, gamma_q, gamma_k})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("rates", "must be finite and >= 0");
  double sum = 0.0;
  for (double p : p0) {
    if (!(p >= -1e-12)) throw ValidationError("p0", "populations must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("p0", "populations must sum to 1");
  if (!(t_end >= 0.0)) throw ValidationError("t_end", "must be >= 0");
  if (n_samples < 2) throw ValidationError("n_samples", "must be >= 2");

  const auto m = detail::rate_generator(c, gamma_q, gamma_k);
  double fastest = 0.0;
  for (int i = 0; i < 3; ++i) fastest = std::max(fastest, std::abs(m[i][i]));
  const double interval = t_end / static_cast<double>(n_samples - 1);
  const auto substeps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(interval * 100.0 * fastest)));
  const double h = interval / static_cast<double>(substeps);

  RateTrajectory out;
  out.times.reserve(n_samples);
  out.populations.reserve(n_samples);
  RatePopulations p = p0;
  auto axpy = [](const RatePopulations& x, double s, const RatePopulations& y) {
    return RatePopulations{x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2]};
  };
  for (std::size_t n = 0; n < n_samples; ++n) {
    out.times.push_back(static_cast<double>(n) * interval);
    out.populations.push_back(p);
    if (n + 1 == n_samples) break;
    for (std::size_t s = 0; s < substeps; ++s) {
      const auto k1 = detail::apply(m, p);
      const auto k2 = detail::apply(m, axpy(p, 0.5 * h, k1));
      const auto k3 = detail::apply(m, axpy(p, 0.5 * h, k2));
      const auto k4 = detail::apply(m, axpy(p, h, k3));
      for (int i = 0; i < 3; ++i) p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  return out;
}

/// Exact fixed point P_q of the rate equations:
///   (c2 c3 + c1 (c2 + c3 + gk)) /
///   (3 c1 c2 + 3 c1 c3 + 2 c1 gk + 3 c2 c3 + 2 c2 gq + c3 gk + c3 gq + gk gq).
inline double rate_steady_full(const RateCoefficients& c, double gamma_q, double gamma_k) {
  const double num = c.c2 * c.c3 + c.c1 * (c.c2 + c.c3 + gamma_k);
  const double den = 3.0 * c.c1 * c.c2 + 3.0 * c.c1 * c.c3 + 2.0 * c.c1 * gamma_k +
                     3.0 * c.c2 * c.c3 + 2.0 * c.c2 * gamma_q + c.c3 * gamma_k +
                     c.c3 * gamma_q + gamma_k * gamma_q;
  if (!(den > 0.0)) throw PoleError("rate_steady_full: zero denominator");
  return num / den;
}

// ---------------------------------------------------------------------------
// Oscillation frequency

/// Zero-padding factor used by dominant_frequency.
inline constexpr int kFftPadding = 8;

/// Dominant nonzero frequency (Hz) of a uniformly sampled real signal:
/// mean removed, Hann window, zero-padded FFT, the DC main lobe skipped,
/// parabolic interpolation of the peak. Ties go to the lower bin. Returns 0
/// when no peak exists outside the DC lobe.
template <typename Samples>
double dominant_frequency(const Samples& samples, double dt) {
  const auto n = static_cast<std::size_t>(samples.size());
  if (!(dt > 0.0)) throw ValidationError("dt", "must be > 0");
  if (n < 4) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += samples[static_cast<Eigen::Index>(i)];
  mean /= static_cast<double>(n);
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    spread = std::max(spread, std::abs(samples[static_cast<Eigen::Index>(i)] - mean));
  if (spread <= 1e-12 * std::max(std::abs(mean), 1.0)) return 0.0;

  const std::size_t m = n * kFftPadding;
  std::vector<double> padded(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
    padded[i] = (samples[static_cast<Eigen::Index>(i)] - mean) * w;
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  const std::size_t half = m / 2 + 1;
  std::vector<double> mag(half);
  for (std::size_t k = 0; k < half; ++k) mag[k] = std::abs(spectrum[k]);

  std::size_t k0 = 1;
  while (k0 + 1 < half && mag[k0 + 1] < mag[k0]) ++k0;
  if (k0 + 2 >= half) return 0.0;
  std::size_t best = k0;
  for (std::size_t k = k0 + 1; k < half; ++k)
    if (mag[k] > mag[best]) best = k;
  if (!(mag[best] > 0.0)) return 0.0;
  double offset = 0.0;
  if (best >= 1 && best + 1 < half) {
    const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
    const double den = a - 2.0 * b + c;
    if (den != 0.0) offset = 0.5 * (a - c) / den;
  }
  return (static_cast<double>(best) + offset) / (static_cast<double>(m) * dt);
}

// ---------------------------------------------------------------------------
// Features

enum class FeatureKind { kTls01, kTls11, kQubit10, kQubit20, kUnknown };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::kTls01: return "TLS_01";
    case FeatureKind::kTls11: return "TLS_11";
    case FeatureKind::kQubit10: return "QUBIT_10";
    case FeatureKind::kQubit20: return "QUBIT_20";
    case FeatureKind::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

struct MapFeature {
  double center_frequency = 0.0;       // Hz
  double oscillation_frequency = 0.0;  // Hz
  double contrast = 0.0;
  FeatureKind kind = FeatureKind::kUnknown;
  std::size_t peak_index = 0;
  std::size_t first_index = 0;
  std::size_t last_index = 0;
};

struct FeatureOptions {
  double contrast_threshold = 0.05;
  /// Classification proximity, in frequency-grid steps.
  double proximity_steps = 3.0;
  /// TLS_01 needs at least this many oscillation periods in the t_A window.
  double min_cycles = 1.0;
  /// Largest accepted |omega_k - center| for a TLS_01 fixed point, Hz.
  double max_pull = 200e6;
};

/// Mean |M(i, n) - M(i, 0)| per drive frequency.
inline std::vector<double> column_contrast(const RealMatrix& values) {
  std::vector<double> c(static_cast<std::size_t>(values.rows()), 0.0);
  if (values.cols() == 0) return c;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < values.cols(); ++n) s += std::abs(values(i, n) - values(i, 0));
    c[static_cast<std::size_t>(i)] = std::clamp(s / static_cast<double>(values.cols()), 0.0, 1.0);
  }
  return c;
}

/// Unclassified features: one per local contrast maximum above threshold.
/// The core of a feature extends from the peak while contrast keeps falling
/// and stays above half the peak; the center is the contrast-weighted
/// centroid of the core. With at least three core columns the oscillation
/// frequency is taken from a least-squares fit of the detuned-Rabi
/// hyperbola Omega(x)^2 = Omega^2 + (x - x0)^2; otherwise from the peak
/// column alone.
inline std::vector<MapFeature> find_features(const RealMatrix& values,
                                             const std::vector<double>& freqs, double dt,
                                             double threshold = 0.05) {
  if (static_cast<std::size_t>(values.rows()) != freqs.size())
    throw DimensionError("find_features: axis does not match map rows");
  const std::vector<double> c = column_contrast(values);
  const std::size_t n = c.size();
  auto oscillation = [&](std::size_t i) {
    return dominant_frequency(values.row(static_cast<Eigen::Index>(i)), dt);
  };

  std::vector<MapFeature> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (c[i] < threshold) continue;
    if ((i > 0 && c[i - 1] > c[i]) || (i + 1 < n && c[i + 1] >= c[i])) continue;
    std::size_t lo = i, hi = i;
    while (lo > 0 && c[lo - 1] >= 0.5 * c[i] && c[lo - 1] <= c[lo]) --lo;
    while (hi + 1 < n && c[hi + 1] >= 0.5 * c[i] && c[hi + 1] <= c[hi]) ++hi;

    MapFeature f;
    double wsum = 0.0, csum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      wsum += c[j] * freqs[j];
      csum += c[j];
    }
    f.center_frequency = wsum / csum;
    f.contrast = c[i];
    f.peak_index = i;
    f.first_index = lo;
    f.last_index = hi;
    f.oscillation_frequency = oscillation(i);

    if (hi - lo + 1 >= 3) {
      // y = Omega_eff^2 - x^2 = -2 x0 x + (x0^2 + Omega^2), x relative to the peak.
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = static_cast<double>(hi - lo + 1);
      for (std::size_t j = lo; j <= hi; ++j) {
        const double x = freqs[j] - freqs[i];
        const double om = oscillation(j);
        const double y = om * om - x * x;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double det = m * sxx - sx * sx;
      if (det > 0.0) {
        const double slope = (m * sxy - sx * sy) / det;
        const double intercept = (sy - slope * sx) / m;
        const double x0 = -0.5 * slope;
        const double omega2 = intercept - x0 * x0;
        if (omega2 > 0.0 && std::abs(x0) <= freqs[hi] - freqs[lo])
          f.oscillation_frequency = std::sqrt(omega2);
      }
    }
    out.push_back(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimation

struct TlsEstimate {
  double omega = 0.0;     // omega_k estimate, Hz
  double coupling = 0.0;  // g_k estimate, Hz
  MapFeature source;
  /// Relative mismatch between the feature and the closed forms at the estimate.
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct EstimatorOptions {
  int max_iterations = 100;
  double tolerance = 1e3;  // Hz
  double damping = 0.5;
};

/// Inverts {center = omega_k - g^2/delta, oscillation = g A/|delta_tilde|}
/// for (omega_k, g) by damped fixed-point iteration.
inline TlsEstimate invert_tls_feature(const MapFeature& f, double omega_q, double a,
                                      const EstimatorOptions& opt = {}) {
  TlsEstimate e;
  e.source = f;
  const double center = f.center_frequency;
  const double osc = f.oscillation_frequency;
  double wk = center;
  double delta = omega_q - wk;
  if (!(a > 0.0) || std::abs(delta) < opt.tolerance) {
    e.omega = wk;
    e.residual = std::numeric_limits<double>::infinity();
    return e;
  }
  double g = osc * std::abs(delta) / a;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    e.iterations = it;
    const double wk_new = center + g * g / delta;
    const double d_new = omega_q - wk_new;
    if (!std::isfinite(wk_new) || std::abs(d_new) < opt.tolerance) break;
    const double g_new = osc * std::abs(d_new + 2.0 * g * g / d_new) / a;
    const double wk_next = (1.0 - opt.damping) * wk + opt.damping * wk_new;
    const double g_next = (1.0 - opt.damping) * g + opt.damping * g_new;
    const bool done = std::abs(wk_next - wk) < opt.tolerance && std::abs(g_next - g) < opt.tolerance;
    wk = wk_next;
    g = g_next;
    delta = omega_q - wk;
    if (!std::isfinite(wk) || !std::isfinite(g) || std::abs(delta) < opt.tolerance) break;
    if (done) {
      e.converged = true;
      break;
    }
  }
  e.omega = wk;
  e.coupling = g;
  if (std::isfinite(wk) && std::isfinite(g) && std::abs(delta) >= opt.tolerance) {
    const double pred_center = wk - g * g / delta;
    const double dt = delta + 2.0 * g * g / delta;
    const double pred_osc = std::abs(g * a / dt);
    const double r1 = (pred_center - center) / std::abs(delta);
    const double r2 = osc > 0.0 ? (pred_osc - osc) / osc : pred_osc;
    e.residual = std::hypot(r1, r2);
  } else {
    e.residual = std::numeric_limits<double>::infinity();
    e.converged = false;
  }
  return e;
}

/// Labels features using only transmon parameters, the pulse-B frequency and
/// the pulse-A amplitude. QUBIT_10 / QUBIT_20 go to the features nearest
/// omega_tilde_q and omega_q - U/2; TLS_01 to features that oscillate at
/// least `min_cycles` times in `window` and invert to a plausible TLS;
/// TLS_11 to features near the bSWAP line predicted by a faster TLS_01
/// estimate. Without a QUBIT_20 near omega_q - U/2 the two-photon line is
/// looked for again with the dispersive pull of the other TLS estimates.
inline void classify_features(std::vector<MapFeature>& features, const TransmonParams& transmon,
                              double omega_tilde_q, double a, double freq_step, double window,
                              const FeatureOptions& opt = {}) {
  const double prox = opt.proximity_steps * freq_step;
  const double wq = transmon.omega_q, u = transmon.anharmonicity;
  for (auto& f : features) f.kind = FeatureKind::kUnknown;
  auto nearest = [&](double target, auto&& eligible) -> MapFeature* {
    MapFeature* best = nullptr;
    for (auto& f : features) {
      if (!eligible(f)) continue;
      const double d = std::abs(f.center_frequency - target);
      if (d <= prox && (!best || d < std::abs(best->center_frequency - target))) best = &f;
    }
    return best;
  };
  auto unknown = [](const MapFeature& f) { return f.kind == FeatureKind::kUnknown; };
  if (auto* f = nearest(omega_tilde_q, unknown)) f->kind = FeatureKind::kQubit10;
  if (auto* f = nearest(wq - 0.5 * u, unknown)) f->kind = FeatureKind::kQubit20;

  struct Candidate {
    MapFeature* feature;
    TlsEstimate estimate;
  };
  std::vector<Candidate> tls;
  for (auto& f : features) {
    if (f.kind != FeatureKind::kUnknown) continue;
    if (window > 0.0 && f.oscillation_frequency * window < opt.min_cycles) continue;
    const TlsEstimate e = invert_tls_feature(f, wq, a);
    if (!std::isfinite(e.omega) || std::abs(e.omega - f.center_frequency) >= opt.max_pull) continue;
    f.kind = FeatureKind::kTls01;
    tls.push_back({&f, e});
  }
  std::stable_sort(tls.begin(), tls.end(), [](const Candidate& x, const Candidate& y) {
    return x.feature->oscillation_frequency > y.feature->oscillation_frequency;
  });
  auto line_11 = [&](const TlsEstimate& e, double& line) {
    const double delta = wq - e.omega;
    try {
      line = freq_11(wq, e.omega, e.coupling, u, delta_tilde(e.coupling, delta));
    } catch (const PoleError&) {
      return false;
    }
    return true;
  };
  for (const auto& c : tls) {
    if (c.feature->kind != FeatureKind::kTls01) continue;
    double line = 0.0;
    if (!line_11(c.estimate, line)) continue;
    for (auto& f : features) {
      if (&f == c.feature) continue;
      if (f.kind != FeatureKind::kUnknown && f.kind != FeatureKind::kTls01) continue;
      if (std::abs(f.center_frequency - line) <= prox &&
          f.oscillation_frequency < c.feature->oscillation_frequency)
        f.kind = FeatureKind::kTls11;
    }
  }

  bool have_q20 = false;
  for (const auto& f : features) have_q20 = have_q20 || f.kind == FeatureKind::kQubit20;
  if (!have_q20) {
    MapFeature* best = nullptr;
    double best_distance = prox;
    for (const auto& c : tls) {
      if (c.feature->kind != FeatureKind::kTls01) continue;
      double target = wq - 0.5 * u;
      bool ok = true;
      for (const auto& o : tls) {
        if (&o == &c || o.feature->kind != FeatureKind::kTls01) continue;
        try {
          target += freq_two_photon(wq, u, o.estimate.coupling, wq - o.estimate.omega) - (wq - 0.5 * u);
        } catch (const PoleError&) {
          ok = false;
        }
      }
      const double d = std::abs(c.feature->center_frequency - target);
      if (ok && d <= best_distance) {
        best = c.feature;
        best_distance = d;
      }
    }
    if (best) best->kind = FeatureKind::kQubit20;
  }
}

/// find_features followed by classify_features, using the map's own
/// transmon parameters, calibration and pulse-A amplitude.
inline std::vector<MapFeature> extract_features(const OmegaTMap& map, const FeatureOptions& opt = {}) {
  map.grid.validate();
  const double dt = map.grid.time_step();
  auto features = find_features(map.values, map.grid.drive_frequencies, dt, opt.contrast_threshold);
  const double window = static_cast<double>(map.grid.n_time()) * dt;
  classify_features(features, map.spec.transmon, map.calibration.omega_tilde_q,
                    map.pulse_a_amplitude, map.grid.frequency_step(), window, opt);
  return features;
}

/// One estimate per TLS_01 feature. Non-converged inversions are returned
/// with converged = false.
inline std::vector<TlsEstimate> estimate_tls(const std::vector<MapFeature>& features,
                                             const TransmonParams& transmon, double a,
                                             const EstimatorOptions& opt = {}) {
  std::vector<TlsEstimate> out;
  for (const auto& f : features) {
    if (f.kind != FeatureKind::kTls01) continue;
    out.push_back(invert_tls_feature(f, transmon.omega_q, a, opt));
  }
  return out;
}

}  // namespace twotone

#endif  // TWOTONE_ANALYTICS_HPP
