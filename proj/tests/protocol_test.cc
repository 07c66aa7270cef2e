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

#include "twotone/protocol.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"

namespace twotone {
namespace {

using testing::reference_spec;

Matrix basis_projector(int d, int index) {
  Matrix p = Matrix::Zero(d, d);
  p(index, index) = 1.0;
  return p;
}

// Dressed qubit-like single-excitation energy of one transmon + one TLS:
// (w_q + w_k)/2 - sign(delta) sqrt(delta^2/4 + g^2).
double dressed_qubit(double wq, double wk, double g) {
  const double delta = wq - wk;
  return 0.5 * (wq + wk) + std::copysign(std::sqrt(0.25 * delta * delta + g * g), delta);
}

TEST(Populations, QubitProjector) {
  const auto s = reference_spec();  // |n m> -> 2n + m
  EXPECT_EQ(qubit_population(basis_projector(6, 0), s), 0.0);
  EXPECT_EQ(qubit_population(basis_projector(6, 3), s), 1.0);  // |11>
  EXPECT_EQ(qubit_population(basis_projector(6, 2), s), 1.0);  // |10>
  EXPECT_EQ(qubit_population(basis_projector(6, 4), s), 0.0);  // |20>
  EXPECT_THROW(qubit_population(basis_projector(3, 0), s), DimensionError);
}

TEST(Populations, TlsProjector) {
  auto s = reference_spec();
  s.tls.push_back({6.9e9, 10e6, 0.0, 0.0, 0.0});  // |n m0 m1> -> 4n + 2 m0 + m1
  EXPECT_EQ(tls_population(basis_projector(12, 0), s, 0), 0.0);
  EXPECT_EQ(tls_population(basis_projector(12, 2), s, 0), 1.0);
  EXPECT_EQ(tls_population(basis_projector(12, 2), s, 1), 0.0);
  EXPECT_EQ(tls_population(basis_projector(12, 1), s, 1), 1.0);
  EXPECT_THROW(tls_population(basis_projector(12, 0), s, 2), ValidationError);
  EXPECT_THROW(tls_population(basis_projector(12, 0), s, -1), ValidationError);
}

TEST(Populations, TlsFillsAtHalfRabiPeriod) {
  const auto s = without_decoherence(reference_spec());
  const double g = 30e6, delta = -80e6;
  const double dt = delta + 2 * g * g / delta;
  const double omega = std::abs(g * kDefaultPulseAAmplitude / dt);  // Hz
  const double t_half = 0.5 / omega;
  const auto ops = build_operators(s);
  const Matrix h = hamiltonian_rwa(s, {kDefaultPulseAAmplitude, 7.08e9 - g * g / delta, 0.0}, ops);
  auto pop = [&](double t) {
    const Matrix u = testing::unitary(h, t);
    return tls_population(u * ground_state(s) * u.adjoint(), s, 0);
  };
  double best = 0.0, t_best = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = 2.0 * t_half * i / 400.0;
    if (pop(t) > best) {
      best = pop(t);
      t_best = t;
    }
  }
  EXPECT_GT(best, 0.8);
  EXPECT_NEAR(t_best, t_half, 0.15 * t_half);
}

TEST(MapGrid, DefaultGrid) {
  const auto g = MapGrid::default_grid();
  EXPECT_EQ(g.n_freq(), 201u);
  EXPECT_EQ(g.n_time(), 201u);
  EXPECT_DOUBLE_EQ(g.drive_frequencies.front(), 6.8e9);
  EXPECT_DOUBLE_EQ(g.drive_frequencies.back(), 7.2e9);
  EXPECT_DOUBLE_EQ(g.durations.back(), 2e-6);
  EXPECT_DOUBLE_EQ(g.time_step(), 10e-9);
  EXPECT_EQ(g.leading_steps(), 0);
}

TEST(MapGrid, Validation) {
  MapGrid g = MapGrid::uniform(7e9, 7.01e9, 1e6, 0.0, 5e-9, 4);
  g.durations[2] += 1e-9;
  EXPECT_THROW(g.validate(), ValidationError);
  g = MapGrid::uniform(7e9, 7.01e9, 1e6, 0.0, 5e-9, 4);
  g.drive_frequencies[1] = g.drive_frequencies[0];
  EXPECT_THROW(g.validate(), ValidationError);
  EXPECT_THROW(MapGrid::uniform(7e9, 7.01e9, 1e6, 10e-9, 5e-9, 4), ValidationError);
  const auto shifted = MapGrid::uniform(7e9, 7.01e9, 1e6, 5e-9, 5e-9, 4);
  EXPECT_EQ(shifted.leading_steps(), 1);
}

TEST(Calibration, UncoupledQubitIsUnshifted) {
  auto s = reference_spec();
  s.tls[0].coupling = 0.0;
  const auto cal = calibrate_pulse_b(s);
  EXPECT_NEAR(cal.omega_tilde_q, 7e9, 0.1e6);
  EXPECT_GT(cal.achieved_population, 0.98);
  EXPECT_DOUBLE_EQ(cal.t_pi, 100e-9);
  EXPECT_DOUBLE_EQ(cal.amplitude, 5e6);
}

TEST(Calibration, FollowsDressedQubit) {
  const auto cal = calibrate_pulse_b(reference_spec());
  const double dressed = dressed_qubit(7e9, 7.08e9, 30e6);  // 6990 MHz
  EXPECT_NEAR(cal.omega_tilde_q, dressed, 0.5e6);
  EXPECT_LT(cal.omega_tilde_q, 7e9 - 8e6);
  // The dressed qubit state carries only cos^2(theta) ~ 0.9 of |10>.
  EXPECT_NEAR(cal.achieved_population, 0.8907, 2e-3);
}

TEST(Calibration, SymmetricShiftsCancel) {
  SystemSpec s = testing::bare_transmon();
  s.tls.push_back({7.08e9, 20e6, 0.0, 0.0, 0.0});
  s.tls.push_back({6.92e9, 20e6, 0.0, 0.0, 0.0});
  const auto cal = calibrate_pulse_b(s);
  EXPECT_NEAR(cal.omega_tilde_q, 7e9, 0.5e6);
}

TEST(Calibration, ReportsShortfall) {
  CalibrationOptions opt;
  opt.min_population = 0.95;
  try {
    calibrate_pulse_b(reference_spec(), opt);
    FAIL() << "expected CalibrationError";
  } catch (const CalibrationError& e) {
    EXPECT_NEAR(e.achieved(), 0.8907, 2e-3);
  }
}

class SequenceTest : public ::testing::Test {
 protected:
  SystemSpec spec = reference_spec();
  PulseBCalibration cal = calibrate_pulse_b(spec);
};

TEST_F(SequenceTest, ZeroDurationIsBarePiPulse) {
  const double p0 = run_sequence(spec, cal, 7.05e9, 0.0);
  EXPECT_GT(p0, 0.85);
  EXPECT_LE(p0, cal.achieved_population);
  auto clean = spec;
  clean.tls[0].coupling = 0.0;
  clean = without_decoherence(clean);
  EXPECT_GT(run_sequence(clean, calibrate_pulse_b(clean), 7e9, 0.0), 0.98);
}

TEST_F(SequenceTest, FarDetunedDriveDoesNothing) {
  const double p0 = run_sequence(spec, cal, 6.3e9, 0.0);
  for (double t : {50e-9, 200e-9, 500e-9})
    EXPECT_NEAR(run_sequence(spec, cal, 6.3e9, t), p0, 0.02);
}

TEST_F(SequenceTest, DipAtDressedTlsLine) {
  const double g = 30e6, delta = -80e6;
  const double wd = 7.08e9 - g * g / delta;
  const double omega = std::abs(g * kDefaultPulseAAmplitude / (delta + 2 * g * g / delta));
  const double p0 = run_sequence(spec, cal, wd, 0.0);
  const double p_half = run_sequence(spec, cal, wd, 0.5 / omega);
  EXPECT_LT(p_half, p0 - 0.3);
}

TEST_F(SequenceTest, FastMapEqualsDirectLoop) {
  const auto grid = MapGrid::uniform(7.0e9, 7.18e9, 20e6, 0.0, 37e-9, 10);
  const auto map = generate_map(spec, cal, grid);
  ASSERT_EQ(map.values.rows(), 10);
  ASSERT_EQ(map.values.cols(), 10);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int n = 0; n < 10; ++n)
      worst = std::max(worst, std::abs(map.values(i, n) -
                                       run_sequence(spec, cal, grid.drive_frequencies[i],
                                                    grid.durations[n])));
  EXPECT_LT(worst, 1e-9);
}

TEST_F(SequenceTest, LeadingStepGridMatchesDirectLoop) {
  const auto grid = MapGrid::uniform(7.05e9, 7.09e9, 20e6, 20e-9, 20e-9, 5);
  const auto map = generate_map(spec, cal, grid);
  for (int i = 0; i < 3; ++i)
    for (int n = 0; n < 5; ++n)
      EXPECT_NEAR(map.values(i, n),
                  run_sequence(spec, cal, grid.drive_frequencies[i], grid.durations[n]), 1e-9);
}

TEST_F(SequenceTest, ThreadCountDoesNotChangeOutput) {
  const auto grid = MapGrid::uniform(6.9e9, 7.1e9, 10e6, 0.0, 10e-9, 50);
  const auto one = generate_map(spec, cal, grid, kDefaultPulseAAmplitude, 1);
  const auto many = generate_map(spec, cal, grid, kDefaultPulseAAmplitude, 3);
  EXPECT_TRUE(one.values == many.values);
  EXPECT_GE(one.values.minCoeff(), -tol::kPopulationSlack);
  EXPECT_LE(one.values.maxCoeff(), 1.0 + tol::kPopulationSlack);
}

TEST(Map, BareTransmonIsFlatFarFromItsLines) {
  SystemSpec s = testing::bare_transmon();
  s.transmon.gamma = 1e5;
  s.transmon.kappa = 2e6;
  const auto cal = calibrate_pulse_b(s);
  const auto grid = MapGrid::uniform(6.8e9, 7.2e9, 50e6, 0.0, 20e-9, 60);
  const auto map = generate_map(s, cal, grid);
  for (int i = 0; i < map.values.rows(); ++i) {
    const double f = grid.drive_frequencies[static_cast<std::size_t>(i)];
    const double detuning = std::min(std::abs(f - 7e9), std::abs(f - 6.91e9));
    if (detuning < 60e6) continue;
    // Off-resonant ripple is of order (A / detuning)^2.
    const double ripple = std::pow(kDefaultPulseAAmplitude / detuning, 2);
    const auto row = map.values.row(i);
    EXPECT_LT(row.maxCoeff() - row.minCoeff(), 2.0 * ripple) << f;
  }
}

}  // namespace
}  // namespace twotone
