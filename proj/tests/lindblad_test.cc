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

#include "twotone/lindblad.hpp"

#include <gtest/gtest.h>

#include <random>
#include <thread>
#include <vector>

#include "test_support.hpp"
#include "twotone/protocol.hpp"

namespace twotone {
namespace {

using testing::max_abs;
using testing::reference_spec;

// Random Lindblad generator on a d-level space: random Hermitian H plus
// two random jump operators, scaled to unit-order rates.
Liouvillian random_liouvillian(int d, std::mt19937_64& rng) {
  Matrix gen = commutator_superop(testing::random_hermitian(d, rng));
  for (int j = 0; j < 2; ++j) gen += 0.3 * dissipator(testing::random_matrix(d, rng));
  return Liouvillian(gen);
}

SystemSpec two_level(double gamma, double kappa) {
  SystemSpec s;
  s.transmon = {5e6, 100e6, gamma, kappa, 2};
  return s;
}

TEST(Vectorize, ColumnStacking) {
  const Matrix half = 0.5 * Matrix::Identity(2, 2);
  const Vector v = vectorize(half);
  ASSERT_EQ(v.size(), 4);
  EXPECT_EQ(v(0), Complex(0.5));
  EXPECT_EQ(v(1), Complex(0.0));
  EXPECT_EQ(v(2), Complex(0.0));
  EXPECT_EQ(v(3), Complex(0.5));
  Matrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const Vector w = vectorize(m);
  EXPECT_EQ(w(1), Complex(3.0));
  EXPECT_EQ(w(2), Complex(2.0));
}

TEST(Vectorize, RoundTripIsExact) {
  std::mt19937_64 rng(7);
  for (int d : {1, 3, 6, 12}) {
    const Matrix h = testing::random_hermitian(d, rng);
    EXPECT_TRUE(devectorize(vectorize(h)) == h);
  }
}

TEST(Vectorize, InnerProductIsTrace) {
  std::mt19937_64 rng(11);
  const auto s = reference_spec();
  const Matrix p = qubit_projector(s);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix rho = testing::random_density(6, rng);
    const Complex direct = (p * rho).trace();
    const Complex inner = vectorize(p).dot(vectorize(rho));  // conjugates the first
    EXPECT_NEAR(std::abs(direct - inner), 0.0, 1e-14);
  }
}

TEST(Vectorize, RejectsBadShapes) {
  EXPECT_THROW(vectorize(Matrix::Zero(2, 3)), DimensionError);
  EXPECT_THROW(devectorize(Vector::Zero(5)), DimensionError);
}

TEST(Sandwich, IdentityMapsToIdentity) {
  const Matrix id = Matrix::Identity(3, 3);
  EXPECT_EQ(max_abs(sandwich_superop(id, id) - Matrix::Identity(9, 9)), 0.0);
}

TEST(Sandwich, MatchesDirectProduct) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix o1 = testing::random_matrix(3, rng);
    const Matrix o2 = testing::random_matrix(3, rng);
    const Matrix rho = testing::random_matrix(3, rng);
    const Vector lhs = sandwich_superop(o1, o2) * vectorize(rho);
    const Vector rhs = vectorize(o1 * rho * o2);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sandwich, RightIdentityIsBlockDiagonal) {
  std::mt19937_64 rng(5);
  const Matrix o1 = testing::random_matrix(3, rng);
  const Matrix expected = testing::kron_oracle(Matrix::Identity(3, 3), o1);
  EXPECT_EQ(max_abs(sandwich_superop(o1, Matrix::Identity(3, 3)) - expected), 0.0);
}

TEST(Sandwich, RejectsMismatch) {
  EXPECT_THROW(sandwich_superop(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

TEST(Liouvillian, RejectsNonHermitianHamiltonian) {
  const auto s = reference_spec();
  Matrix h = hamiltonian_static(s);
  h(0, 1) += Complex(0.0, 1e3);
  EXPECT_THROW(liouvillian(s, h), ValidationError);
}

TEST(Liouvillian, TracePreserving) {
  const auto s = reference_spec();
  const auto ops = build_operators(s);
  for (double wd : {6.9e9, 7.07e9, 7.2e9}) {
    const auto l = liouvillian(s, hamiltonian_rwa(s, {kDefaultPulseAAmplitude, wd, 0.0}, ops), ops);
    EXPECT_LT(l.trace_defect(), tol::kTracePreserving);
  }
}

TEST(Liouvillian, EigenstatesAreStationaryWithoutDecoherence) {
  const auto s = without_decoherence(reference_spec());
  const Matrix h = hamiltonian_static(s);
  const auto l = liouvillian(s, h);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  for (int i = 0; i < h.rows(); ++i) {
    const Vector psi = es.eigenvectors().col(i);
    const Matrix proj = psi * psi.adjoint();
    EXPECT_LT((l.matrix() * vectorize(proj)).cwiseAbs().maxCoeff(), 1e-3);  // rad/s scale ~1e10
  }
}

TEST(Liouvillian, AmplitudeDampingDecay) {
  const double gamma = 2e5;
  const auto s = two_level(gamma, 0.0);
  const auto l = liouvillian(s, hamiltonian_static(s));
  Matrix rho = Matrix::Zero(2, 2);
  rho(1, 1) = 1.0;
  for (double t : {0.5e-6, 3e-6, 10e-6}) {
    const Matrix out = devectorize(propagator(l, t) * vectorize(rho));
    EXPECT_NEAR(out(1, 1).real(), std::exp(-gamma * t), 1e-12);
    EXPECT_NEAR(out(0, 0).real(), 1.0 - std::exp(-gamma * t), 1e-12);
  }
}

TEST(Liouvillian, PureDephasingDecay) {
  const double kappa = 3e5;
  SystemSpec s = testing::bare_transmon(3);
  s.transmon.kappa = kappa;
  const auto l = liouvillian(s, hamiltonian_static(s));
  Matrix rho = Matrix::Constant(3, 3, Complex(1.0 / 3.0));
  for (double t : {0.7e-6, 4e-6}) {
    const Matrix out = devectorize(propagator(l, t) * vectorize(rho));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(out(i, i).real(), 1.0 / 3.0, 1e-12);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double dn = i - j;
        EXPECT_NEAR(std::abs(out(i, j)), std::exp(-0.5 * kappa * t * dn * dn) / 3.0, 1e-10);
      }
    }
  }
}

TEST(Propagator, ZeroTimeIsIdentity) {
  const auto s = reference_spec();
  const auto l = liouvillian(s, hamiltonian_static(s));
  EXPECT_EQ(max_abs(propagator(l, 0.0) - Matrix::Identity(36, 36)), 0.0);
  EXPECT_THROW(propagator(l, -1e-9), ValidationError);
}

TEST(Propagator, SemigroupProperty) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto l = random_liouvillian(3, rng);
    const Matrix lhs = propagator(l, 0.3) * propagator(l, 0.45);
    EXPECT_LT(max_abs(lhs - propagator(l, 0.75)), 1e-9);
  }
}

TEST(Propagator, MatchesTaylorOracle) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    const auto l = random_liouvillian(3, rng);
    const auto p = propagate(l, 0.8);
    EXPECT_EQ(p.method, PropagatorMethod::kEigendecomposition);
    EXPECT_LT(max_abs(p.matrix - testing::taylor_expm(0.8 * l.matrix())), 1e-8);
  }
}

TEST(Propagator, PathsAgreeOnWellConditionedInput) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto l = random_liouvillian(3, rng);
    EXPECT_LT(max_abs(expm_eigen(l, 1.1) - expm_scaling_squaring(l.matrix(), 1.1)), 1e-9);
  }
}

TEST(Propagator, DefectiveGeneratorFallsBack) {
  // Nilpotent Jordan block: not diagonalizable.
  Matrix n = Matrix::Zero(4, 4);
  n(0, 1) = n(1, 2) = n(2, 3) = 1.0;
  const Liouvillian l(n);
  const double t = 0.7;
  const auto p = propagate(l, t);
  EXPECT_EQ(p.method, PropagatorMethod::kScalingSquaring);
  const Matrix expected =
      Matrix::Identity(4, 4) + t * n + (t * t / 2.0) * n * n + (t * t * t / 6.0) * n * n * n;
  EXPECT_LT(max_abs(p.matrix - expected), 1e-12);
}

TEST(Propagator, ForcedFallbackMatchesEigenPath) {
  const auto s = reference_spec();
  const auto l = liouvillian(s, hamiltonian_rwa(s, {kDefaultPulseAAmplitude, 7.09e9, 0.0}));
  const auto fast = propagate(l, 10e-9);
  const auto slow = propagate(l, 10e-9, 0.0);
  EXPECT_EQ(fast.method, PropagatorMethod::kEigendecomposition);
  EXPECT_EQ(slow.method, PropagatorMethod::kScalingSquaring);
  EXPECT_LT(max_abs(fast.matrix - slow.matrix), 1e-9);
}

TEST(Propagator, UnitaryChannelWithoutDecoherence) {
  std::mt19937_64 rng(8);
  const auto s = without_decoherence(reference_spec());
  const Matrix h = hamiltonian_rwa(s, {12e6, 7.05e9, 0.0});
  const auto l = liouvillian(s, h);
  const Matrix rho = testing::random_density(6, rng);
  for (double t : {13e-9, 250e-9}) {
    const Matrix u = testing::unitary(h, t);
    const Matrix out = devectorize(propagator(l, t) * vectorize(rho));
    EXPECT_LT(max_abs(out - u * rho * u.adjoint()), 1e-9);
  }
}

TEST(Propagator, ConcurrentEigensystemAccess) {
  const auto s = reference_spec();
  const auto l = liouvillian(s, hamiltonian_rwa(s, {kDefaultPulseAAmplitude, 7.09e9, 0.0}));
  std::vector<Matrix> results(4);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 4; ++i) pool.emplace_back([&, i] { results[i] = propagator(l, 20e-9); });
  }
  for (int i = 1; i < 4; ++i) EXPECT_TRUE(results[i] == results[0]);
}

TEST(Physicality, LongEvolutionStaysPhysical) {
  const auto s = reference_spec();
  const auto ops = build_operators(s);
  const auto l = liouvillian(s, hamiltonian_rwa(s, {kDefaultPulseAAmplitude, 7.0911e9, 0.0}, ops), ops);
  const Matrix step = propagator(l, 1e-6);
  Vector v = vectorize(ground_state(s));
  for (int n = 1; n <= 100; ++n) {
    v = step * v;
    const auto p = check_physical(devectorize(v));
    ASSERT_LT(p.trace_error, 1e-9) << n;
    ASSERT_LT(p.hermiticity_error, 1e-9) << n;
    ASSERT_GT(p.min_eigenvalue, -1e-9) << n;
  }
  const Matrix direct = devectorize(propagator(l, 100e-6) * vectorize(ground_state(s)));
  EXPECT_LT(std::abs(direct.trace() - Complex(1.0)), 1e-9);
}

TEST(SteadyState, UndrivenDissipativeRelaxesToGround) {
  const auto s = reference_spec();
  const auto rho = steady_state(liouvillian(s, hamiltonian_static(s)));
  EXPECT_LT(max_abs(rho - ground_state(s)), 1e-9);
}

TEST(SteadyState, TwoLevelSaturation) {
  const double gamma = 1e6, kappa = 4e5;
  const auto s = two_level(gamma, kappa);
  const double a = 0.2e6, wd = 5e6 + 0.15e6;
  const auto rho = steady_state(liouvillian(s, hamiltonian_rwa(s, {a, wd, 0.0})));
  // Resonant-drive saturation: s = Omega^2 g2 / (gamma (delta^2 + g2^2)), P_e = s / (2 (1 + s)).
  const double omega = angular(a), delta = angular(5e6 - wd), g2 = 0.5 * (gamma + kappa);
  const double sat = omega * omega * g2 / (gamma * (delta * delta + g2 * g2));
  EXPECT_NEAR(rho(1, 1).real(), sat / (2.0 * (1.0 + sat)), 1e-9);
  EXPECT_TRUE(check_physical(rho).ok());
}

TEST(SteadyState, DegenerateKernelIsReported) {
  const auto s = without_decoherence(reference_spec());
  EXPECT_THROW(steady_state(liouvillian(s, hamiltonian_static(s))), DegenerateKernelError);
}

TEST(SteadyState, AgreesWithLongPropagation) {
  const auto s = reference_spec();
  const auto ops = build_operators(s);
  const auto l = liouvillian(s, hamiltonian_rwa(s, {kDefaultPulseAAmplitude, 7.0911e9, 0.0}, ops), ops);
  const double p_ss = qubit_population(steady_state(l), s);
  const double p_t = qubit_population(devectorize(propagator(l, 200e-6) * vectorize(ground_state(s))), s);
  EXPECT_NEAR(p_t, p_ss, 0.01 * p_ss);
}

}  // namespace
}  // namespace twotone
