// Copyright 2026 The nvreg Authors
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

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace nvreg {
namespace {

const std::vector<int> kQubits{2, 2};
const int kSecond[] = {1};

CMatrix bell() {
  CVector v = CVector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return projector(v);
}

TEST(LogNegativity, ProductStatesAreZero) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const CMatrix rho = kron(testing::random_density(2, rng), testing::random_density(2, rng));
    EXPECT_NEAR(log_negativity(rho, kQubits, kSecond), 0.0, 1e-12);
    const CMatrix pure = projector(kron(testing::random_state(2, rng), testing::random_state(3, rng)));
    const std::vector<int> dims{2, 3};
    EXPECT_NEAR(log_negativity(pure, dims, kSecond), 0.0, 1e-12);
  }
}

TEST(LogNegativity, BellStateIsOne) {
  EXPECT_NEAR(log_negativity(bell(), kQubits, kSecond), 1.0, 1e-12);
  const int first[] = {0};
  EXPECT_NEAR(log_negativity(bell(), kQubits, first), 1.0, 1e-12);
}

TEST(LogNegativity, MaximallyMixedIsZero) {
  EXPECT_NEAR(log_negativity(CMatrix::Identity(4, 4) / 4.0, kQubits, kSecond), 0.0, 1e-12);
}

TEST(LogNegativity, InvariantUnderLocalUnitaries) {
  std::mt19937_64 rng(2);
  const std::vector<int> dims{2, 2, 3};
  const int c1[] = {1};
  for (int k = 0; k < 10; ++k) {
    const CMatrix rho = testing::random_density(12, rng);
    // Local to the partition {factor 1} | {factors 0, 2}.
    const CMatrix ua = testing::random_unitary(2, rng);
    const CMatrix ub = testing::random_unitary(2, rng);
    const CMatrix uc = testing::random_unitary(3, rng);
    const CMatrix u = kron(kron(ua, ub), uc);
    EXPECT_NEAR(log_negativity(u * rho * u.adjoint(), dims, c1), log_negativity(rho, dims, c1), 1e-8);
  }
}

TEST(PartialTranspose, InvolutionAndTraceNormBound) {
  std::mt19937_64 rng(3);
  const std::vector<int> dims{2, 3, 2};
  const int sub[] = {0, 2};
  for (int k = 0; k < 5; ++k) {
    const CMatrix rho = testing::random_density(12, rng);
    EXPECT_LT(max_abs(partial_transpose(partial_transpose(rho, dims, sub), dims, sub) - rho), 1e-15);
    const CMatrix pt = partial_transpose(rho, dims, sub);
    EXPECT_GE(trace_norm_hermitian(pt) + 1e-12, std::abs(pt.trace()));
  }
}

TEST(PartialTranspose, FullTransposeIsTranspose) {
  std::mt19937_64 rng(4);
  const CMatrix rho = testing::random_density(4, rng);
  const int both[] = {0, 1};
  EXPECT_LT(max_abs(partial_transpose(rho, kQubits, both) - rho.transpose()), 1e-15);
}

TEST(Fidelity, TrivialCases) {
  std::mt19937_64 rng(5);
  const CVector a = testing::random_state(4, rng);
  EXPECT_NEAR(process_fidelity(projector(a), projector(a)), 1.0, 1e-12);
  CVector e0 = CVector::Zero(4), e1 = CVector::Zero(4);
  e0(0) = 1.0;
  e1(1) = 1.0;
  EXPECT_NEAR(process_fidelity(projector(e0), projector(e1)), 0.0, 1e-15);
  EXPECT_NEAR(bath_fidelity(projector(a), projector(a)), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(full_fidelity(0.9, 0.5), 0.45);
}

TEST(Fidelity, DephasedSuperpositionGivesOneHalf) {
  CVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const CMatrix dephased = CMatrix::Identity(2, 2) / 2.0;
  EXPECT_NEAR(bath_fidelity(dephased, projector(plus)), 0.5, 1e-15);
}

TEST(Fidelity, InvariantUnderGlobalUnitaries) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const CMatrix rho = testing::random_density(6, rng);
    const CMatrix target = projector(testing::random_state(6, rng));
    const CMatrix u = testing::random_unitary(6, rng);
    EXPECT_NEAR(process_fidelity(u * rho * u.adjoint(), u * target * u.adjoint()), process_fidelity(rho, target),
                1e-9);
  }
}

TEST(Fidelity, RejectsZeroReferenceAndMismatch) {
  EXPECT_THROW(process_fidelity(CMatrix::Identity(2, 2), CMatrix::Zero(2, 2)), Error);
  EXPECT_THROW(bath_fidelity(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)), Error);
}

TEST(Expectation, RegisterSpinComponents) {
  const auto spec = two_qubit_register();
  EXPECT_NEAR(expectation(projector(product_state(spec, {0, 0})), spec, 0, Axis::Z), 0.0, 1e-15);
  EXPECT_NEAR(expectation(projector(product_state(spec, {1, 0})), spec, 0, Axis::Z), -1.0, 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  const CVector plus_x = r * (product_state(spec, {0, 0}) + product_state(spec, {0, 1}));
  EXPECT_NEAR(expectation(projector(plus_x), spec, 1, Axis::X), 0.5, 1e-15);
  EXPECT_NEAR(expectation(projector(plus_x), spec, 1, Axis::Z), 0.0, 1e-15);
  EXPECT_THROW(expectation(projector(plus_x), spec, 2, Axis::Z), Error);
}

TEST(Presets, TargetsAreNormalisedAndEntangled) {
  const auto two = two_qubit_register();
  const auto full = default_register();
  const CVector b2 = target_state("bell2", two);
  EXPECT_NEAR(b2.norm(), 1.0, 1e-15);
  EXPECT_NEAR(log_negativity(projector(b2), two.dims(), kSecond), 1.0, 1e-12);
  for (const char* name : {"ghz", "bell13c"}) {
    const CVector t = target_state(name, full);
    EXPECT_NEAR(t.norm(), 1.0, 1e-15);
    const int c1[] = {1};
    EXPECT_NEAR(log_negativity(projector(t), full.dims(), c1), 1.0, 1e-12) << name;
  }
  EXPECT_THROW(target_state("ghz", two), Error);
  EXPECT_THROW(target_state("bell2", full), Error);
  EXPECT_THROW(target_state("w", full), Error);
}

TEST(Presets, TableSequencesAreWellFormed) {
  for (const char* name : {"bell2", "ghz", "bell13c"}) {
    const auto s = preset_sequence(name);
    s.validate();
    EXPECT_EQ(s.pulse_count(), std::string(name) == "bell2" ? 4u : 8u);
  }
  EXPECT_NEAR(preset_sequence("bell2").duration(), 7.1, 1e-12);
  EXPECT_THROW(preset_sequence("nope"), Error);
}

}  // namespace
}  // namespace nvreg
