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

using testing::evolution_oracle;
using testing::random_hermitian;
using testing::random_sequence;

TEST(Propagator, MatchesTaylorOracle) {
  std::mt19937_64 rng(1);
  for (int d : {2, 5, 8}) {
    const CMatrix h = random_hermitian(d, rng, 0.7);
    for (double t : {0.0, 0.13, 1.7}) {
      EXPECT_LT(max_abs(propagator(h, t) - evolution_oracle(h, t)), 1e-10) << "d=" << d << " t=" << t;
    }
  }
}

TEST(Propagator, LargeDimensionPathIsUnitary) {
  // Above the LAPACK threshold.
  std::mt19937_64 rng(2);
  const CMatrix h = random_hermitian(160, rng);
  const CMatrix u = propagator(h, 0.37);
  EXPECT_LT(unitarity_defect(u), 1e-9);
  const auto es = hermitian_eigensystem(h);
  EXPECT_LT(max_abs(es.vectors * es.values.asDiagonal() * es.vectors.adjoint() - h), 1e-9);
}

TEST(Propagator, DegenerateSpectrumStaysOrthonormal) {
  // Many exact degeneracies, as for weakly coupled baths.
  std::mt19937_64 rng(3);
  const CMatrix small = random_hermitian(8, rng);
  const CMatrix h = kron(small, CMatrix::Identity(64, 64));
  const auto es = hermitian_eigensystem(h);
  EXPECT_LT(max_abs(es.vectors.adjoint() * es.vectors - CMatrix::Identity(h.rows(), h.rows())), 1e-9);
}

TEST(Propagator, RegisterUnitarity) {
  const CMatrix h = register_hamiltonian(default_register());
  for (double t : {0.001, 1.0, 25.0}) EXPECT_LT(unitarity_defect(propagator(h, t)), 1e-9);
}

TEST(Propagator, RejectsNonHermitian) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(Propagator{h}, Error);
}

TEST(Pulses, RotationIsTheSpinHalfExponential) {
  // exp(-i theta (cos phi sigma_x + sin phi sigma_y) / 2) on the {0, -1} pair.
  CMatrix sx(2, 2), sy(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  for (double theta : {0.3, kPi / 2, kPi, 5.0}) {
    for (double phi : {0.0, 1.1, 4.0}) {
      const CMatrix gen = cplx(0.0, -theta / 2.0) * (std::cos(phi) * sx + std::sin(phi) * sy);
      const CMatrix r = nv_rotation(theta, phi);
      EXPECT_LT(max_abs(r - testing::expm_taylor(gen)), 1e-12);
    }
  }
}

TEST(Pulses, PiPulseTransfersPopulation) {
  const CMatrix r = nv_rotation(kPi, 0.0);
  EXPECT_NEAR(std::norm(r(1, 0)), 1.0, 1e-15);
}

CMatrix explicit_sequence(const CMatrix& h, const PulseSequence& s, const std::vector<int>& dims) {
  CMatrix u = evolution_oracle(h, s.waits_us[0]);
  for (std::size_t k = 0; k < s.pulse_count(); ++k) {
    u = pulse_unitary(s.angles[k], s.phases[k], dims) * u;
    u = evolution_oracle(h, s.waits_us[k + 1]) * u;
  }
  return u;
}

TEST(Sequence, MatchesExplicitProduct) {
  std::mt19937_64 rng(4);
  const auto spec = two_qubit_register();
  const CMatrix h = register_hamiltonian(spec);
  const auto dims = spec.dims();
  for (int k = 0; k < 5; ++k) {
    const auto s = random_sequence(4, rng, 0.8);
    EXPECT_LT(max_abs(sequence_unitary(h, s) - explicit_sequence(h, s, dims)), 1e-8);
  }
}

TEST(Sequence, CoincidentPulsesCompose) {
  const auto spec = two_qubit_register();
  const CMatrix h = register_hamiltonian(spec);
  PulseSequence two;
  two.waits_us = {0.5, 0.0, 0.3};
  two.angles = {0.7, 1.1};
  two.phases = {0.2, 0.2};
  PulseSequence one;
  one.waits_us = {0.5, 0.3};
  one.angles = {1.8};
  one.phases = {0.2};
  EXPECT_LT(max_abs(sequence_unitary(h, two) - sequence_unitary(h, one)), 1e-12);
}

TEST(Sequence, PulseActsBeforeSampleAtTheSameTime) {
  const auto spec = two_qubit_register();
  const CMatrix h = register_hamiltonian(spec);
  PulseSequence s;
  s.waits_us = {1.0, 0.5};
  s.angles = {kPi};
  s.phases = {0.0};
  const CMatrix rho0 = projector(initial_state(spec));
  // Hyperfine mixing leaves |0,up> slightly off an eigenstate, hence the 1e-6.
  const double at[] = {1.0 - 1e-9, 1.0};
  const auto out = evolve_trajectory(rho0, h, s, at);
  EXPECT_NEAR(expectation(out[0], spec, 0, Axis::Z), 0.0, 1e-6);
  EXPECT_NEAR(expectation(out[1], spec, 0, Axis::Z), -1.0, 1e-6);
}

TEST(Trajectory, InvariantsAlongTheWay) {
  std::mt19937_64 rng(5);
  const auto spec = default_register();
  const CMatrix h = register_hamiltonian(spec);
  const CMatrix rho0 = testing::random_density(24, rng);
  const auto s = random_sequence(6, rng, 2.0);
  const auto times = time_grid(0.0, s.duration() + 3.0, 40);
  const auto states = evolve_trajectory(rho0, h, s, times);
  const double purity0 = (rho0 * rho0).trace().real();
  for (const auto& r : states) {
    EXPECT_NEAR(r.trace().real(), 1.0, 1e-10);
    EXPECT_LT(hermiticity_defect(r), 1e-10);
    EXPECT_NEAR((r * r).trace().real(), purity0, 1e-10);
  }
}

TEST(Trajectory, ZeroDurationSequenceWithoutPulsesIsFlatForEigenstates) {
  const auto spec = two_qubit_register();
  const CMatrix h = register_hamiltonian(spec);
  const auto es = hermitian_eigensystem(h);
  const CMatrix rho0 = projector(es.vectors.col(2));
  PulseSequence s;
  s.waits_us = {0.0};
  const auto times = time_grid(0.0, 5.0, 11);
  for (const auto& r : evolve_trajectory(rho0, h, s, times)) EXPECT_LT(max_abs(r - rho0), 1e-10);
}

TEST(Trajectory, RejectsUnsortedTimes) {
  const auto spec = two_qubit_register();
  const CMatrix h = register_hamiltonian(spec);
  PulseSequence s;
  s.waits_us = {0.0};
  const double times[] = {1.0, 0.5};
  EXPECT_THROW(evolve_trajectory(projector(initial_state(spec)), h, s, times), Error);
}

TEST(Sequence, ValidationRejectsMalformedTables) {
  PulseSequence s;
  s.waits_us = {0.1, 0.2};
  s.angles = {1.0, 2.0};
  s.phases = {0.0, 0.0};
  EXPECT_THROW(s.validate(), Error);
  s.waits_us = {0.1, -0.2, 0.3};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Ensemble, DensityRoundTrip) {
  std::mt19937_64 rng(6);
  const CMatrix rho = testing::random_density(6, rng);
  const auto e = ensemble_from_density(rho);
  CMatrix back = CMatrix::Zero(6, 6);
  for (Eigen::Index j = 0; j < e.columns.cols(); ++j) {
    back += e.weights[static_cast<std::size_t>(j)] * e.columns.col(j) * e.columns.col(j).adjoint();
  }
  EXPECT_LT(max_abs(back - rho), 1e-12);
}

TEST(Ensemble, PartialTraceOfProduct) {
  std::mt19937_64 rng(7);
  const CMatrix a = testing::random_density(3, rng);
  const CMatrix b = testing::random_density(4, rng);
  EXPECT_LT(max_abs(trace_out_trailing(kron(a, b), 4) - a), 1e-12);
  const auto e = ensemble_from_density(kron(a, b));
  EXPECT_LT(max_abs(reduce_ensemble(e.columns, e.weights, 4) - a), 1e-12);
}

TEST(TimeGrid, EndpointsIncluded) {
  const auto g = time_grid(0.0, 2.0, 5);
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
}

}  // namespace
}  // namespace nvreg
