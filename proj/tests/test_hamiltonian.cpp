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

#include <sstream>

#include "test_util.hpp"

namespace nvreg {
namespace {

TEST(RegisterHamiltonian, Hermitian) {
  EXPECT_LT(hermiticity_defect(register_hamiltonian(default_register())), 1e-12);
  EXPECT_LT(hermiticity_defect(register_hamiltonian(two_qubit_register())), 1e-12);
}

TEST(RegisterHamiltonian, TwoQubitMatchesExplicitFormula) {
  const PhysicalConstants c;
  const CMatrix a = register_hamiltonian(two_qubit_register(c));
  const CMatrix b = two_qubit_hamiltonian(c, carbon1_hyperfine());
  EXPECT_LT(max_abs(a - b), 1e-12);
}

TEST(RegisterHamiltonian, TwoQubitIsTheNitrogenProjection) {
  // {NV, C1, N} with only the secular N_zz coupling; the m_N = +1 block equals the
  // two-qubit Hamiltonian up to the constant nitrogen energy.
  const PhysicalConstants c;
  RegisterSpec spec;
  spec.constants = c;
  spec.species = {{1.0, SpinKind::NVElectron, Vec3::Zero()},
                  {0.5, SpinKind::Carbon13, kCarbon1PositionNm},
                  {1.0, SpinKind::NitrogenNuclear, kNitrogenPositionNm}};
  spec.tensors[{0, 1}] = carbon1_hyperfine();
  CouplingTensor n;
  n.khz(2, 2) = c.nitrogen_zz_effective_mhz * 1e3;
  spec.tensors[{0, 2}] = n;
  const CMatrix h = register_hamiltonian(spec);
  ASSERT_EQ(h.rows(), 12);
  CMatrix block(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) block(i, j) = h(3 * i, 3 * j);
  }
  const double nitrogen = c.nitrogen_zfs_mhz - c.nitrogen_g_khz_per_gauss * 1e-3 * c.field_gauss;
  block -= nitrogen * CMatrix::Identity(4, 4);
  EXPECT_LT(max_abs(block - two_qubit_hamiltonian(c, carbon1_hyperfine())), 1e-12);
  // No coupling out of the m_N = +1 sector.
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      if ((i % 3 == 0) != (j % 3 == 0)) EXPECT_EQ(h(i, j), cplx{}) << i << "," << j;
    }
  }
}

TEST(RegisterHamiltonian, DiagonalElements) {
  // |0,up>: only the carbon Zeeman and nothing from S_z.
  const PhysicalConstants c;
  const CMatrix h = register_hamiltonian(two_qubit_register(c));
  const double carbon = -c.carbon_g_khz_per_gauss * 1e-3 * c.field_gauss;
  EXPECT_NEAR(h(0, 0).real(), 0.5 * carbon, 1e-12);
  // |-1,down>: D + g_e B - N_zz + A_zz/2 - Zeeman/2.
  const double expected = c.zero_field_splitting_mhz + c.electron_g_mhz_per_gauss * c.field_gauss -
                          c.nitrogen_zz_effective_mhz + (-1.0) * (-0.5) * (-144.6e-3) - 0.5 * carbon;
  EXPECT_NEAR(h(3, 3).real(), expected, 1e-12);
}

TEST(RegisterHamiltonian, DimensionGuard) {
  RegisterSpec spec = two_qubit_register();
  for (int k = 0; k < 12; ++k) spec.species.push_back({0.5, SpinKind::Carbon13, Vec3(1.0 + k, 0.0, 0.0)});
  EXPECT_THROW(register_hamiltonian(spec), GuardViolation);
}

TEST(MeanField, ShiftIsTheZzFieldTimesSz) {
  const auto spec = default_register();
  std::mt19937_64 rng(2);
  const auto bath = make_realization(sample_shell_positions(ShellSpec{30.0, 60.0, 0.0}, 5, rng), spec);
  const auto sample = sample_bath_state(bath.size(), rng);
  const CMatrix h = meanfield_hamiltonian(spec, bath, sample);
  CMatrix oracle = register_hamiltonian(spec);
  const auto dims = spec.dims();
  for (std::size_t r = 0; r < spec.species.size(); ++r) {
    double field = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) field += bath.coupling(r, j).khz(2, 2) * 1e-3 * sample.values[j];
    oracle += field * embed(spec.operators(r).z, r, dims);
  }
  EXPECT_LT(max_abs(h - oracle), 1e-12);
}

TEST(ClusterHamiltonian, WholeBathClusterEqualsFullHamiltonian) {
  // Independent assembly paths: cluster builder vs exact builder.
  const auto spec = two_qubit_register();
  std::mt19937_64 rng(6);
  const auto bath = make_realization(sample_shell_positions(ShellSpec{30.0, 60.0, 0.0}, 3, rng), spec);
  const auto sample = sample_bath_state(3, rng);
  const std::vector<std::size_t> all{0, 1, 2};
  EXPECT_LT(max_abs(cluster_hamiltonian(spec, bath, all, sample) - full_hamiltonian(spec, bath)), 1e-12);
}

TEST(ClusterHamiltonian, OutsideSpinsActAsStaticFields) {
  // For a one-spin cluster, the diagonal block of the spectator-free Hamiltonian
  // plus explicit z-fields from the spectator reproduces the cluster Hamiltonian.
  const auto spec = two_qubit_register();
  const auto& c = spec.constants;
  const auto bath = make_realization({Vec3(35.0, 0.0, 5.0), Vec3(-10.0, 40.0, 0.0)}, spec);
  BathStateSample sample;
  sample.values = {0.5, -0.5};
  const std::vector<std::size_t> cluster{0};
  const CMatrix h = cluster_hamiltonian(spec, bath, cluster, sample);

  const auto dims = std::vector<int>{2, 2, 2};
  CMatrix oracle = kron(register_hamiltonian(spec), CMatrix::Identity(2, 2));
  const auto e = spin_operators(0.5);
  oracle += -c.electron_g_mhz_per_gauss * c.field_gauss * embed(e.z, 2, dims);
  for (std::size_t r = 0; r < 2; ++r) {
    const auto ops = spec.operators(r);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        oracle += bath.coupling(r, 0).khz(a, b) * 1e-3 * embed(ops[a], r, dims) * embed(e[b], 2, dims);
      }
    }
    oracle += bath.coupling(r, 1).khz(2, 2) * 1e-3 * (-0.5) * embed(ops.z, r, dims);
  }
  oracle += bath.pair(0, 1).khz(2, 2) * 1e-3 * (-0.5) * embed(e.z, 2, dims);
  EXPECT_LT(max_abs(h - oracle), 1e-12);
}

TEST(ClusterHamiltonian, RejectsMalformedClusters) {
  const auto spec = two_qubit_register();
  const auto bath = make_realization({Vec3(35.0, 0.0, 5.0), Vec3(-10.0, 40.0, 0.0)}, spec);
  BathStateSample sample;
  sample.values = {0.5, -0.5};
  const std::vector<std::size_t> out_of_range{2}, repeated{1, 1}, unsorted{1, 0};
  EXPECT_THROW(cluster_hamiltonian(spec, bath, out_of_range, sample), Error);
  EXPECT_THROW(cluster_hamiltonian(spec, bath, repeated, sample), Error);
  EXPECT_THROW(cluster_hamiltonian(spec, bath, unsorted, sample), Error);
  BathStateSample short_sample;
  short_sample.values = {0.5};
  const std::vector<std::size_t> one{0};
  EXPECT_THROW(cluster_hamiltonian(spec, bath, one, short_sample), Error);
}

TEST(HamiltonianCsv, ListsNonZeroElements) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 1) = cplx(0.5, -0.25);
  h(1, 0) = cplx(0.5, 0.25);
  std::ostringstream os;
  write_hamiltonian_csv(os, h);
  EXPECT_EQ(os.str(), "row,col,re,im\n1,0,0.5,0.25\n0,1,0.5,-0.25\n");
}

}  // namespace
}  // namespace nvreg
