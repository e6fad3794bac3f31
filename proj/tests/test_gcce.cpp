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

double max_deviation(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs(a[i] - b[i]));
  return m;
}

// Spins a few nm from the register so every coupling matters on a us scale.
BathRealization near_bath(std::size_t n, const RegisterSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_realization(sample_shell_positions(ShellSpec{2.0, 4.0, 0.0}, n, rng), spec);
}

BathRealization zz_bath(const RegisterSpec& spec, double kzz_khz) {
  BathRealization b;
  b.positions_nm = {Vec3(40.0, 0.0, 0.0)};
  b.to_register.assign(spec.species.size(), std::vector<CouplingTensor>(1));
  b.to_register[0][0].khz(2, 2) = kzz_khz;
  b.bath_pairs.assign(1, CouplingTensor{});
  return b;
}

TEST(Gcce, FirstOrderIsExactForOneSpin) {
  std::mt19937_64 rng(11);
  for (const auto& spec : {two_qubit_register(), default_register()}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto bath = near_bath(1, spec, 100 + trial);
      const CMatrix rho0 = projector(testing::random_state(static_cast<Eigen::Index>(spec.dimension()), rng));
      const auto seq = testing::random_sequence(4, rng);
      const auto times = time_grid(0.0, 8.0, 9);
      const auto exact = exact_evolve(rho0, spec, bath, seq, {}, times);
      const auto g1 = gcce1(rho0, spec, bath, seq, {}, 0, times);
      EXPECT_EQ(g1.guarded_elements, 0u);
      EXPECT_LT(max_deviation(g1.states, exact), 1e-8);
    }
  }
}

TEST(Gcce, FullClusterExpansionIsExactForSmallBaths) {
  std::mt19937_64 rng(12);
  const auto spec = default_register();
  for (std::size_t n : {2u, 3u}) {
    const auto bath = near_bath(n, spec, 200 + n);
    const CMatrix rho0 = projector(testing::random_state(static_cast<Eigen::Index>(spec.dimension()), rng));
    const auto seq = testing::random_sequence(3, rng);
    const auto times = time_grid(0.0, 6.0, 7);
    const auto exact = exact_evolve(rho0, spec, bath, seq, {}, times);
    const auto full = gcce_general(rho0, spec, bath, seq, {}, all_clusters_up_to(n, n), 0, times);
    EXPECT_LT(max_deviation(full.states, exact), 1e-8) << n << " spins";
  }
}

TEST(Gcce, SecondOrderWithAllPairsIsExactForTwoSpins) {
  std::mt19937_64 rng(13);
  const auto spec = two_qubit_register();
  const auto bath = near_bath(2, spec, 300);
  const CMatrix rho0 = projector(initial_state(spec));
  const auto seq = testing::random_sequence(4, rng);
  const auto times = time_grid(0.0, 8.0, 5);
  const auto exact = exact_evolve(rho0, spec, bath, seq, {}, times);
  ClusterSet pairs;
  pairs.clusters = {{0, 1}};
  const auto g2 = gcce2(rho0, spec, bath, seq, {}, pairs, 0, times);
  EXPECT_LT(max_deviation(g2.states, exact), 1e-8);
}

TEST(Gcce, SingleZzSpinGivesCosineCoherence) {
  const auto spec = testing::nv_only_register();
  const double kzz_khz = 350.0;
  const auto bath = zz_bath(spec, kzz_khz);
  const double r = 1.0 / std::sqrt(2.0);
  CVector plus(2);
  plus << r, r;
  const CMatrix rho0 = projector(plus);
  PulseSequence free;
  free.waits_us = {0.0};
  const auto times = time_grid(0.0, 10.0, 101);
  const auto exact = exact_evolve(rho0, spec, bath, free, {}, times);
  const auto g0 = gcce0(rho0, spec, bath, free, {}, 0, times);
  const auto g1 = gcce1(rho0, spec, bath, free, {}, 0, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = 0.5 * std::abs(std::cos(kPi * kzz_khz * 1e-3 * times[i]));
    EXPECT_NEAR(std::abs(exact[i](0, 1)), expected, 1e-6) << "t=" << times[i];
    EXPECT_NEAR(std::abs(g0.states[i](0, 1)), expected, 1e-6) << "t=" << times[i];
    EXPECT_NEAR(std::abs(g1.states[i](0, 1)), expected, 1e-6) << "t=" << times[i];
  }
}

TEST(Gcce, MeanFieldPreservesTraceAndHermiticity) {
  std::mt19937_64 rng(14);
  const auto spec = default_register();
  const auto bath = near_bath(5, spec, 400);
  const auto seq = testing::random_sequence(6, rng);
  const auto times = time_grid(0.0, 10.0, 6);
  const auto g0 = gcce0(projector(initial_state(spec)), spec, bath, seq, {}, 0, times);
  EXPECT_TRUE(g0.enumerated);
  EXPECT_EQ(g0.bath_states, 32u);
  EXPECT_LT(g0.max_trace_drift(), 1e-12);
  for (const auto& s : g0.states) EXPECT_LT(max_abs(s - s.adjoint()), 1e-12);
}

TEST(Gcce, SampledRunsAreReproducibleAndThreadIndependent) {
  std::mt19937_64 rng(15);
  const auto spec = two_qubit_register();
  const auto bath = near_bath(12, spec, 500);
  const auto seq = testing::random_sequence(3, rng);
  const auto times = time_grid(0.0, 5.0, 3);
  GcceConfig cfg;
  cfg.samples = 16;
  const CMatrix rho0 = projector(initial_state(spec));
  const auto a = gcce1(rho0, spec, bath, seq, cfg, 99, times);
  cfg.jobs = 3;
  const auto b = gcce1(rho0, spec, bath, seq, cfg, 99, times);
  const auto c = gcce1(rho0, spec, bath, seq, cfg, 100, times);
  EXPECT_FALSE(a.enumerated);
  EXPECT_EQ(a.bath_states, 16u);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(max_abs(a.states[i] - b.states[i]), 0.0);
  EXPECT_GT(max_abs(a.states.back() - c.states.back()), 0.0);
}

TEST(Gcce, OrderDispatch) {
  std::mt19937_64 rng(16);
  const auto spec = two_qubit_register();
  const auto bath = near_bath(3, spec, 600);
  const auto seq = testing::random_sequence(2, rng);
  const auto times = time_grid(0.0, 4.0, 3);
  const CMatrix rho0 = projector(initial_state(spec));
  GcceConfig cfg;
  cfg.order = 3;
  const auto exact = exact_evolve(rho0, spec, bath, seq, {}, times);
  EXPECT_LT(max_deviation(gcce_by_order(rho0, spec, bath, seq, cfg, 0, times).states, exact), 1e-8);
  cfg.order = -1;
  EXPECT_THROW(gcce_by_order(rho0, spec, bath, seq, cfg, 0, times), Error);
}

TEST(ClusterSets, PairSelectionUsesBothDistances) {
  const auto spec = two_qubit_register();
  const auto bath = make_realization(
      {Vec3(40, 0, 0), Vec3(50, 0, 0), Vec3(0, 45, 0), Vec3(0, 80, 0), Vec3(0, 85, 0)}, spec);
  const auto pairs = select_pairs(bath, 60.0, 15.0);
  ASSERT_EQ(pairs.clusters.size(), 1u);
  EXPECT_EQ(pairs.clusters[0], (Cluster{0, 1}));
  EXPECT_EQ(select_pairs(bath, 100.0, 15.0).clusters.size(), 2u);
  EXPECT_THROW(select_pairs(bath, 10.0, 15.0), Error);
}

TEST(ClusterSets, Validation) {
  ClusterSet s;
  s.clusters = {{0}, {1}, {0, 1}};
  EXPECT_NO_THROW(validate_cluster_set(s, 2, true));
  s.clusters = {{0}, {0, 1}};
  EXPECT_THROW(validate_cluster_set(s, 2, true), Error);
  EXPECT_NO_THROW(validate_cluster_set(s, 2, false));
  s.clusters = {{0}, {0}};
  EXPECT_THROW(validate_cluster_set(s, 2, false), Error);
  s.clusters = {{2}};
  EXPECT_THROW(validate_cluster_set(s, 2, false), Error);
  EXPECT_EQ(all_clusters_up_to(4, 2).clusters.size(), 10u);
  EXPECT_EQ(all_clusters_up_to(3, 3).clusters.back(), (Cluster{0, 1, 2}));
}

TEST(ClusterSets, GuardedRatioFloorsTinyDenominators) {
  CMatrix num(1, 3), den(1, 3);
  num << 2.0, 3.0, 5.0;
  den << 4.0, 1e-14, cplx(0.0, 1.0);
  std::size_t guarded = 0;
  const CMatrix r = detail::guarded_ratio(num, den, 1e-10, &guarded);
  EXPECT_EQ(guarded, 1u);
  EXPECT_NEAR(std::abs(r(0) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(r(1) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(r(2) - cplx(0.0, -5.0)), 0.0, 1e-15);
}

TEST(ClusterSets, ConfigValidation) {
  GcceConfig c;
  c.samples = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.pair_d1_nm = 10.0;
  c.pair_d2_nm = 20.0;
  EXPECT_THROW(c.validate(), Error);
}

}  // namespace
}  // namespace nvreg
