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

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "nvreg/bath.hpp"
#include "nvreg/evolution.hpp"
#include "nvreg/hamiltonian.hpp"
#include "nvreg/parallel.hpp"

// Generalized cluster correlation expansion.
//
// For every classical bath state n, each cluster C of bath spins is evolved
// quantum mechanically together with the register while all other bath spins
// act as static z-fields. The register density matrix is the element-wise
// product of the mean-field evolution with the cluster correction factors
//
//   rho~_C = rho_C / prod_{C' strictly inside C} rho~_C'      (rho~_{} = rho_E0)
//
// and the final state is the average of that product over bath states.

namespace nvreg {

struct GcceConfig {
  int order = 0;
  std::size_t samples = 100;
  double pair_d1_nm = 70.0;
  double pair_d2_nm = 60.0;
  double ratio_floor = 1e-10;
  // Baths with at most this many spins are averaged over all 2^N states.
  std::size_t enumerate_max_spins = 10;
  unsigned jobs = 1;

  void validate() const {
    if (samples < 1) throw Error("GcceConfig: need at least one bath-state sample");
    if (!(pair_d1_nm >= pair_d2_nm && pair_d2_nm > 0.0)) throw Error("GcceConfig: need d1 >= d2 > 0");
    if (!(ratio_floor > 0.0)) throw Error("GcceConfig: ratio_floor must be positive");
  }
};

using Cluster = std::vector<std::size_t>;

/// Bath-index tuples, each sorted, kept in (size, lexicographic) order.
struct ClusterSet {
  std::vector<Cluster> clusters;

  [[nodiscard]] std::size_t max_size() const {
    std::size_t m = 0;
    for (const auto& c : clusters) m = std::max(m, c.size());
    return m;
  }

  [[nodiscard]] std::vector<Cluster> of_size(std::size_t k) const {
    std::vector<Cluster> out;
    for (const auto& c : clusters) {
      if (c.size() == k) out.push_back(c);
    }
    return out;
  }

  void canonicalize() {
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
  }
};

/// Every single spin of an N-spin bath.
inline ClusterSet all_singletons(std::size_t bath_size) {
  ClusterSet out;
  for (std::size_t l = 0; l < bath_size; ++l) out.clusters.push_back({l});
  return out;
}

/// Pairs (l < q) whose spins both lie within d1 of the register and within d2 of each other.
inline ClusterSet select_pairs(const BathRealization& bath, double d1_nm, double d2_nm) {
  if (d1_nm < d2_nm) throw Error("select_pairs: need d1 >= d2");
  ClusterSet out;
  const auto n = bath.size();
  for (std::size_t l = 0; l < n; ++l) {
    if (bath.positions_nm[l].norm() > d1_nm) continue;
    for (std::size_t q = l + 1; q < n; ++q) {
      if (bath.positions_nm[q].norm() > d1_nm) continue;
      if ((bath.positions_nm[l] - bath.positions_nm[q]).norm() <= d2_nm) out.clusters.push_back({l, q});
    }
  }
  return out;
}

/// Checks canonical form, ranges, duplicates and subset closure.
inline void validate_cluster_set(const ClusterSet& set, std::size_t bath_size, bool require_subset_closed) {
  std::set<Cluster> seen;
  for (const auto& c : set.clusters) {
    if (c.empty()) throw Error("cluster set: empty cluster");
    validate_cluster(c, bath_size);
    if (!seen.insert(c).second) throw Error("cluster set: duplicate cluster");
  }
  if (!require_subset_closed) return;
  for (const auto& c : set.clusters) {
    if (c.size() < 2) continue;
    // Every proper non-empty subset must be present.
    const std::uint64_t full = (std::uint64_t{1} << c.size()) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      Cluster sub;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if ((mask >> k) & 1U) sub.push_back(c[k]);
      }
      if (!seen.contains(sub)) throw Error("cluster set is not closed under subsets");
    }
  }
}

/// Bath states to average over with their weights: all 2^N when small, else M seeded draws.
struct BathStateSet {
  std::vector<BathStateSample> states;
  bool enumerated = false;

  [[nodiscard]] double weight() const { return 1.0 / static_cast<double>(states.size()); }
};

inline BathStateSet bath_states_for(std::size_t bath_size, const GcceConfig& config, std::uint64_t seed) {
  BathStateSet out;
  if (bath_size <= config.enumerate_max_spins) {
    out.states = enumerate_all(bath_size);
    out.enumerated = true;
    return out;
  }
  out.states.reserve(config.samples);
  for (std::size_t n = 0; n < config.samples; ++n) {
    std::mt19937_64 rng(derive_seed(seed, n));
    out.states.push_back(sample_bath_state(bath_size, rng, n));
  }
  return out;
}

/// Register trajectory for one bath state with `cluster` treated quantum mechanically
/// (mean-field only when the cluster is empty). Cluster spins start in the basis
/// state matching the classical sample and are traced out at every sample time.
inline std::vector<CMatrix> cluster_trajectory(const StateEnsemble& rho0, const RegisterSpec& spec,
                                               const BathRealization& bath, const Cluster& cluster,
                                               const BathStateSample& sample, const PulseSequence& seq,
                                               std::span<const double> times) {
  const CMatrix h = cluster.empty() ? meanfield_hamiltonian(spec, bath, sample)
                                    : cluster_hamiltonian(spec, bath, cluster, sample);
  const Propagator prop(h);
  const Eigen::Index cdim = Eigen::Index{1} << cluster.size();
  Eigen::Index cindex = 0;
  for (auto l : cluster) cindex = 2 * cindex + basis_index(sample.values[l]);
  CMatrix psi = CMatrix::Zero(rho0.columns.rows() * cdim, rho0.columns.cols());
  for (Eigen::Index j = 0; j < rho0.columns.cols(); ++j) {
    for (Eigen::Index a = 0; a < rho0.columns.rows(); ++a) psi(a * cdim + cindex, j) = rho0.columns(a, j);
  }
  std::vector<CMatrix> out(times.size());
  propagate_columns(prop, seq, std::move(psi), times, [&](std::size_t i, const CMatrix& cols) {
    out[i] = reduce_ensemble(cols, rho0.weights, cdim);
  });
  return out;
}

namespace detail {

/// num / den element-wise; elements whose denominator is below the floor give 1.
inline CMatrix guarded_ratio(const CMatrix& num, const CMatrix& den, double floor, std::size_t* guarded = nullptr) {
  CMatrix out(num.rows(), num.cols());
  for (Eigen::Index k = 0; k < num.size(); ++k) {
    if (std::abs(den(k)) < floor) {
      out(k) = 1.0;
      if (guarded) ++*guarded;
    } else {
      out(k) = num(k) / den(k);
    }
  }
  return out;
}

}  // namespace detail

struct GcceResult {
  std::vector<CMatrix> states;
  bool enumerated = false;
  std::size_t bath_states = 0;
  std::size_t guarded_elements = 0;

  /// Largest |tr rho - 1| over the trajectory.
  [[nodiscard]] double max_trace_drift() const {
    double m = 0.0;
    for (const auto& s : states) m = std::max(m, std::abs(s.trace() - cplx{1.0}));
    return m;
  }
};

namespace detail {

enum class Combination { MeanField, FirstOrder, SecondOrder, Recursive };

struct SampleResult {
  std::vector<CMatrix> states;
  std::size_t guarded = 0;
};

/// Cluster-product estimate for one bath state.
inline SampleResult gcce_sample(const StateEnsemble& rho0, const RegisterSpec& spec, const BathRealization& bath,
                                const PulseSequence& seq, const ClusterSet& clusters, Combination how,
                                const BathStateSample& sample, std::span<const double> times, double floor) {
  SampleResult res;
  const auto mf = cluster_trajectory(rho0, spec, bath, {}, sample, seq, times);
  if (how == Combination::MeanField) {
    res.states = mf;
    return res;
  }
  std::map<Cluster, std::vector<CMatrix>> raw;
  for (const auto& c : clusters.clusters) raw.emplace(c, cluster_trajectory(rho0, spec, bath, c, sample, seq, times));

  res.states.resize(times.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    CMatrix product = mf[t];
    if (how == Combination::FirstOrder || how == Combination::SecondOrder) {
      for (const auto& c : clusters.clusters) {
        if (c.size() != 1) continue;
        product = product.cwiseProduct(guarded_ratio(raw.at(c)[t], mf[t], floor, &res.guarded));
      }
      if (how == Combination::SecondOrder) {
        for (const auto& c : clusters.clusters) {
          if (c.size() != 2) continue;
          // rho_lq / (rho_E0^-1 rho_l rho_q)
          const auto& rl = raw.at({c[0]})[t];
          const auto& rq = raw.at({c[1]})[t];
          const auto& rlq = raw.at(c)[t];
          for (Eigen::Index k = 0; k < product.size(); ++k) {
            const cplx m = mf[t](k);
            const cplx den = std::abs(m) < floor ? cplx{} : rl(k) * rq(k) / m;
            if (std::abs(den) < floor) {
              ++res.guarded;
            } else {
              product(k) *= rlq(k) / den;
            }
          }
        }
      }
    } else {
      std::map<Cluster, CMatrix> tilde;
      for (const auto& c : clusters.clusters) {
        CMatrix den = mf[t];
        const std::uint64_t full = (std::uint64_t{1} << c.size()) - 1;
        for (std::uint64_t mask = 1; mask < full; ++mask) {
          Cluster sub;
          for (std::size_t k = 0; k < c.size(); ++k) {
            if ((mask >> k) & 1U) sub.push_back(c[k]);
          }
          den = den.cwiseProduct(tilde.at(sub));
        }
        CMatrix factor = guarded_ratio(raw.at(c)[t], den, floor, &res.guarded);
        product = product.cwiseProduct(factor);
        tilde.emplace(c, std::move(factor));
      }
    }
    res.states[t] = std::move(product);
  }
  return res;
}

inline GcceResult gcce_run(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                           const PulseSequence& seq, const GcceConfig& config, const ClusterSet& clusters,
                           Combination how, std::uint64_t seed, std::span<const double> times) {
  config.validate();
  spec.validate();
  bath.validate(spec.species.size());
  if (static_cast<std::size_t>(rho0.rows()) != spec.dimension()) throw Error("gcce: rho0 does not match the register");
  const auto ensemble = ensemble_from_density(rho0);
  const auto states = bath_states_for(bath.size(), config, seed);

  std::vector<SampleResult> per_sample(states.states.size());
  parallel_for(states.states.size(), config.jobs, [&](std::size_t n) {
    per_sample[n] = gcce_sample(ensemble, spec, bath, seq, clusters, how, states.states[n], times, config.ratio_floor);
  });

  GcceResult out;
  out.enumerated = states.enumerated;
  out.bath_states = states.states.size();
  const auto d = rho0.rows();
  out.states.assign(times.size(), CMatrix::Zero(d, d));
  const double w = states.weight();
  for (const auto& s : per_sample) {
    for (std::size_t t = 0; t < times.size(); ++t) out.states[t] += w * s.states[t];
    out.guarded_elements += s.guarded;
  }
  return out;
}

}  // namespace detail

/// Mean-field (order 0): average of S_n rho0 S_n^dag over bath states.
inline GcceResult gcce0(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                        const PulseSequence& seq, const GcceConfig& config, std::uint64_t seed,
                        std::span<const double> times) {
  return detail::gcce_run(rho0, spec, bath, seq, config, {}, detail::Combination::MeanField, seed, times);
}

/// First order: mean-field element times prod_l (rho_l / rho_E0) for every bath spin l.
inline GcceResult gcce1(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                        const PulseSequence& seq, const GcceConfig& config, std::uint64_t seed,
                        std::span<const double> times) {
  return detail::gcce_run(rho0, spec, bath, seq, config, all_singletons(bath.size()), detail::Combination::FirstOrder,
                          seed, times);
}

/// Second order: first order times the listed pair factors rho_lq / (rho_E0^-1 rho_l rho_q).
/// Singletons are implied for every bath spin; `pairs` may only hold 1- and 2-spin clusters.
inline GcceResult gcce2(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                        const PulseSequence& seq, const GcceConfig& config, const ClusterSet& pairs,
                        std::uint64_t seed, std::span<const double> times) {
  ClusterSet set = all_singletons(bath.size());
  for (const auto& c : pairs.clusters) {
    if (c.size() > 2) throw Error("gcce2: clusters larger than two spins");
    if (c.size() == 2) set.clusters.push_back(c);
  }
  set.canonicalize();
  validate_cluster_set(set, bath.size(), true);
  return detail::gcce_run(rho0, spec, bath, seq, config, set, detail::Combination::SecondOrder, seed, times);
}

/// Arbitrary order via the tilde-factor recursion; `clusters` must be closed under subsets.
inline GcceResult gcce_general(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                               const PulseSequence& seq, const GcceConfig& config, const ClusterSet& clusters,
                               std::uint64_t seed, std::span<const double> times) {
  validate_cluster_set(clusters, bath.size(), true);
  ClusterSet set = clusters;
  set.canonicalize();
  return detail::gcce_run(rho0, spec, bath, seq, config, set, detail::Combination::Recursive, seed, times);
}

/// Every cluster of size 1..max_size over the bath (the full expansion to that order).
inline ClusterSet all_clusters_up_to(std::size_t bath_size, std::size_t max_size) {
  ClusterSet out;
  const std::uint64_t total = std::uint64_t{1} << bath_size;
  for (std::uint64_t mask = 1; mask < total; ++mask) {
    const auto bits = static_cast<std::size_t>(std::popcount(mask));
    if (bits > max_size) continue;
    Cluster c;
    for (std::size_t k = 0; k < bath_size; ++k) {
      if ((mask >> k) & 1U) c.push_back(k);
    }
    out.clusters.push_back(std::move(c));
  }
  out.canonicalize();
  return out;
}

/// Dispatches on config.order: 0, 1, 2 (with distance-selected pairs) or the full
/// expansion up to `order` spins per cluster.
inline GcceResult gcce_by_order(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                                const PulseSequence& seq, const GcceConfig& config, std::uint64_t seed,
                                std::span<const double> times) {
  switch (config.order) {
    case 0: return gcce0(rho0, spec, bath, seq, config, seed, times);
    case 1: return gcce1(rho0, spec, bath, seq, config, seed, times);
    case 2: return gcce2(rho0, spec, bath, seq, config, select_pairs(bath, config.pair_d1_nm, config.pair_d2_nm),
                         seed, times);
    default:
      if (config.order < 0) throw Error("gcce: negative order");
      if (bath.size() > 20) throw GuardViolation("gcce: full expansion beyond order 2 limited to 20 spins");
      return gcce_general(rho0, spec, bath, seq, config,
                          all_clusters_up_to(bath.size(), static_cast<std::size_t>(config.order)), seed, times);
  }
}

}  // namespace nvreg
