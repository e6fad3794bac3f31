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
#include <iomanip>
#include <ostream>
#include <set>
#include <span>
#include <vector>

#include "nvreg/bath.hpp"
#include "nvreg/spin_model.hpp"

// All Hamiltonians are in MHz, in the product basis
// NV x 13C_1 x 13C_2 x N x (cluster spins in ascending bath index).

namespace nvreg {

inline constexpr std::size_t kMaxRegisterDimension = 4096;

namespace detail {

inline const SpinOperators& half_spin() {
  static const SpinOperators ops = spin_operators(0.5);
  return ops;
}

/// Adds a . T . b (T in kHz) between factors p and q.
inline void add_tensor_coupling(CMatrix& h, std::span<const int> dims, std::size_t p, const SpinOperators& a,
                                std::size_t q, const SpinOperators& b, const Mat3& t_khz) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double c = t_khz(i, j);
      if (c == 0.0) continue;
      add_two_site(h, dims, p, a[i], q, b[j], c * 1e-3);
    }
  }
}

/// Single-spin terms of register species `i` (Zeeman, zero-field splitting, frozen shifts).
inline void add_register_site_terms(CMatrix& h, std::span<const int> dims, const RegisterSpec& spec, std::size_t i) {
  const auto& c = spec.constants;
  const auto ops = spec.operators(i);
  const double bz = c.field_gauss;
  switch (spec.species[i].kind) {
    case SpinKind::NVElectron:
      add_one_site(h, dims, i, ops.z * ops.z, c.zero_field_splitting_mhz);
      add_one_site(h, dims, i, ops.z, -c.electron_g_mhz_per_gauss * bz + spec.nv_static_shift_mhz);
      break;
    case SpinKind::NitrogenNuclear:
      add_one_site(h, dims, i, ops.z * ops.z, c.nitrogen_zfs_mhz);
      add_one_site(h, dims, i, ops.z, -c.nitrogen_g_khz_per_gauss * 1e-3 * bz);
      break;
    case SpinKind::Carbon13:
      add_one_site(h, dims, i, ops.z, -c.carbon_g_khz_per_gauss * 1e-3 * bz);
      break;
    case SpinKind::P1Electron:
      add_one_site(h, dims, i, ops.z, -c.electron_g_mhz_per_gauss * bz);
      break;
  }
}

inline void add_register_terms(CMatrix& h, std::span<const int> dims, const RegisterSpec& spec) {
  const auto n = spec.species.size();
  std::vector<SpinOperators> ops;
  ops.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ops.push_back(spec.operators(i));
    add_register_site_terms(h, dims, spec, i);
  }
  for (const auto& [key, t] : spec.tensors) {
    const auto p = static_cast<std::size_t>(key.first);
    const auto q = static_cast<std::size_t>(key.second);
    add_tensor_coupling(h, dims, p, ops[p], q, ops[q], t.khz);
  }
}

inline void check_dimension(std::size_t d, std::size_t limit) {
  if (d > limit) {
    throw GuardViolation("Hamiltonian dimension " + std::to_string(d) + " exceeds limit " + std::to_string(limit));
  }
}

}  // namespace detail

/// H_R = H_NV + H_N + sum_k H_13C^(k), every tensor coupling expanded in full.
inline CMatrix register_hamiltonian(const RegisterSpec& spec) {
  spec.validate();
  const auto dims = spec.dims();
  const auto d = total_dimension(dims);
  detail::check_dimension(d, kMaxRegisterDimension);
  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  detail::add_register_terms(h, dims, spec);
  return h;
}

/// NV (truncated) x one 13C with the nitrogen frozen in m_N = +1:
/// D S_z^2 - (g_e B_z - N_zz) S_z + S.M.I - g_C B_z I_z.
inline CMatrix two_qubit_hamiltonian(const PhysicalConstants& c, const CouplingTensor& m1) {
  const auto s = truncated_nv_operators();
  const auto i = spin_operators(0.5);
  const CMatrix id2 = CMatrix::Identity(2, 2);
  CMatrix h = kron(c.zero_field_splitting_mhz * s.z * s.z -
                       (c.electron_g_mhz_per_gauss * c.field_gauss - c.nitrogen_zz_effective_mhz) * s.z,
                   id2);
  h += kron(id2, -c.carbon_g_khz_per_gauss * 1e-3 * c.field_gauss * i.z);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) h += m1.khz(a, b) * 1e-3 * kron(s[a], i[b]);
  }
  return h;
}

/// Diagonal mean-field shift on the register from classical bath projections
/// (the identity-proportional bath energies are dropped).
inline RVector meanfield_shift(const RegisterSpec& spec, const BathRealization& bath, const BathStateSample& sample,
                               std::span<const std::size_t> excluded = {}) {
  if (sample.size() != bath.size()) throw Error("mean-field: sample length differs from bath size");
  bath.validate(spec.species.size());
  const auto dims = spec.dims();
  const auto d = total_dimension(dims);
  // Effective z-field per register spin, in MHz.
  std::vector<double> field(spec.species.size(), 0.0);
  for (std::size_t j = 0; j < bath.size(); ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) != excluded.end()) continue;
    for (std::size_t r = 0; r < spec.species.size(); ++r) {
      field[r] += bath.coupling(r, j).khz(2, 2) * 1e-3 * sample.values[j];
    }
  }
  RVector diag = RVector::Zero(static_cast<Eigen::Index>(d));
  std::size_t stride = d;
  for (std::size_t r = 0; r < spec.species.size(); ++r) {
    const auto z = spec.operators(r).z;
    stride /= static_cast<std::size_t>(dims[r]);
    for (std::size_t k = 0; k < d; ++k) {
      const auto m = static_cast<Eigen::Index>((k / stride) % static_cast<std::size_t>(dims[r]));
      diag(static_cast<Eigen::Index>(k)) += field[r] * z(m, m).real();
    }
  }
  return diag;
}

/// H^(E0,n): register Hamiltonian plus z-shifts from the classical bath state.
inline CMatrix meanfield_hamiltonian(const RegisterSpec& spec, const BathRealization& bath,
                                     const BathStateSample& sample) {
  CMatrix h = register_hamiltonian(spec);
  h.diagonal() += meanfield_shift(spec, bath, sample).cast<cplx>();
  return h;
}

inline void validate_cluster(std::span<const std::size_t> cluster, std::size_t bath_size) {
  std::set<std::size_t> seen;
  for (auto j : cluster) {
    if (j >= bath_size) throw Error("cluster index " + std::to_string(j) + " outside bath of size " + std::to_string(bath_size));
    if (!seen.insert(j).second) throw Error("cluster index " + std::to_string(j) + " repeated");
  }
  if (!std::is_sorted(cluster.begin(), cluster.end())) throw Error("cluster indices must be ascending");
}

/// Register x cluster Hamiltonian: full tensors between register and cluster spins
/// and within the cluster, Zeeman of the cluster spins, and mean-field z-shifts
/// from every bath spin outside the cluster on both register and cluster spins.
inline CMatrix cluster_hamiltonian(const RegisterSpec& spec, const BathRealization& bath,
                                   std::span<const std::size_t> cluster, const BathStateSample& sample) {
  spec.validate();
  bath.validate(spec.species.size());
  if (sample.size() != bath.size()) throw Error("cluster_hamiltonian: sample length differs from bath size");
  validate_cluster(cluster, bath.size());

  auto dims = spec.dims();
  const std::size_t nreg = dims.size();
  for (std::size_t k = 0; k < cluster.size(); ++k) dims.push_back(2);
  const auto d = total_dimension(dims);
  detail::check_dimension(d, 4 * kMaxRegisterDimension);

  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  detail::add_register_terms(h, dims, spec);

  const auto& e = detail::half_spin();
  const auto& c = spec.constants;
  std::vector<SpinOperators> reg_ops;
  for (std::size_t r = 0; r < nreg; ++r) reg_ops.push_back(spec.operators(r));

  for (std::size_t a = 0; a < cluster.size(); ++a) {
    const std::size_t site = nreg + a;
    const std::size_t l = cluster[a];
    add_one_site(h, dims, site, e.z, -c.electron_g_mhz_per_gauss * c.field_gauss);
    for (std::size_t r = 0; r < nreg; ++r) {
      detail::add_tensor_coupling(h, dims, r, reg_ops[r], site, e, bath.coupling(r, l).khz);
    }
    for (std::size_t b = a + 1; b < cluster.size(); ++b) {
      detail::add_tensor_coupling(h, dims, site, e, nreg + b, e, bath.pair(l, cluster[b]).khz);
    }
    // Outside spins act on the cluster spin as a static z-field.
    double field = 0.0;
    for (std::size_t j = 0; j < bath.size(); ++j) {
      if (std::find(cluster.begin(), cluster.end(), j) != cluster.end()) continue;
      field += bath.pair(l, j).khz(2, 2) * 1e-3 * sample.values[j];
    }
    if (field != 0.0) add_one_site(h, dims, site, e.z, field);
  }

  // Outside spins acting on the register; shift is constant across cluster factors.
  const RVector reg_shift = meanfield_shift(spec, bath, sample, cluster);
  const auto cluster_dim = static_cast<Eigen::Index>(d / spec.dimension());
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d); ++k) h(k, k) += reg_shift(k / cluster_dim);
  return h;
}

/// Debug dump: row,col,re,im for every non-zero element.
inline void write_hamiltonian_csv(std::ostream& os, const CMatrix& h) {
  os << "row,col,re,im\n" << std::setprecision(12);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      if (h(i, j) != cplx{}) os << i << ',' << j << ',' << h(i, j).real() << ',' << h(i, j).imag() << '\n';
    }
  }
}

}  // namespace nvreg
