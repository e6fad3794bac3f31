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

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nvreg/linalg.hpp"

namespace nvreg {

// Physical constants of the NV register and its environment. Frequencies are
// linear (not angular); the unit is part of every field name.
struct PhysicalConstants {
  double zero_field_splitting_mhz = 2880.0;
  double electron_g_mhz_per_gauss = -2.806;
  double nitrogen_zfs_mhz = -5.08;
  double nitrogen_g_khz_per_gauss = 0.308;
  double carbon_g_khz_per_gauss = 1.071;
  double gamma_electron = -1.761e11;  // rad s^-1 T^-1
  double gamma_carbon = 6.728e7;      // rad s^-1 T^-1
  double field_gauss = 148.0;
  double nitrogen_parallel_mhz = -1.73;
  double nitrogen_perpendicular_mhz = -2.16;
  double nitrogen_zz_effective_mhz = -1.76;
  // Diamond atom density, 3.515 g cm^-3 / 12.011 g mol^-1 * N_A.
  double carbon_density_per_cm3 = 1.7624e23;

  /// 14N gyromagnetic ratio in rad s^-1 T^-1, from the kHz/G value.
  [[nodiscard]] double gamma_nitrogen() const { return kTwoPi * nitrogen_g_khz_per_gauss * 1e3 * 1e4; }
};

enum class SpinKind { NVElectron, NitrogenNuclear, Carbon13, P1Electron };

inline std::string to_string(SpinKind kind) {
  switch (kind) {
    case SpinKind::NVElectron: return "nv";
    case SpinKind::NitrogenNuclear: return "nitrogen";
    case SpinKind::Carbon13: return "carbon13";
    case SpinKind::P1Electron: return "p1";
  }
  return "unknown";
}

struct SpinSpecies {
  double spin = 0.5;
  SpinKind kind = SpinKind::Carbon13;
  Vec3 position_nm = Vec3::Zero();
};

enum class TensorSource { PointDipole, TableConstant };

/// 3x3 coupling in kHz, contracted as a . T . b between the two spin vectors.
struct CouplingTensor {
  Mat3 khz = Mat3::Zero();
  TensorSource source = TensorSource::PointDipole;
};

struct SpinOperators {
  CMatrix x;
  CMatrix y;
  CMatrix z;

  [[nodiscard]] const CMatrix& operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  [[nodiscard]] Eigen::Index dim() const { return z.rows(); }
};

/// Angular-momentum matrices in the basis m = s, s-1, ..., -s.
inline SpinOperators spin_operators(double s) {
  const bool half = std::abs(s - 0.5) < 1e-12;
  const bool one = std::abs(s - 1.0) < 1e-12;
  if (!half && !one) throw Error("spin_operators: unsupported spin " + std::to_string(s) + " (expected 1/2 or 1)");
  const int d = half ? 2 : 3;
  SpinOperators ops{CMatrix::Zero(d, d), CMatrix::Zero(d, d), CMatrix::Zero(d, d)};
  for (int i = 0; i < d; ++i) ops.z(i, i) = s - i;
  // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
  CMatrix raise = CMatrix::Zero(d, d);
  for (int i = 1; i < d; ++i) {
    const double m = s - i;
    raise(i - 1, i) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  const CMatrix lower = raise.adjoint();
  ops.x = 0.5 * (raise + lower);
  ops.y = (raise - lower) / (2.0 * kI);
  return ops;
}

/// Two-level NV operators on {|m_s=0>, |m_s=-1>}.
inline SpinOperators truncated_nv_operators() {
  const double r = 1.0 / std::sqrt(2.0);
  SpinOperators ops{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
  ops.z(1, 1) = -1.0;
  ops.x(0, 1) = r;
  ops.x(1, 0) = r;
  ops.y(0, 1) = r / kI;
  ops.y(1, 0) = -r / kI;
  return ops;
}

inline constexpr double kReducedPlanck = 1.054571817e-34;  // J s
inline constexpr double kMu0Over4Pi = 1e-7;                // T m A^-1
inline constexpr double kMinDipoleDistanceNm = 0.1;

/// Point-dipole coupling tensor in kHz for spins separated by `displacement_nm`.
inline CouplingTensor dipole_tensor(const Vec3& displacement_nm, double gamma_a, double gamma_b) {
  const double r_nm = displacement_nm.norm();
  if (!(r_nm > kMinDipoleDistanceNm)) {
    throw Error("dipole_tensor: spins closer than " + std::to_string(kMinDipoleDistanceNm) + " nm (r = " +
                std::to_string(r_nm) + " nm)");
  }
  const double r_m = r_nm * 1e-9;
  const double prefactor_khz = kReducedPlanck * kMu0Over4Pi * gamma_a * gamma_b / (r_m * r_m * r_m) / kTwoPi * 1e-3;
  const Vec3 n = displacement_nm / r_nm;
  CouplingTensor t;
  t.khz = -prefactor_khz * (3.0 * n * n.transpose() - Mat3::Identity());
  t.source = TensorSource::PointDipole;
  return t;
}

inline double gyromagnetic_ratio(SpinKind kind, const PhysicalConstants& c) {
  switch (kind) {
    case SpinKind::NVElectron:
    case SpinKind::P1Electron: return c.gamma_electron;
    case SpinKind::Carbon13: return c.gamma_carbon;
    case SpinKind::NitrogenNuclear: return c.gamma_nitrogen();
  }
  return 0.0;
}

// The central spin system. The NV electron must be species 0; the tensor map is
// keyed by (i, j) with i < j and is contracted as spin_i . T . spin_j.
struct RegisterSpec {
  std::vector<SpinSpecies> species;
  bool nv_truncated = true;
  std::map<std::pair<int, int>, CouplingTensor> tensors;
  PhysicalConstants constants;
  // Static S_z coefficient in MHz, used when the nitrogen is frozen out of the register.
  double nv_static_shift_mhz = 0.0;

  [[nodiscard]] std::vector<int> dims() const {
    std::vector<int> out;
    out.reserve(species.size());
    for (const auto& s : species) {
      if (s.kind == SpinKind::NVElectron && nv_truncated) {
        out.push_back(2);
      } else {
        out.push_back(static_cast<int>(std::lround(2 * s.spin)) + 1);
      }
    }
    return out;
  }

  [[nodiscard]] std::size_t dimension() const { return total_dimension(dims()); }

  [[nodiscard]] int index_of(SpinKind kind, int occurrence = 0) const {
    for (std::size_t i = 0; i < species.size(); ++i) {
      if (species[i].kind == kind && occurrence-- == 0) return static_cast<int>(i);
    }
    return -1;
  }

  [[nodiscard]] CouplingTensor tensor(int i, int j) const {
    if (i == j) throw Error("RegisterSpec::tensor: self coupling requested");
    if (i > j) {
      auto t = tensor(j, i);
      t.khz.transposeInPlace();
      return t;
    }
    const auto it = tensors.find({i, j});
    return it == tensors.end() ? CouplingTensor{} : it->second;
  }

  [[nodiscard]] SpinOperators operators(std::size_t i) const {
    const auto& s = species.at(i);
    if (s.kind == SpinKind::NVElectron && nv_truncated) return truncated_nv_operators();
    return spin_operators(s.spin);
  }

  void validate() const {
    int nv_count = 0;
    for (const auto& s : species) {
      if (s.kind == SpinKind::NVElectron) ++nv_count;
      if (!(std::abs(s.spin - 0.5) < 1e-12 || std::abs(s.spin - 1.0) < 1e-12)) {
        throw Error("RegisterSpec: spin must be 1/2 or 1");
      }
      if (!s.position_nm.allFinite()) throw Error("RegisterSpec: non-finite position");
    }
    if (nv_count != 1) throw Error("RegisterSpec: exactly one NV electron required");
    if (species.front().kind != SpinKind::NVElectron) throw Error("RegisterSpec: NV electron must be the first factor");
    for (const auto& [key, t] : tensors) {
      if (key.first >= key.second || key.second >= static_cast<int>(species.size())) {
        throw Error("RegisterSpec: tensor key out of range or not ordered");
      }
      if (!t.khz.allFinite()) throw Error("RegisterSpec: non-finite tensor");
    }
  }
};

namespace detail {

inline CouplingTensor table_tensor(double xx, double yy, double zz, double xy, double yz, double xz) {
  CouplingTensor t;
  t.khz << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  t.source = TensorSource::TableConstant;
  return t;
}

}  // namespace detail

/// NV-13C hyperfine tensors of the two register carbons (kHz).
inline CouplingTensor carbon1_hyperfine() { return detail::table_tensor(310.8, 166.2, -144.6, 0.0, 0.0, 101.4); }
inline CouplingTensor carbon2_hyperfine() { return detail::table_tensor(-7.381, 90.16, -84.26, 152.4, -84.23, -61.2); }

inline const Vec3 kCarbon1PositionNm{0.87, 0.0, 0.19};
inline const Vec3 kCarbon2PositionNm{0.56, 0.77, 0.31};
// Nearest-neighbour lattice site below the vacancy along the NV axis.
inline const Vec3 kNitrogenPositionNm{0.0, 0.0, -0.154};

/// NV (truncated) x 13C_1 x 13C_2 x 14N, dimension 24.
inline RegisterSpec default_register(const PhysicalConstants& constants = {}) {
  RegisterSpec spec;
  spec.constants = constants;
  spec.nv_truncated = true;
  spec.species = {
      {1.0, SpinKind::NVElectron, Vec3::Zero()},
      {0.5, SpinKind::Carbon13, kCarbon1PositionNm},
      {0.5, SpinKind::Carbon13, kCarbon2PositionNm},
      {1.0, SpinKind::NitrogenNuclear, kNitrogenPositionNm},
  };
  spec.tensors[{0, 1}] = carbon1_hyperfine();
  spec.tensors[{0, 2}] = carbon2_hyperfine();
  spec.tensors[{0, 3}] = detail::table_tensor(constants.nitrogen_perpendicular_mhz * 1e3,
                                              constants.nitrogen_perpendicular_mhz * 1e3,
                                              constants.nitrogen_parallel_mhz * 1e3, 0.0, 0.0, 0.0);
  const double gc = constants.gamma_carbon;
  const double gn = constants.gamma_nitrogen();
  spec.tensors[{1, 2}] = dipole_tensor(kCarbon2PositionNm - kCarbon1PositionNm, gc, gc);
  spec.tensors[{1, 3}] = dipole_tensor(kNitrogenPositionNm - kCarbon1PositionNm, gc, gn);
  spec.tensors[{2, 3}] = dipole_tensor(kNitrogenPositionNm - kCarbon2PositionNm, gc, gn);
  spec.validate();
  return spec;
}

/// NV (truncated) x 13C_1 with the nitrogen frozen in m_N = +1, dimension 4.
inline RegisterSpec two_qubit_register(const PhysicalConstants& constants = {}) {
  RegisterSpec spec;
  spec.constants = constants;
  spec.nv_truncated = true;
  spec.species = {
      {1.0, SpinKind::NVElectron, Vec3::Zero()},
      {0.5, SpinKind::Carbon13, kCarbon1PositionNm},
  };
  spec.tensors[{0, 1}] = carbon1_hyperfine();
  spec.nv_static_shift_mhz = constants.nitrogen_zz_effective_mhz;
  spec.validate();
  return spec;
}

}  // namespace nvreg
