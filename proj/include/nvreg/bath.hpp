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

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <vector>

#include "nvreg/spin_model.hpp"

namespace nvreg {

/// Spherical shell around the register holding the P1 bath.
struct ShellSpec {
  double r_min_nm = 30.0;
  double r_max_nm = 60.0;
  double density_ppb = 0.0;

  void validate() const {
    if (!(r_min_nm > 0.0 && r_min_nm < r_max_nm)) throw Error("ShellSpec: need 0 < r_min < r_max");
    if (!(density_ppb >= 0.0)) throw Error("ShellSpec: density must be non-negative");
  }

  [[nodiscard]] double volume_cm3() const {
    const double nm3 = 4.0 / 3.0 * kPi * (std::pow(r_max_nm, 3) - std::pow(r_min_nm, 3));
    return nm3 * 1e-21;
  }

  [[nodiscard]] double expected_count(const PhysicalConstants& c = {}) const {
    return density_ppb * 1e-9 * c.carbon_density_per_cm3 * volume_cm3();
  }
};

/// Number of P1 spins for the shell: the rounded expectation value.
inline std::size_t spin_count(const ShellSpec& shell, const PhysicalConstants& constants = {}) {
  shell.validate();
  return static_cast<std::size_t>(std::llround(shell.expected_count(constants)));
}

// One spatial configuration of P1 electron spins and every tensor that couples
// them to the register and to each other. Tensors are contracted as
// register_spin . T . bath_spin and bath_i . G_ij . bath_j.
struct BathRealization {
  std::vector<Vec3> positions_nm;
  // to_register[r][j]: register species r with bath spin j (K for the NV, A for
  // the nitrogen, F for the carbons).
  std::vector<std::vector<CouplingTensor>> to_register;
  // Row-major N x N, zero diagonal, symmetric.
  std::vector<CouplingTensor> bath_pairs;

  [[nodiscard]] std::size_t size() const { return positions_nm.size(); }

  [[nodiscard]] const CouplingTensor& coupling(std::size_t register_index, std::size_t bath_index) const {
    return to_register.at(register_index).at(bath_index);
  }

  [[nodiscard]] const CouplingTensor& pair(std::size_t i, std::size_t j) const { return bath_pairs.at(i * size() + j); }

  void validate(std::size_t register_size) const {
    const auto n = size();
    if (to_register.size() != register_size) throw Error("BathRealization: register coupling table has wrong size");
    for (const auto& row : to_register) {
      if (row.size() != n) throw Error("BathRealization: coupling row size differs from bath size");
    }
    if (bath_pairs.size() != n * n) throw Error("BathRealization: bath pair table has wrong size");
  }
};

/// Computes every tensor of a realization from positions and the register geometry.
inline BathRealization make_realization(std::vector<Vec3> positions_nm, const RegisterSpec& reg) {
  BathRealization bath;
  bath.positions_nm = std::move(positions_nm);
  const auto n = bath.size();
  const double ge = reg.constants.gamma_electron;
  bath.to_register.resize(reg.species.size());
  for (std::size_t r = 0; r < reg.species.size(); ++r) {
    const auto& s = reg.species[r];
    const double gr = gyromagnetic_ratio(s.kind, reg.constants);
    bath.to_register[r].reserve(n);
    for (const auto& p : bath.positions_nm) bath.to_register[r].push_back(dipole_tensor(p - s.position_nm, gr, ge));
  }
  bath.bath_pairs.assign(n * n, CouplingTensor{});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto t = dipole_tensor(bath.positions_nm[j] - bath.positions_nm[i], ge, ge);
      bath.bath_pairs[i * n + j] = t;
      bath.bath_pairs[j * n + i] = t;
    }
  }
  return bath;
}

/// Uniform-by-volume point in the shell: inverse CDF on r^3, isotropic direction.
template <class Rng>
Vec3 sample_shell_point(const ShellSpec& shell, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = std::pow(shell.r_min_nm, 3);
  const double b = std::pow(shell.r_max_nm, 3);
  const double r = std::cbrt(a + unit(rng) * (b - a));
  const double cos_theta = 2.0 * unit(rng) - 1.0;
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const double phi = kTwoPi * unit(rng);
  return {r * sin_theta * std::cos(phi), r * sin_theta * std::sin(phi), r * cos_theta};
}

/// Places `count` spins in the shell, redrawing any spin that lands within the
/// point-dipole cutoff of an earlier one.
template <class Rng>
std::vector<Vec3> sample_shell_positions(const ShellSpec& shell, std::size_t count, Rng& rng) {
  std::vector<Vec3> out;
  out.reserve(count);
  while (out.size() < count) {
    const Vec3 p = sample_shell_point(shell, rng);
    bool clash = false;
    for (const auto& q : out) {
      if ((p - q).norm() <= kMinDipoleDistanceNm) {
        clash = true;
        break;
      }
    }
    if (!clash) out.push_back(p);
  }
  return out;
}

/// Random realization with exactly spin_count(shell) spins, or a Poisson draw
/// around it when `poisson_count` is set.
template <class Rng>
BathRealization sample_bath_realization(const ShellSpec& shell, const RegisterSpec& reg, Rng& rng,
                                        bool poisson_count = false) {
  shell.validate();
  std::size_t count = spin_count(shell, reg.constants);
  if (poisson_count) {
    const double mean = shell.expected_count(reg.constants);
    count = mean > 0.0 ? static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng)) : 0;
  }
  return make_realization(sample_shell_positions(shell, count, rng), reg);
}

/// Bath with one designated close pair: spin 0 at a distance in
/// [pair_r_min, pair_r_max] from the origin, spin 1 within [min_sep, max_sep] of
/// it, and the remaining spins drawn from `shell` with every other separation
/// above max_sep. All spins lie inside the shell.
struct ClosePairSpec {
  double pair_r_min_nm = 35.0;
  double pair_r_max_nm = 55.0;
  double min_separation_nm = 10.0;
  double max_separation_nm = 25.0;

  void validate(const ShellSpec& shell) const {
    if (!(pair_r_min_nm >= shell.r_min_nm && pair_r_max_nm <= shell.r_max_nm && pair_r_min_nm < pair_r_max_nm)) {
      throw Error("ClosePairSpec: pair radius range must lie inside the shell");
    }
    if (!(min_separation_nm > kMinDipoleDistanceNm && min_separation_nm <= max_separation_nm)) {
      throw Error("ClosePairSpec: need cutoff < min_separation <= max_separation");
    }
  }
};

template <class Rng>
BathRealization sample_close_pair_bath(const ShellSpec& shell, const ClosePairSpec& pair, std::size_t count,
                                       const RegisterSpec& reg, Rng& rng, std::size_t max_attempts = 100000) {
  shell.validate();
  pair.validate(shell);
  if (count < 2) throw Error("sample_close_pair_bath: need at least two spins");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto inside = [&](const Vec3& p) { return p.norm() >= shell.r_min_nm && p.norm() <= shell.r_max_nm; };
  std::vector<Vec3> pts;
  for (std::size_t attempt = 0; pts.size() < 2; ++attempt) {
    if (attempt >= max_attempts) throw GuardViolation("sample_close_pair_bath: could not place the pair");
    const Vec3 a = sample_shell_point(ShellSpec{pair.pair_r_min_nm, pair.pair_r_max_nm, 0.0}, rng);
    const double sep = pair.min_separation_nm + unit(rng) * (pair.max_separation_nm - pair.min_separation_nm);
    const Vec3 b = a + sep * sample_shell_point(ShellSpec{0.5, 1.0, 0.0}, rng).normalized();
    if (inside(b)) pts = {a, b};
  }
  for (std::size_t attempt = 0; pts.size() < count; ++attempt) {
    if (attempt >= max_attempts) throw GuardViolation("sample_close_pair_bath: shell too crowded for isolated spins");
    const Vec3 p = sample_shell_point(shell, rng);
    bool ok = true;
    for (const auto& q : pts) ok = ok && (p - q).norm() > pair.max_separation_nm;
    if (ok) pts.push_back(p);
  }
  return make_realization(std::move(pts), reg);
}

/// Classical z projections (+-1/2) of every bath spin for one bath-state sample.
struct BathStateSample {
  std::vector<double> values;
  std::uint64_t index = 0;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

template <class Rng>
BathStateSample sample_bath_state(std::size_t size, Rng& rng, std::uint64_t index = 0) {
  std::bernoulli_distribution coin(0.5);
  BathStateSample s;
  s.index = index;
  s.values.reserve(size);
  for (std::size_t j = 0; j < size; ++j) s.values.push_back(coin(rng) ? 0.5 : -0.5);
  return s;
}

/// Bath state number `n` of the 2^size enumeration: bit j set means spin j is -1/2.
inline BathStateSample enumerated_bath_state(std::size_t size, std::uint64_t n) {
  BathStateSample s;
  s.index = n;
  s.values.reserve(size);
  for (std::size_t j = 0; j < size; ++j) s.values.push_back(((n >> j) & 1U) != 0U ? -0.5 : 0.5);
  return s;
}

inline std::vector<BathStateSample> enumerate_all(std::size_t size) {
  if (size > 30) throw GuardViolation("enumerate_all: bath too large to enumerate");
  std::vector<BathStateSample> out;
  const std::uint64_t total = std::uint64_t{1} << size;
  out.reserve(total);
  for (std::uint64_t n = 0; n < total; ++n) out.push_back(enumerated_bath_state(size, n));
  return out;
}

/// Index of a spin-1/2 basis state in the (+1/2, -1/2) ordering.
inline int basis_index(double projection) { return projection > 0.0 ? 0 : 1; }

/// CSV block: index,x_nm,y_nm,z_nm.
inline void write_realization_csv(std::ostream& os, const BathRealization& bath) {
  os << "index,x_nm,y_nm,z_nm\n";
  os << std::setprecision(12);
  for (std::size_t j = 0; j < bath.size(); ++j) {
    const auto& p = bath.positions_nm[j];
    os << j << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
}

/// 64-bit mixer used to derive independent per-task seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

}  // namespace nvreg
