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

#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nvreg/bath.hpp"
#include "nvreg/evolution.hpp"
#include "nvreg/hamiltonian.hpp"
#include "nvreg/metrics.hpp"

// Brute-force evolution of the register together with the entire bath.

namespace nvreg {

inline constexpr std::size_t kExactMaxBathSpins = 12;
inline constexpr std::size_t kExactFastDimension = 4096;
inline constexpr std::size_t kExactMaxDimension = 12288;

struct ExactMode {
  enum class Kind { Auto, Enumerate, Sample };
  Kind kind = Kind::Auto;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
};

/// Checks the size guards; returns the total dimension. Dimensions above the
/// fast limit are reported through `warn`.
inline std::size_t exact_dimension_guard(const RegisterSpec& spec, std::size_t bath_size,
                                         const std::function<void(const std::string&)>& warn = {}) {
  if (bath_size > kExactMaxBathSpins) {
    throw GuardViolation("exact oracle: " + std::to_string(bath_size) + " bath spins exceed the limit of " +
                         std::to_string(kExactMaxBathSpins));
  }
  const std::size_t d = spec.dimension() << bath_size;
  if (d > kExactMaxDimension) {
    throw GuardViolation("exact oracle: dimension " + std::to_string(d) + " exceeds " +
                         std::to_string(kExactMaxDimension));
  }
  if (d > kExactFastDimension) {
    const std::string msg = "exact oracle: dimension " + std::to_string(d) + " takes the slow path";
    if (warn) {
      warn(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  }
  return d;
}

/// Register x bath Hamiltonian with every tensor in full (bath spins in ascending order).
inline CMatrix full_hamiltonian(const RegisterSpec& spec, const BathRealization& bath) {
  spec.validate();
  bath.validate(spec.species.size());
  auto dims = spec.dims();
  const std::size_t nreg = dims.size();
  for (std::size_t j = 0; j < bath.size(); ++j) dims.push_back(2);
  const auto d = total_dimension(dims);
  CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  detail::add_register_terms(h, dims, spec);

  const auto e = spin_operators(0.5);
  const auto& c = spec.constants;
  std::vector<SpinOperators> reg_ops;
  for (std::size_t r = 0; r < nreg; ++r) reg_ops.push_back(spec.operators(r));
  for (std::size_t j = 0; j < bath.size(); ++j) {
    const std::size_t site = nreg + j;
    add_one_site(h, dims, site, e.z, -c.electron_g_mhz_per_gauss * c.field_gauss);
    for (std::size_t r = 0; r < nreg; ++r) {
      detail::add_tensor_coupling(h, dims, r, reg_ops[r], site, e, bath.coupling(r, j).khz);
    }
    for (std::size_t i = 0; i < j; ++i) detail::add_tensor_coupling(h, dims, nreg + i, e, site, e, bath.pair(i, j).khz);
  }
  return h;
}

/// Index of a bath basis product state in the ascending spin order.
inline std::size_t bath_basis_index(const BathStateSample& s) {
  std::size_t idx = 0;
  for (double v : s.values) idx = 2 * idx + static_cast<std::size_t>(basis_index(v));
  return idx;
}

/// rho_reg(t) = tr_B[U (rho0 x 1/2^N) U^dag], the mixed bath realised as the uniform
/// average over bath basis states (all of them, or `mode.samples` random ones).
inline std::vector<CMatrix> exact_evolve(const CMatrix& rho0, const RegisterSpec& spec, const BathRealization& bath,
                                         const PulseSequence& seq, const ExactMode& mode,
                                         std::span<const double> times) {
  const auto d = exact_dimension_guard(spec, bath.size());
  if (static_cast<std::size_t>(rho0.rows()) != spec.dimension()) throw Error("exact: rho0 does not match the register");
  const Propagator prop(full_hamiltonian(spec, bath));

  std::vector<BathStateSample> states;
  const bool enumerate = mode.kind == ExactMode::Kind::Enumerate ||
                         (mode.kind == ExactMode::Kind::Auto && bath.size() <= 10);
  if (enumerate) {
    states = enumerate_all(bath.size());
  } else {
    for (std::size_t n = 0; n < mode.samples; ++n) {
      std::mt19937_64 rng(derive_seed(mode.seed, n));
      states.push_back(sample_bath_state(bath.size(), rng, n));
    }
  }

  const auto ensemble = ensemble_from_density(rho0);
  const auto bdim = static_cast<Eigen::Index>(std::size_t{1} << bath.size());
  const auto m = ensemble.columns.cols();
  CMatrix psi = CMatrix::Zero(static_cast<Eigen::Index>(d), m * static_cast<Eigen::Index>(states.size()));
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(psi.cols()));
  const double w = 1.0 / static_cast<double>(states.size());
  Eigen::Index col = 0;
  for (const auto& s : states) {
    const auto b = static_cast<Eigen::Index>(bath_basis_index(s));
    for (Eigen::Index j = 0; j < m; ++j, ++col) {
      for (Eigen::Index a = 0; a < ensemble.columns.rows(); ++a) psi(a * bdim + b, col) = ensemble.columns(a, j);
      weights.push_back(w * ensemble.weights[static_cast<std::size_t>(j)]);
    }
  }
  std::vector<CMatrix> out(times.size());
  propagate_columns(prop, seq, std::move(psi), times, [&](std::size_t i, const CMatrix& cols) {
    out[i] = reduce_ensemble(cols, weights, bdim);
  });
  return out;
}

struct BenchmarkReport {
  double fidelity_approx = 0.0;
  double fidelity_exact = 0.0;
  double relative_error = 0.0;
  double max_element_deviation = 0.0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
};

/// |F_f(approx) - F_f(exact)| / F_f(exact) against the bath-free reference state,
/// plus the worst density-matrix element.
inline BenchmarkReport benchmark_error(const CMatrix& approx, const CMatrix& exact, const CMatrix& reference) {
  if (approx.rows() != exact.rows() || approx.rows() != reference.rows()) throw Error("benchmark: dimension mismatch");
  BenchmarkReport r;
  r.fidelity_approx = bath_fidelity(approx, reference);
  r.fidelity_exact = bath_fidelity(exact, reference);
  r.relative_error = std::abs(r.fidelity_approx - r.fidelity_exact) / std::abs(r.fidelity_exact);
  r.max_element_deviation = (approx - exact).cwiseAbs().maxCoeff(&r.worst_row, &r.worst_col);
  return r;
}

}  // namespace nvreg
