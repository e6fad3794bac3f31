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
#include <span>
#include <vector>

#include "nvreg/spin_model.hpp"

namespace nvreg {

namespace detail {

/// tr(a^dag b) / tr(a^dag a) with a Hilbert-Schmidt overlap.
inline double overlap_ratio(const CMatrix& reference, const CMatrix& state, const char* what) {
  if (reference.rows() != state.rows() || reference.cols() != state.cols()) {
    throw Error(std::string(what) + ": dimension mismatch");
  }
  const cplx denom = (reference.adjoint() * reference).trace();
  if (std::abs(denom) == 0.0) throw Error(std::string(what) + ": reference has zero norm");
  const cplx num = (reference.adjoint() * state).trace();
  return (num / denom).real();
}

}  // namespace detail

/// tr(rho_T^dag rho_p) / tr(rho_T^dag rho_T).
inline double process_fidelity(const CMatrix& rho_p, const CMatrix& rho_target) {
  return detail::overlap_ratio(rho_target, rho_p, "process_fidelity");
}

/// tr(rho_p^dag rho(t_e)) / tr(rho_p^dag rho_p): deviation of the dissipative state from the ideal one.
inline double bath_fidelity(const CMatrix& rho_te, const CMatrix& rho_p) {
  return detail::overlap_ratio(rho_p, rho_te, "bath_fidelity");
}

inline double full_fidelity(double process, double bath) { return process * bath; }

/// Partial transpose of `rho` over the factors listed in `transposed`.
inline CMatrix partial_transpose(const CMatrix& rho, std::span<const int> dims, std::span<const int> transposed) {
  const auto d = total_dimension(dims);
  if (static_cast<std::size_t>(rho.rows()) != d) throw Error("partial_transpose: dimension mismatch");
  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    stride[k] = s;
    s *= static_cast<std::size_t>(dims[k]);
  }
  CMatrix out(rho.rows(), rho.cols());
  for (std::size_t row = 0; row < d; ++row) {
    for (std::size_t col = 0; col < d; ++col) {
      std::size_t r2 = row;
      std::size_t c2 = col;
      for (int f : transposed) {
        const auto k = static_cast<std::size_t>(f);
        const std::size_t dk = static_cast<std::size_t>(dims[k]);
        const std::size_t ri = (row / stride[k]) % dk;
        const std::size_t ci = (col / stride[k]) % dk;
        r2 = r2 - ri * stride[k] + ci * stride[k];
        c2 = c2 - ci * stride[k] + ri * stride[k];
      }
      out(static_cast<Eigen::Index>(r2), static_cast<Eigen::Index>(c2)) =
          rho(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
  }
  return out;
}

/// Sum of singular values of a Hermitian matrix.
inline double trace_norm_hermitian(const CMatrix& m) {
  const CMatrix herm = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(herm, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().sum();
}

/// E_N = log2 || rho^{T_A} ||_1 with A the factors in `transposed`.
inline double log_negativity(const CMatrix& rho, std::span<const int> dims, std::span<const int> transposed) {
  for (int f : transposed) {
    if (f < 0 || static_cast<std::size_t>(f) >= dims.size()) throw Error("log_negativity: bad partition factor");
  }
  const double value = std::log2(trace_norm_hermitian(partial_transpose(rho, dims, transposed)));
  // Rounding only; a genuinely negative value signals a trace-deficient input.
  return value < 0.0 && value > -1e-12 ? 0.0 : value;
}

enum class Axis { X = 0, Y = 1, Z = 2 };

/// tr(rho O) for the spin component of factor `site`.
inline double expectation(const CMatrix& rho, const RegisterSpec& spec, std::size_t site, Axis axis) {
  if (site >= spec.species.size()) throw Error("expectation: site out of range");
  const auto dims = spec.dims();
  const auto ops = spec.operators(site);
  const int a = static_cast<int>(axis);
  const CMatrix op = embed(ops[a], site, dims);
  if (op.rows() != rho.rows()) throw Error("expectation: state does not match the register");
  return (rho * op).trace().real();
}

inline CMatrix projector(const CVector& psi) { return psi * psi.adjoint(); }

}  // namespace nvreg
