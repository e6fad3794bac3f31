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
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvreg/linalg.hpp"

// Time evolution. Hamiltonians are in MHz and times in microseconds, so every
// propagator is exp(-i 2 pi H t).

namespace nvreg {

/// Free evolution t_0, pulse (theta_1, phi_1), t_1, ..., pulse (theta_K, phi_K), t_K.
struct PulseSequence {
  std::vector<double> waits_us{0.0};
  std::vector<double> angles;
  std::vector<double> phases;
  std::string label;

  [[nodiscard]] std::size_t pulse_count() const { return angles.size(); }

  [[nodiscard]] double duration() const { return std::accumulate(waits_us.begin(), waits_us.end(), 0.0); }

  /// Instant of pulse k (0-based), i.e. t_0 + ... + t_k.
  [[nodiscard]] double pulse_time(std::size_t k) const {
    return std::accumulate(waits_us.begin(), waits_us.begin() + static_cast<std::ptrdiff_t>(k) + 1, 0.0);
  }

  void validate() const {
    if (waits_us.size() != angles.size() + 1 || phases.size() != angles.size()) {
      throw Error("PulseSequence: need K+1 waits and K angles and phases");
    }
    for (double t : waits_us) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw Error("PulseSequence: waits must be finite and non-negative");
    }
    for (std::size_t k = 0; k < angles.size(); ++k) {
      if (!std::isfinite(angles[k]) || !std::isfinite(phases[k])) throw Error("PulseSequence: non-finite angle");
    }
  }
};

namespace detail {

inline void require_hermitian(const CMatrix& h) {
  if (h.rows() != h.cols()) throw Error("Hamiltonian is not square");
  const double scale = std::max(1.0, max_abs(h));
  if (hermiticity_defect(h) > 1e-10 * scale) throw Error("Hamiltonian is not Hermitian");
}

}  // namespace detail

/// Diagonalised Hamiltonian, reused for every wait segment.
class Propagator {
 public:
  explicit Propagator(const CMatrix& h) {
    detail::require_hermitian(h);
    eig_ = hermitian_eigensystem(h);
  }

  [[nodiscard]] Eigen::Index dim() const { return eig_.values.size(); }
  [[nodiscard]] const Eigensystem& eigensystem() const { return eig_; }

  /// exp(-i 2 pi E t) on the eigenvalues.
  [[nodiscard]] CVector phases(double t_us) const {
    CVector out(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) out(k) = std::polar(1.0, -kTwoPi * eig_.values(k) * t_us);
    return out;
  }

  [[nodiscard]] CMatrix unitary(double t_us) const {
    return eig_.vectors * phases(t_us).asDiagonal() * eig_.vectors.adjoint();
  }

 private:
  Eigensystem eig_;
};

inline CMatrix propagator(const CMatrix& h, double t_us) {
  if (t_us < 0.0) throw Error("propagator: negative time");
  return Propagator(h).unitary(t_us);
}

/// NV rotation exp(-i theta/2 (sigma_x cos phi + sigma_y sin phi)) on {|0>, |-1>}.
inline Eigen::Matrix2cd nv_rotation(double theta, double phi) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Eigen::Matrix2cd r;
  r << c, -kI * s * std::polar(1.0, -phi), -kI * s * std::polar(1.0, phi), c;
  return r;
}

/// Pulse on the NV (first factor, dimension 2), identity on the remaining factors.
inline CMatrix pulse_unitary(double theta, double phi, std::span<const int> factor_dims) {
  if (factor_dims.empty() || factor_dims.front() != 2) throw Error("pulse_unitary: NV must be the first factor, dimension 2");
  const auto rest = static_cast<Eigen::Index>(total_dimension(factor_dims.subspan(1)));
  return kron(CMatrix(nv_rotation(theta, phi)), CMatrix::Identity(rest, rest));
}

/// Left-multiplies the columns of `psi` by (R x 1); the NV is the leading factor.
inline void apply_nv_rotation(CMatrix& psi, const Eigen::Matrix2cd& r) {
  const Eigen::Index half = psi.rows() / 2;
  CMatrix top = psi.topRows(half);
  auto bottom = psi.bottomRows(half);
  psi.topRows(half) = r(0, 0) * top + r(0, 1) * bottom;
  psi.bottomRows(half) = r(1, 0) * top + r(1, 1) * bottom;
}

/// A weighted set of pure states stored as columns: rho = sum_j w_j |psi_j><psi_j|.
struct StateEnsemble {
  CMatrix columns;
  std::vector<double> weights;
};

/// Spectral decomposition of a density matrix into an ensemble of pure columns,
/// dropping components with weight below `cutoff`.
inline StateEnsemble ensemble_from_density(const CMatrix& rho, double cutoff = 1e-14) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho);
  StateEnsemble out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = rho.rows(); k-- > 0;) {
    if (solver.eigenvalues()(k) > cutoff) keep.push_back(k);
  }
  out.columns.resize(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.columns.col(static_cast<Eigen::Index>(j)) = solver.eigenvectors().col(keep[j]);
    out.weights.push_back(solver.eigenvalues()(keep[j]));
  }
  return out;
}

/// rho_keep = sum_j w_j tr_trailing |psi_j><psi_j|, tracing a trailing factor of dimension `traced`.
inline CMatrix reduce_ensemble(const CMatrix& columns, std::span<const double> weights, Eigen::Index traced) {
  const Eigen::Index keep = columns.rows() / traced;
  CMatrix rho = CMatrix::Zero(keep, keep);
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    // Column-major map: B(c, a) = psi(a * traced + c), so tr_trailing = (B^dag B)^T.
    Eigen::Map<const CMatrix> b(columns.col(j).data(), traced, keep);
    rho.noalias() += weights[static_cast<std::size_t>(j)] * (b.adjoint() * b).transpose();
  }
  return rho;
}

/// Walks the sequence in time order, evolving the columns of `psi` under the
/// diagonalised Hamiltonian and applying pulses instantaneously. A pulse scheduled
/// at time T acts before a sample taken at T. `on_sample(i, columns)` receives the
/// product-basis columns at sample_times[i]; sample times must be ascending.
template <class OnSample>
void propagate_columns(const Propagator& prop, const PulseSequence& seq, CMatrix psi,
                       std::span<const double> sample_times, OnSample&& on_sample) {
  seq.validate();
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) throw Error("sample times must be ascending");
  if (!sample_times.empty() && sample_times.front() < 0.0) throw Error("sample times must be non-negative");
  if (psi.rows() != prop.dim()) throw Error("state dimension does not match Hamiltonian");
  const auto& eig = prop.eigensystem();

  // Eigenbasis coordinates between events.
  CMatrix coords = eig.vectors.adjoint() * psi;
  double now = 0.0;
  auto advance = [&](double t) {
    if (t > now) coords = prop.phases(t - now).asDiagonal() * coords;
    now = t;
  };

  std::size_t next_pulse = 0;
  std::size_t next_sample = 0;
  const std::size_t pulses = seq.pulse_count();
  while (next_sample < sample_times.size()) {
    const double pulse_at = next_pulse < pulses ? seq.pulse_time(next_pulse) : 0.0;
    if (next_pulse < pulses && pulse_at <= sample_times[next_sample]) {
      advance(pulse_at);
      psi.noalias() = eig.vectors * coords;
      // Coincident pulses are applied without returning to the eigenbasis.
      while (next_pulse < pulses && seq.pulse_time(next_pulse) <= pulse_at) {
        apply_nv_rotation(psi, nv_rotation(seq.angles[next_pulse], seq.phases[next_pulse]));
        ++next_pulse;
      }
      coords.noalias() = eig.vectors.adjoint() * psi;
    } else {
      advance(sample_times[next_sample]);
      psi.noalias() = eig.vectors * coords;
      on_sample(next_sample, static_cast<const CMatrix&>(psi));
      ++next_sample;
    }
  }
}

/// S = ... U_{theta_2 phi_2} U_{t_1} U_{theta_1 phi_1} U_{t_0}, with one diagonalisation of H.
inline CMatrix sequence_unitary(const Propagator& prop, const PulseSequence& seq) {
  CMatrix out;
  const double te = seq.duration();
  propagate_columns(prop, seq, CMatrix::Identity(prop.dim(), prop.dim()), std::span<const double>(&te, 1),
                    [&](std::size_t, const CMatrix& cols) { out = cols; });
  return out;
}

inline CMatrix sequence_unitary(const CMatrix& h, const PulseSequence& seq) { return sequence_unitary(Propagator(h), seq); }

/// Density matrices at each sample time; times past the end of the sequence evolve freely.
inline std::vector<CMatrix> evolve_trajectory(const CMatrix& rho0, const Propagator& prop, const PulseSequence& seq,
                                              std::span<const double> sample_times) {
  const auto ensemble = ensemble_from_density(rho0);
  std::vector<CMatrix> out(sample_times.size());
  propagate_columns(prop, seq, ensemble.columns, sample_times, [&](std::size_t i, const CMatrix& cols) {
    out[i] = reduce_ensemble(cols, ensemble.weights, 1);
  });
  return out;
}

inline std::vector<CMatrix> evolve_trajectory(const CMatrix& rho0, const CMatrix& h, const PulseSequence& seq,
                                              std::span<const double> sample_times) {
  return evolve_trajectory(rho0, Propagator(h), seq, sample_times);
}

/// Evenly spaced sample grid from `start` to `stop` inclusive.
inline std::vector<double> time_grid(double start, double stop, std::size_t points) {
  std::vector<double> out;
  if (points == 0) return out;
  if (points == 1) return {start};
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    out.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return out;
}

}  // namespace nvreg
