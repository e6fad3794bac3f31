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
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "nvreg/evolution.hpp"
#include "nvreg/metrics.hpp"

// Stochastic global search for pulse parameters: Gaussian perturbations of the
// best point so far, each refined by a Nelder-Mead simplex descent, accepted on
// strict improvement of the process fidelity.
//
// The search runs in a co-moving parameterisation. The NV precesses at
// f_ref ~ 2.47 GHz between pulses, so lab-frame phases and the final state's
// NV phase vary on a sub-nanosecond scale in the waits. Each pulse phase is
// searched relative to that precession (phi_lab = phi - 2 pi f_ref T_k) and the
// last wait is extended by less than one NV period so that the accumulated NV
// phase at t_e equals a searched angle. The returned sequence is always in
// lab-frame parameters and its fidelity is evaluated exactly.

namespace nvreg {

struct OptimizeBudget {
  std::size_t hops = 300;
  std::size_t local_evaluations = 4000;
  double target_fidelity = 0.999;
  double max_wait_us = 5.0;
  // Sequences outside [min_duration, max_duration] are penalised in proportion
  // to the excess.
  double min_duration_us = 0.0;
  double max_duration_us = 25.0;
  double wait_step_us = 0.5;
  double angle_step = 0.5;
  // Initial simplex edge lengths for the local descent.
  double simplex_wait_us = 0.2;
  double simplex_angle = 0.3;
};

struct OptimizeResult {
  PulseSequence sequence;
  double fidelity = 0.0;
  bool below_target = true;
  std::uint64_t seed = 0;
  std::size_t hops = 0;
  std::size_t evaluations = 0;
};

namespace detail {

inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

/// Triangle-wave reflection of x into [0, upper].
inline double reflect_into(double x, double upper) {
  if (upper <= 0.0) return 0.0;
  double y = std::fmod(std::abs(x), 2.0 * upper);
  return y > upper ? 2.0 * upper - y : y;
}

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Nelder-Mead minimisation with the standard coefficients (1, 2, 0.5, 0.5).
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                 const std::vector<double>& steps, std::size_t max_evaluations, double tolerance = 1e-12) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  std::size_t evals = 0;
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) {
    vals[i] = f(pts[i]);
    ++evals;
  }
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto point = [&](double coeff, const std::vector<double>& worst, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coeff * (worst[k] - centroid[k]);
  };
  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (std::abs(vals[worst] - vals[best]) <= tolerance) break;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
    }
    point(-1.0, pts[worst], trial);
    const double fr = f(trial);
    ++evals;
    if (fr < vals[best]) {
      point(-2.0, pts[worst], trial2);
      const double fe = f(trial2);
      ++evals;
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      point(outside ? -0.5 : 0.5, pts[worst], trial2);
      const double fc = f(trial2);
      ++evals;
      if (fc < std::min(fr, vals[worst])) {
        pts[worst] = trial2;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          vals[i] = f(pts[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[static_cast<std::size_t>(it - vals.begin())], *it, evals};
}

}  // namespace detail

/// Process fidelity of a sequence for the given (diagonalised) Hamiltonian.
class SequenceObjective {
 public:
  SequenceObjective(const CMatrix& h, const CMatrix& rho0, const CMatrix& rho_target, std::size_t segments,
                    double max_wait_us, double max_duration_us = 25.0, double min_duration_us = 0.0)
      : prop_(h),
        rho0_(ensemble_from_density(rho0)),
        target_(rho_target),
        segments_(segments),
        max_wait_(max_wait_us),
        max_duration_(max_duration_us),
        min_duration_(min_duration_us) {
    if (segments < 1) throw Error("optimize: need at least one segment");
    if (rho0.rows() != h.rows() || rho_target.rows() != h.rows()) throw Error("optimize: state dimension mismatch");
    target_norm_ = (rho_target.adjoint() * rho_target).trace().real();
    if (target_norm_ <= 0.0) throw Error("optimize: target has zero norm");
    reference_frequency_ = nv_reference_frequency(h, rho0);
  }

  [[nodiscard]] std::size_t dimension() const { return 3 * segments_ + 2; }
  [[nodiscard]] std::size_t segments() const { return segments_; }
  [[nodiscard]] double reference_frequency() const { return reference_frequency_; }

  /// Lab-frame sequence for internal parameters
  /// [w_0..w_K, theta_1..theta_K, phi_1..phi_K (co-moving), final NV phase].
  [[nodiscard]] PulseSequence to_sequence(const std::vector<double>& x) const {
    const std::size_t k = segments_;
    PulseSequence s;
    s.waits_us.resize(k + 1);
    s.angles.resize(k);
    s.phases.resize(k);
    const double period = reference_frequency_ > 0.0 ? 1.0 / reference_frequency_ : 0.0;
    double elapsed = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      s.waits_us[i] = detail::reflect_into(x[i], max_wait_);
      elapsed += s.waits_us[i];
      s.angles[i] = detail::wrap_angle(x[k + 1 + i]);
      s.phases[i] = detail::wrap_angle(x[2 * k + 1 + i] - kTwoPi * reference_frequency_ * elapsed);
    }
    double last = detail::reflect_into(x[k], std::max(0.0, max_wait_ - period));
    if (period > 0.0) {
      const double cycles = reference_frequency_ * (elapsed + last);
      double frac = x[3 * k + 1] / kTwoPi - cycles;
      frac -= std::floor(frac);
      last += frac * period;
    }
    s.waits_us[k] = last;
    return s;
  }

  /// Internal parameters reproducing a lab-frame sequence (inverse of to_sequence
  /// up to the reflection of out-of-range waits).
  [[nodiscard]] std::vector<double> from_sequence(const PulseSequence& s) const {
    if (s.pulse_count() != segments_) throw Error("optimize: initial sequence has the wrong number of pulses");
    const std::size_t k = segments_;
    std::vector<double> x(dimension());
    double elapsed = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = s.waits_us[i];
      elapsed += s.waits_us[i];
      x[k + 1 + i] = s.angles[i];
      x[2 * k + 1 + i] = detail::wrap_angle(s.phases[i] + kTwoPi * reference_frequency_ * elapsed);
    }
    x[k] = s.waits_us[k];
    x[3 * k + 1] = detail::wrap_angle(kTwoPi * reference_frequency_ * (elapsed + s.waits_us[k]));
    return x;
  }

  [[nodiscard]] double fidelity(const PulseSequence& s) const {
    const double te = s.duration();
    double overlap = 0.0;
    propagate_columns(prop_, s, rho0_.columns, std::span<const double>(&te, 1), [&](std::size_t, const CMatrix& cols) {
      for (Eigen::Index j = 0; j < cols.cols(); ++j) {
        overlap += rho0_.weights[static_cast<std::size_t>(j)] *
                   (cols.col(j).adjoint() * target_.adjoint() * cols.col(j))(0, 0).real();
      }
    });
    return overlap / target_norm_;
  }

  double operator()(const std::vector<double>& x) const {
    const auto s = to_sequence(x);
    const double excess = std::max(0.0, s.duration() - max_duration_) + std::max(0.0, min_duration_ - s.duration());
    return 1.0 - fidelity(s) + excess;
  }

  /// m_s = -1 minus m_s = 0 diagonal energy for the dominant basis state of rho0.
  static double nv_reference_frequency(const CMatrix& h, const CMatrix& rho0) {
    Eigen::Index dominant = 0;
    rho0.diagonal().real().maxCoeff(&dominant);
    const Eigen::Index half = h.rows() / 2;
    const Eigen::Index rest = dominant % half;
    return (h(half + rest, half + rest) - h(rest, rest)).real();
  }

 private:
  Propagator prop_;
  StateEnsemble rho0_;
  CMatrix target_;
  std::size_t segments_;
  double max_wait_;
  double max_duration_;
  double min_duration_;
  double target_norm_ = 1.0;
  double reference_frequency_ = 0.0;
};

/// Maximises the dissipation-free process fidelity over K-pulse sequences.
/// Deterministic for a given seed and budget. A run that ends below the target
/// returns its best point with `below_target` set.
inline OptimizeResult optimize_sequence(const CMatrix& h, const CMatrix& rho0, const CMatrix& rho_target,
                                        std::size_t segments, std::uint64_t seed, const OptimizeBudget& budget = {},
                                        const std::optional<PulseSequence>& initial = std::nullopt) {
  const SequenceObjective objective(h, rho0, rho_target, segments, budget.max_wait_us, budget.max_duration_us,
                                    budget.min_duration_us);
  const std::size_t n = objective.dimension();
  const std::size_t k = segments;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> steps(n, budget.simplex_angle);
  std::vector<double> kick(n, budget.angle_step);
  for (std::size_t i = 0; i <= k; ++i) {
    steps[i] = budget.simplex_wait_us;
    kick[i] = budget.wait_step_us;
  }

  std::vector<double> x0(n);
  if (initial) {
    x0 = objective.from_sequence(*initial);
  } else {
    for (std::size_t i = 0; i < n; ++i) x0[i] = i <= k ? budget.max_wait_us * unit(rng) : kTwoPi * unit(rng);
  }
  const auto f = [&](const std::vector<double>& x) { return objective(x); };

  OptimizeResult result;
  result.seed = seed;
  auto best = detail::nelder_mead(f, x0, steps, budget.local_evaluations);
  result.evaluations += best.evaluations;
  const double goal = 1.0 - budget.target_fidelity;
  std::vector<double> candidate(n);
  for (std::size_t hop = 0; hop < budget.hops && best.value > goal; ++hop) {
    for (std::size_t i = 0; i < n; ++i) candidate[i] = best.x[i] + kick[i] * gauss(rng);
    auto local = detail::nelder_mead(f, candidate, steps, budget.local_evaluations);
    result.evaluations += local.evaluations;
    ++result.hops;
    if (local.value < best.value) best = std::move(local);
  }
  // A fresh simplex around the best point often recovers a collapsed descent.
  if (best.value > goal) {
    auto polish = detail::nelder_mead(f, best.x, steps, budget.local_evaluations);
    result.evaluations += polish.evaluations;
    if (polish.value < best.value) best = std::move(polish);
  }

  result.sequence = objective.to_sequence(best.x);
  result.fidelity = objective.fidelity(result.sequence);
  result.below_target =
      result.fidelity < budget.target_fidelity || result.sequence.duration() > budget.max_duration_us ||
      result.sequence.duration() < budget.min_duration_us;
  return result;
}

}  // namespace nvreg
