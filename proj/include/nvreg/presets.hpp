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
#include <string>
#include <vector>

#include "nvreg/evolution.hpp"
#include "nvreg/spin_model.hpp"

namespace nvreg {

/// Published gate programs: "bell2" (NV-13C Bell on the two-qubit register),
/// "ghz" and "bell13c" (on the 24-dim register).
inline PulseSequence preset_sequence(const std::string& name) {
  PulseSequence s;
  s.label = name;
  if (name == "bell2") {
    s.waits_us = {0.0, 4.061, 1.763, 1.276, 0.0};
    s.angles = {1.059, 3.566, 1.627, 3.360};
    s.phases = {0.669, 1.952, 0.255, 0.503};
  } else if (name == "ghz") {
    s.waits_us = {0.367, 3.648, 2.482, 2.115, 2.675, 1.296, 2.653, 3.928, 2.059};
    s.angles = {5.052, 0.146, 3.980, 1.118, 0.415, 5.398, 1.622, 1.990};
    s.phases = {6.326, 5.465, 1.965, 3.141, 5.772, 3.330, 3.212, 2.983};
  } else if (name == "bell13c") {
    s.waits_us = {0.4028, 3.492, 2.634, 2.695, 2.531, 0.854, 2.620, 3.863, 2.960};
    s.angles = {5.369, 0.515, 5.422, 1.750, 2.332, 4.820, 1.695, 1.527};
    s.phases = {6.716, 4.788, 2.692, 2.274, 5.522, 2.632, 3.376, 2.554};
  } else {
    throw Error("unknown pulse preset '" + name + "' (expected bell2, ghz or bell13c)");
  }
  return s;
}

/// Product basis vector; `indices[k]` is the level of factor k
/// (NV: 0 = m_s 0, 1 = m_s -1; spin-1/2: 0 = up; nitrogen: 0 = m_N +1).
inline CVector product_state(const RegisterSpec& spec, const std::vector<int>& indices) {
  const auto dims = spec.dims();
  if (indices.size() != dims.size()) throw Error("product_state: one level per factor required");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= dims[k]) throw Error("product_state: level out of range");
    idx = idx * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(indices[k]);
  }
  CVector v = CVector::Zero(static_cast<Eigen::Index>(total_dimension(dims)));
  v(static_cast<Eigen::Index>(idx)) = 1.0;
  return v;
}

/// |0>_NV x |+1/2> for every carbon x |+1> nitrogen.
inline CVector initial_state(const RegisterSpec& spec) {
  return product_state(spec, std::vector<int>(spec.species.size(), 0));
}

namespace detail {

inline bool is_two_qubit(const RegisterSpec& spec) {
  return spec.species.size() == 2 && spec.species[1].kind == SpinKind::Carbon13;
}

inline bool is_full_register(const RegisterSpec& spec) {
  return spec.species.size() == 4 && spec.species[1].kind == SpinKind::Carbon13 &&
         spec.species[2].kind == SpinKind::Carbon13 && spec.species[3].kind == SpinKind::NitrogenNuclear;
}

}  // namespace detail

/// Target states for the named processes:
///   bell2:   (|0,up> + |-1,down>)/sqrt2                  (two-qubit register)
///   ghz:     (|0,up,up> + |-1,down,down>)/sqrt2 x |+1>_N  (full register)
///   bell13c: |0> x (|up,up> + |down,down>)/sqrt2 x |+1>_N (full register)
inline CVector target_state(const std::string& name, const RegisterSpec& spec) {
  const double r = 1.0 / std::sqrt(2.0);
  if (name == "bell2") {
    if (!detail::is_two_qubit(spec)) throw Error("target bell2 needs the two-qubit register");
    return r * (product_state(spec, {0, 0}) + product_state(spec, {1, 1}));
  }
  if (name == "ghz") {
    if (!detail::is_full_register(spec)) throw Error("target ghz needs the full register");
    return r * (product_state(spec, {0, 0, 0, 0}) + product_state(spec, {1, 1, 1, 0}));
  }
  if (name == "bell13c") {
    if (!detail::is_full_register(spec)) throw Error("target bell13c needs the full register");
    return r * (product_state(spec, {0, 0, 0, 0}) + product_state(spec, {0, 1, 1, 0}));
  }
  throw Error("unknown target '" + name + "' (expected bell2, ghz or bell13c)");
}

}  // namespace nvreg
