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

#include "nvreg/bath.hpp"
#include "nvreg/config.hpp"
#include "nvreg/evolution.hpp"
#include "nvreg/exact.hpp"
#include "nvreg/experiments.hpp"
#include "nvreg/gcce.hpp"
#include "nvreg/hamiltonian.hpp"
#include "nvreg/linalg.hpp"
#include "nvreg/metrics.hpp"
#include "nvreg/optimize.hpp"
#include "nvreg/parallel.hpp"
#include "nvreg/presets.hpp"
#include "nvreg/spin_model.hpp"
