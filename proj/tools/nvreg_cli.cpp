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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nvreg/nvreg.hpp"

int main(int argc, char** argv) {
  CLI::App app{"NV register simulations in a P1 spin bath"};
  app.set_version_flag("--version", std::string("nvreg ") + nvreg::kToolVersion);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned jobs = 0;
  bool paper_scale = false;

  const char* verbs[][2] = {
      {"trace", "Time trace of S_z, I_x, I_z, E_N and F_f"},
      {"histogram", "Full-fidelity statistics over random baths per density"},
      {"benchmark", "gCCE0/gCCE2 errors against the exact solution"},
      {"optimize", "Search a pulse sequence for a target process"},
      {"bath-gen", "Write random bath realizations"},
  };
  for (const auto& [name, help] : verbs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--paper-scale", paper_scale, "300 baths and 200 bath-state samples");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nvreg::kExitConfig;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    auto sc = nvreg::load_scenario(config_path);
    if (app.get_subcommands().front()->count("--seed")) sc.seed = seed;
    if (!out_dir.empty()) sc.out_dir = out_dir;
    if (jobs > 0) sc.jobs = jobs;
    if (paper_scale) sc.apply_paper_scale();
    return nvreg::run_command(verb, sc, std::cerr);
  } catch (const nvreg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nvreg::kExitConfig;
  } catch (const nvreg::GuardViolation& e) {
    std::cerr << "guard violation: " << e.what() << '\n';
    return nvreg::kExitGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nvreg::kExitFailure;
  }
}
