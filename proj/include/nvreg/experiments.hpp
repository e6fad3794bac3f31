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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nvreg/bath.hpp"
#include "nvreg/config.hpp"
#include "nvreg/exact.hpp"
#include "nvreg/gcce.hpp"
#include "nvreg/hamiltonian.hpp"
#include "nvreg/metrics.hpp"
#include "nvreg/optimize.hpp"
#include "nvreg/parallel.hpp"
#include "nvreg/presets.hpp"

#ifndef NVREG_VERSION
#define NVREG_VERSION "0.1.0"
#endif

namespace nvreg {

inline constexpr const char* kToolVersion = NVREG_VERSION;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitGuard = 3, kExitBelowTarget = 4 };

// ---------------------------------------------------------------------------
// Scenario description

struct PulseRequest {
  enum class Source { Preset, Table, File, Optimize };
  Source source = Source::Preset;
  std::string preset = "bell2";
  PulseSequence table;
  std::string file;
  // Optimizer settings (Source::Optimize and the optimize command).
  std::size_t segments = 4;
  std::uint64_t seed = 1;
  OptimizeBudget budget;
  std::string warm_start;
};

struct ScenarioConfig {
  std::string register_kind = "two-qubit";
  PhysicalConstants constants;

  ShellSpec shell{30.0, 60.0, 0.0};
  std::vector<double> densities_ppb;
  std::optional<std::size_t> spins;
  std::size_t baths = 30;
  bool poisson = false;
  bool close_pair = false;
  ClosePairSpec pair;

  PulseRequest pulses;

  GcceConfig gcce;
  // Trace rows per entry: "0", "1", "2", ..., or "exact".
  std::vector<std::string> orders{"0"};

  std::string target = "bell2";
  std::uint64_t seed = 0;
  std::optional<double> t_end_us;
  double post_gate_us = 10.0;
  std::size_t points = 201;
  double time_us = 20.0;
  std::size_t trace_points = 1;
  double bin_width = 0.001;
  std::string out_dir = ".";
  unsigned jobs = 1;

  std::uint64_t config_hash = 0;
  std::string origin;

  [[nodiscard]] bool has_bath() const {
    if (spins) return *spins > 0;
    return !densities_ppb.empty();
  }

  void apply_paper_scale() {
    baths = 300;
    gcce.samples = 200;
  }
};

namespace detail {

inline bool is_target_name(const std::string& s) { return s == "bell2" || s == "ghz" || s == "bell13c"; }

inline std::string resolve_path(const std::string& path, const std::string& origin) {
  std::filesystem::path p(path);
  if (p.is_absolute() || origin.empty() || origin.front() == '<') return path;
  return (std::filesystem::path(origin).parent_path() / p).string();
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const Config& cfg) {
  cfg.restrict_sections({"register", "bath", "pulses", "gcce", "experiment"});
  ScenarioConfig sc;
  sc.origin = cfg.origin();
  sc.config_hash = cfg.hash();

  // [pulses]
  auto& pr = sc.pulses;
  const bool has_preset = cfg.has("pulses", "preset");
  const bool has_table = cfg.has("pulses", "t") || cfg.has("pulses", "theta") || cfg.has("pulses", "phi");
  const bool has_file = cfg.has("pulses", "file");
  const bool optimize = cfg.get_bool("pulses", "optimize", false);
  if (has_preset + has_table + has_file + optimize > 1) {
    cfg.fail(cfg.line_of("pulses", has_preset ? "preset" : "file"),
             "[pulses] takes exactly one of preset, t/theta/phi rows, file or optimize = true");
  }
  pr.preset = cfg.get_string("pulses", "preset", "bell2");
  if (has_preset) {
    pr.source = PulseRequest::Source::Preset;
    try {
      (void)preset_sequence(pr.preset);
    } catch (const Error& e) {
      cfg.fail(cfg.line_of("pulses", "preset"), e.what());
    }
  } else if (has_table) {
    pr.source = PulseRequest::Source::Table;
    pr.table.waits_us = cfg.get_doubles("pulses", "t", {});
    pr.table.angles = cfg.get_doubles("pulses", "theta", {});
    pr.table.phases = cfg.get_doubles("pulses", "phi", {});
    pr.table.label = "table";
    try {
      pr.table.validate();
    } catch (const Error& e) {
      cfg.fail(cfg.line_of("pulses", "t"), e.what());
    }
  } else if (has_file) {
    pr.source = PulseRequest::Source::File;
    pr.file = detail::resolve_path(cfg.get_string("pulses", "file", ""), cfg.origin());
  } else if (optimize) {
    pr.source = PulseRequest::Source::Optimize;
  }
  pr.segments = cfg.get_u64("pulses", "segments", 0);
  pr.seed = cfg.get_u64("pulses", "seed", 1);
  pr.budget.hops = cfg.get_u64("pulses", "hops", pr.budget.hops);
  pr.budget.local_evaluations = cfg.get_u64("pulses", "local_evaluations", pr.budget.local_evaluations);
  pr.budget.target_fidelity = cfg.get_double("pulses", "target_fidelity", 0.0);
  pr.budget.max_wait_us = cfg.get_double("pulses", "max_wait_us", pr.budget.max_wait_us);
  pr.budget.max_duration_us = cfg.get_double("pulses", "max_duration_us", pr.budget.max_duration_us);
  pr.budget.min_duration_us = cfg.get_double("pulses", "min_duration_us", pr.budget.min_duration_us);
  if (!(pr.budget.min_duration_us <= pr.budget.max_duration_us)) {
    cfg.fail(cfg.line_of("pulses", "min_duration_us"), "min_duration_us exceeds max_duration_us");
  }
  pr.warm_start = cfg.get_string("pulses", "warm_start", "");
  if (!pr.warm_start.empty()) {
    try {
      (void)preset_sequence(pr.warm_start);
    } catch (const Error& e) {
      cfg.fail(cfg.line_of("pulses", "warm_start"), e.what());
    }
  }

  // [experiment]
  if (!cfg.has("experiment", "seed")) throw ConfigError(cfg.origin() + ": [experiment] seed is required");
  sc.seed = cfg.get_u64("experiment", "seed", 0);
  std::string default_target = "bell2";
  if (has_preset && detail::is_target_name(pr.preset)) default_target = pr.preset;
  sc.target = cfg.get_string("experiment", "target", default_target);
  if (!detail::is_target_name(sc.target)) {
    cfg.fail(cfg.line_of("experiment", "target"), "target must be bell2, ghz or bell13c, got '" + sc.target + "'");
  }
  if (cfg.has("experiment", "t_end_us")) sc.t_end_us = cfg.get_double("experiment", "t_end_us", 0.0);
  sc.post_gate_us = cfg.get_double("experiment", "post_gate_us", sc.post_gate_us);
  sc.points = cfg.get_u64("experiment", "points", sc.points);
  sc.time_us = cfg.get_double("experiment", "time_us", sc.time_us);
  sc.trace_points = cfg.get_u64("experiment", "trace_points", sc.trace_points);
  sc.bin_width = cfg.get_double("experiment", "bin_width", sc.bin_width);
  sc.out_dir = cfg.get_string("experiment", "out", sc.out_dir);
  sc.jobs = static_cast<unsigned>(cfg.get_u64("experiment", "jobs", 1));
  if (sc.points < 1) cfg.fail(cfg.line_of("experiment", "points"), "points must be at least 1");
  if (sc.trace_points < 1) cfg.fail(cfg.line_of("experiment", "trace_points"), "trace_points must be at least 1");
  if (!(sc.bin_width > 0.0)) cfg.fail(cfg.line_of("experiment", "bin_width"), "bin_width must be positive");
  if (!(sc.time_us >= 0.0)) cfg.fail(cfg.line_of("experiment", "time_us"), "time_us must be non-negative");
  if (!(sc.post_gate_us >= 0.0)) cfg.fail(cfg.line_of("experiment", "post_gate_us"), "post_gate_us must be non-negative");
  if (sc.t_end_us && !(*sc.t_end_us >= 0.0)) cfg.fail(cfg.line_of("experiment", "t_end_us"), "t_end_us must be non-negative");

  if (pr.segments == 0) pr.segments = sc.target == "bell2" ? 4 : 8;
  if (pr.budget.target_fidelity == 0.0) {
    pr.budget.target_fidelity = sc.target == "bell2" ? 0.999 : (sc.target == "ghz" ? 0.995 : 0.996);
  }

  // [register]
  sc.register_kind = cfg.get_string("register", "kind", sc.target == "bell2" ? "two-qubit" : "full");
  if (sc.register_kind != "two-qubit" && sc.register_kind != "full") {
    cfg.fail(cfg.line_of("register", "kind"), "register kind must be two-qubit or full");
  }
  sc.constants.field_gauss = cfg.get_double("register", "field_gauss", sc.constants.field_gauss);
  if ((sc.target == "bell2") != (sc.register_kind == "two-qubit")) {
    cfg.fail(cfg.line_of("register", "kind"), "target " + sc.target + " does not match the " + sc.register_kind +
                                                  " register");
  }

  // [bath]
  sc.shell.r_min_nm = cfg.get_double("bath", "r_min_nm", sc.shell.r_min_nm);
  sc.shell.r_max_nm = cfg.get_double("bath", "r_max_nm", sc.shell.r_max_nm);
  if (!(sc.shell.r_min_nm > 0.0 && sc.shell.r_min_nm < sc.shell.r_max_nm)) {
    cfg.fail(cfg.line_of("bath", "r_min_nm"), "need 0 < r_min_nm < r_max_nm");
  }
  sc.densities_ppb = cfg.get_doubles("bath", "density_ppb", {});
  for (double d : sc.densities_ppb) {
    if (!(d > 0.0)) cfg.fail(cfg.line_of("bath", "density_ppb"), "densities must be positive");
  }
  if (cfg.has("bath", "spins")) sc.spins = cfg.get_u64("bath", "spins", 0);
  sc.baths = cfg.get_u64("bath", "baths", sc.baths);
  if (sc.baths < 1) cfg.fail(cfg.line_of("bath", "baths"), "baths must be at least 1");
  sc.poisson = cfg.get_bool("bath", "poisson", false);
  sc.close_pair = cfg.get_bool("bath", "close_pair", false);
  sc.pair.pair_r_min_nm = cfg.get_double("bath", "pair_r_min_nm", sc.pair.pair_r_min_nm);
  sc.pair.pair_r_max_nm = cfg.get_double("bath", "pair_r_max_nm", sc.pair.pair_r_max_nm);
  sc.pair.min_separation_nm = cfg.get_double("bath", "pair_min_separation_nm", sc.pair.min_separation_nm);
  sc.pair.max_separation_nm = cfg.get_double("bath", "pair_max_separation_nm", sc.pair.max_separation_nm);
  if (sc.close_pair) {
    try {
      sc.pair.validate(sc.shell);
    } catch (const Error& e) {
      cfg.fail(cfg.line_of("bath", "close_pair"), e.what());
    }
  }

  // [gcce]
  sc.orders = cfg.get_strings("gcce", "order", {"0"});
  for (const auto& o : sc.orders) {
    if (o == "exact") continue;
    if (o.empty() || o.find_first_not_of("0123456789") != std::string::npos) {
      cfg.fail(cfg.line_of("gcce", "order"), "order entries must be non-negative integers or 'exact', got '" + o + "'");
    }
  }
  sc.gcce.samples = cfg.get_u64("gcce", "samples", sc.gcce.samples);
  sc.gcce.pair_d1_nm = cfg.get_double("gcce", "pair_d1_nm", sc.gcce.pair_d1_nm);
  sc.gcce.pair_d2_nm = cfg.get_double("gcce", "pair_d2_nm", sc.gcce.pair_d2_nm);
  sc.gcce.ratio_floor = cfg.get_double("gcce", "ratio_floor", sc.gcce.ratio_floor);
  sc.gcce.enumerate_max_spins = cfg.get_u64("gcce", "enumerate_max_spins", sc.gcce.enumerate_max_spins);
  try {
    sc.gcce.validate();
  } catch (const Error& e) {
    cfg.fail(cfg.line_of("gcce", "pair_d1_nm"), e.what());
  }

  cfg.reject_unused();
  return sc;
}

inline ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(Config::load(path)); }

inline RegisterSpec scenario_register(const ScenarioConfig& sc) {
  return sc.register_kind == "full" ? default_register(sc.constants) : two_qubit_register(sc.constants);
}

// ---------------------------------------------------------------------------
// CSV helpers

struct CsvMeta {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_csv_header(std::ostream& os, const CsvMeta& meta) {
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(meta.config_hash));
  os << "# tool: nvreg " << kToolVersion << '\n';
  os << "# command: " << meta.command << '\n';
  os << "# config_hash: " << hash << '\n';
  os << "# seed: " << meta.seed << '\n';
}

/// Table-layout pulse file: rows t (K+1 waits, us), theta (rad), phi (rad).
inline void write_sequence_csv(std::ostream& os, const PulseSequence& seq) {
  auto row = [&](const char* name, const std::vector<double>& v) {
    os << name;
    for (double x : v) os << ',' << format_double(x);
    os << '\n';
  };
  row("t", seq.waits_us);
  row("theta", seq.angles);
  row("phi", seq.phases);
}

inline PulseSequence read_sequence_csv(std::istream& is, const std::string& origin = "<sequence>") {
  PulseSequence seq;
  seq.label = origin;
  bool t = false, th = false, ph = false;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto items = detail::split_list(body);
    const std::string name = items.front();
    std::vector<double> values;
    for (std::size_t k = 1; k < items.size(); ++k) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(items[k], &used));
        if (used != items[k].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad number '" + items[k] + "'");
      }
    }
    if (name == "t") {
      seq.waits_us = values;
      t = true;
    } else if (name == "theta") {
      seq.angles = values;
      th = true;
    } else if (name == "phi") {
      seq.phases = values;
      ph = true;
    } else {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown row '" + name + "'");
    }
  }
  if (!(t && th && ph)) throw ConfigError(origin + ": pulse file needs t, theta and phi rows");
  try {
    seq.validate();
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return seq;
}

namespace detail {

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Pearson correlation; NaN when either series is constant or too short.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double ma = detail::mean_of(a);
  const double mb = detail::mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Shared pieces

struct Logger {
  std::ostream* os = nullptr;
  template <class T>
  Logger& operator<<(const T& v) {
    if (os) *os << v;
    return *this;
  }
};

/// The pulse sequence a scenario asks for; optimizer requests run here.
inline PulseSequence resolve_sequence(const ScenarioConfig& sc, const RegisterSpec& spec, OptimizeResult* report = nullptr,
                                      Logger log = {}) {
  const auto& pr = sc.pulses;
  switch (pr.source) {
    case PulseRequest::Source::Preset: return preset_sequence(pr.preset);
    case PulseRequest::Source::Table: return pr.table;
    case PulseRequest::Source::File: {
      std::ifstream in(pr.file);
      if (!in) throw ConfigError(sc.origin + ": cannot open pulse file " + pr.file);
      return read_sequence_csv(in, pr.file);
    }
    case PulseRequest::Source::Optimize: break;
  }
  const CMatrix h = register_hamiltonian(spec);
  std::optional<PulseSequence> warm;
  if (!pr.warm_start.empty()) warm = preset_sequence(pr.warm_start);
  auto res = optimize_sequence(h, projector(initial_state(spec)), projector(target_state(sc.target, spec)),
                               pr.segments, pr.seed, pr.budget, warm);
  log << "optimized " << sc.target << ": F_p = " << format_double(res.fidelity) << ", t_e = "
      << format_double(res.sequence.duration()) << " us\n";
  res.sequence.label = sc.target;
  if (report) *report = res;
  return res.sequence;
}

inline std::size_t scenario_spin_count(const ScenarioConfig& sc, double density_ppb) {
  if (sc.spins) return *sc.spins;
  return spin_count(ShellSpec{sc.shell.r_min_nm, sc.shell.r_max_nm, density_ppb}, sc.constants);
}

/// Realization `index` for density slot `slot`; seeded from (master, slot, index).
inline BathRealization scenario_bath(const ScenarioConfig& sc, const RegisterSpec& spec, std::size_t slot,
                                     std::size_t index, std::uint64_t* seed_out = nullptr) {
  const std::uint64_t seed = derive_seed(sc.seed, slot + 1, index);
  if (seed_out) *seed_out = seed;
  std::mt19937_64 rng(seed);
  const double density = slot < sc.densities_ppb.size() ? sc.densities_ppb[slot] : 0.0;
  if (sc.close_pair) {
    return sample_close_pair_bath(sc.shell, sc.pair, scenario_spin_count(sc, density), spec, rng);
  }
  if (sc.spins || !sc.poisson) {
    return make_realization(sample_shell_positions(sc.shell, scenario_spin_count(sc, density), rng), spec);
  }
  return sample_bath_realization(ShellSpec{sc.shell.r_min_nm, sc.shell.r_max_nm, density}, spec, rng, true);
}

// ---------------------------------------------------------------------------
// trace

struct TraceRow {
  std::string order;
  double time_us = 0.0;
  double s_z_nv = 0.0;
  double i_x_c1 = 0.0;
  double i_z_c1 = 0.0;
  double e_n = 0.0;
  double f_f = 0.0;
};

struct TraceResult {
  PulseSequence sequence;
  std::size_t bath_spins = 0;
  std::vector<TraceRow> rows;
  double max_trace_drift = 0.0;
};

inline TraceResult run_trace(const ScenarioConfig& sc, Logger log = {}) {
  const auto spec = scenario_register(sc);
  TraceResult out;
  out.sequence = resolve_sequence(sc, spec, nullptr, log);
  const double t_end = sc.t_end_us.value_or(out.sequence.duration() + sc.post_gate_us);
  auto times = time_grid(0.0, t_end, sc.points);
  // The end of the gate is always sampled.
  const double te = out.sequence.duration();
  if (te <= t_end && std::find(times.begin(), times.end(), te) == times.end()) {
    times.insert(std::upper_bound(times.begin(), times.end(), te), te);
  }
  const CMatrix rho0 = projector(initial_state(spec));
  const auto ideal = evolve_trajectory(rho0, register_hamiltonian(spec), out.sequence, times);
  const auto dims = spec.dims();
  const int c1[] = {1};

  auto emit = [&](const std::string& tag, const std::vector<CMatrix>& states) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto& r = states[i];
      out.rows.push_back({tag, times[i], expectation(r, spec, 0, Axis::Z), expectation(r, spec, 1, Axis::X),
                          expectation(r, spec, 1, Axis::Z), log_negativity(r, dims, c1), bath_fidelity(r, ideal[i])});
    }
  };
  emit("unitary", ideal);

  if (sc.has_bath()) {
    const auto bath = scenario_bath(sc, spec, 0, 0);
    out.bath_spins = bath.size();
    const std::uint64_t state_seed = derive_seed(sc.seed, 0, 1);
    for (const auto& order : sc.orders) {
      if (order == "exact") {
        ExactMode mode;
        mode.samples = sc.gcce.samples;
        mode.seed = state_seed;
        emit("exact", exact_evolve(rho0, spec, bath, out.sequence, mode, times));
        continue;
      }
      GcceConfig g = sc.gcce;
      g.order = std::stoi(order);
      g.jobs = sc.jobs;
      const auto res = gcce_by_order(rho0, spec, bath, out.sequence, g, state_seed, times);
      out.max_trace_drift = std::max(out.max_trace_drift, res.max_trace_drift());
      emit("gcce" + order, res.states);
    }
  }
  return out;
}

inline void write_trace_csv(std::ostream& os, const TraceResult& tr, const CsvMeta& meta) {
  write_csv_header(os, meta);
  os << "# bath_spins: " << tr.bath_spins << '\n';
  os << "order,time_us,S_z_NV,I_x_C1,I_z_C1,E_N,F_f\n";
  for (const auto& r : tr.rows) {
    os << r.order << ',' << format_double(r.time_us) << ',' << format_double(r.s_z_nv) << ','
       << format_double(r.i_x_c1) << ',' << format_double(r.i_z_c1) << ',' << format_double(r.e_n) << ','
       << format_double(r.f_f) << '\n';
  }
}

// ---------------------------------------------------------------------------
// histogram

struct HistogramRecord {
  double density_ppb = 0.0;
  std::size_t bath = 0;
  std::uint64_t seed = 0;
  std::size_t spins = 0;
  double f_p = 0.0;
  double f_f = 0.0;
  double f = 0.0;
  double trace_drift = 0.0;
  double wall_s = 0.0;
};

struct HistogramSummary {
  double density_ppb = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

struct HistogramBin {
  double density_ppb = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct HistogramResult {
  PulseSequence sequence;
  double f_p = 0.0;
  std::vector<HistogramRecord> records;
  std::vector<HistogramSummary> summaries;
  std::vector<HistogramBin> bins;

  [[nodiscard]] const HistogramSummary& summary_for(double density) const {
    for (const auto& s : summaries) {
      if (s.density_ppb == density) return s;
    }
    throw Error("no summary for that density");
  }
};

inline HistogramResult run_histogram(const ScenarioConfig& sc, Logger log = {}) {
  if (sc.densities_ppb.empty()) throw ConfigError(sc.origin + ": histogram needs [bath] density_ppb");
  const auto spec = scenario_register(sc);
  HistogramResult out;
  out.sequence = resolve_sequence(sc, spec, nullptr, log);
  const double te = out.sequence.duration();
  const CMatrix rho0 = projector(initial_state(spec));
  const CMatrix rho_p = evolve_trajectory(rho0, register_hamiltonian(spec), out.sequence, std::span(&te, 1)).front();
  out.f_p = process_fidelity(rho_p, projector(target_state(sc.target, spec)));

  GcceConfig g = sc.gcce;
  std::size_t numeric_orders = 0;
  for (const auto& o : sc.orders) {
    if (o == "exact") throw ConfigError(sc.origin + ": histogram does not support the exact order");
    g.order = std::stoi(o);
    ++numeric_orders;
  }
  if (numeric_orders != 1) throw ConfigError(sc.origin + ": histogram needs exactly one gcce order");
  g.jobs = 1;

  const std::size_t nd = sc.densities_ppb.size();
  out.records.resize(nd * sc.baths);
  parallel_for(out.records.size(), sc.jobs, [&](std::size_t task) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t slot = task / sc.baths;
    const std::size_t b = task % sc.baths;
    auto& rec = out.records[task];
    rec.density_ppb = sc.densities_ppb[slot];
    rec.bath = b;
    const auto bath = scenario_bath(sc, spec, slot, b, &rec.seed);
    rec.spins = bath.size();
    const auto res = gcce_by_order(rho0, spec, bath, out.sequence, g, derive_seed(rec.seed, 1), std::span(&te, 1));
    rec.f_p = out.f_p;
    rec.f_f = bath_fidelity(res.states.front(), rho_p);
    rec.f = full_fidelity(rec.f_p, rec.f_f);
    rec.trace_drift = res.max_trace_drift();
    if (!std::isfinite(rec.f_f)) throw Error("histogram: non-finite fidelity for bath " + std::to_string(b));
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t slot = 0; slot < nd; ++slot) {
    std::vector<double> ff;
    for (std::size_t b = 0; b < sc.baths; ++b) ff.push_back(out.records[slot * sc.baths + b].f_f);
    HistogramSummary s;
    s.density_ppb = sc.densities_ppb[slot];
    s.count = ff.size();
    s.mean = detail::mean_of(ff);
    s.stddev = detail::stddev_of(ff);
    s.p05 = detail::percentile(ff, 0.05);
    s.p50 = detail::percentile(ff, 0.50);
    s.p95 = detail::percentile(ff, 0.95);
    out.summaries.push_back(s);
    const auto [mn, mx] = std::minmax_element(ff.begin(), ff.end());
    const auto k0 = static_cast<long long>(std::floor(*mn / sc.bin_width));
    const auto k1 = static_cast<long long>(std::floor(*mx / sc.bin_width));
    for (long long k = k0; k <= k1; ++k) {
      HistogramBin bin{s.density_ppb, static_cast<double>(k) * sc.bin_width, static_cast<double>(k + 1) * sc.bin_width, 0};
      for (double v : ff) bin.count += static_cast<long long>(std::floor(v / sc.bin_width)) == k ? 1U : 0U;
      out.bins.push_back(bin);
    }
  }
  return out;
}

inline void write_histogram_csv(std::ostream& os, const HistogramResult& hr, const CsvMeta& meta) {
  write_csv_header(os, meta);
  os << "# F_p: " << format_double(hr.f_p) << '\n';
  os << "kind,density_ppb,bath,seed,spins,F_p,F_f,F,trace_drift,count,mean,std,p05,p50,p95,bin_lo,bin_hi\n";
  for (const auto& r : hr.records) {
    os << "record," << format_double(r.density_ppb) << ',' << r.bath << ',' << r.seed << ',' << r.spins << ','
       << format_double(r.f_p) << ',' << format_double(r.f_f) << ',' << format_double(r.f) << ','
       << format_double(r.trace_drift) << ",,,,,,,,\n";
  }
  for (const auto& s : hr.summaries) {
    os << "summary," << format_double(s.density_ppb) << ",,,,,,,," << s.count << ',' << format_double(s.mean) << ','
       << format_double(s.stddev) << ',' << format_double(s.p05) << ',' << format_double(s.p50) << ','
       << format_double(s.p95) << ",,\n";
  }
  for (const auto& b : hr.bins) {
    os << "bin," << format_double(b.density_ppb) << ",,,,,,,," << b.count << ",,,,,," << format_double(b.lo) << ','
       << format_double(b.hi) << '\n';
  }
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkRecord {
  std::size_t bath = 0;
  std::uint64_t seed = 0;
  std::size_t spins = 0;
  std::size_t pairs = 0;
  bool skipped = false;
  std::string note;
  double f_f_exact = 0.0;
  double f_f_gcce0 = 0.0;
  double f_f_gcce2 = 0.0;
  double error_gcce0 = 0.0;
  double error_gcce2 = 0.0;
  double relative_error_gcce0 = 0.0;
  double relative_error_gcce2 = 0.0;
  // Pearson correlation of the E_N trace with the exact one (NaN for a single time).
  double corr_gcce0 = std::numeric_limits<double>::quiet_NaN();
  double corr_gcce2 = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0.0;
};

struct BenchmarkResult {
  PulseSequence sequence;
  std::vector<BenchmarkRecord> records;
  double mean_error_gcce0 = 0.0;
  double mean_error_gcce2 = 0.0;
  double mean_corr_gcce0 = std::numeric_limits<double>::quiet_NaN();
  double mean_corr_gcce2 = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluated = 0;
};

inline BenchmarkResult run_benchmark(const ScenarioConfig& sc, Logger log = {}) {
  const auto spec = scenario_register(sc);
  BenchmarkResult out;
  out.sequence = resolve_sequence(sc, spec, nullptr, log);
  const auto times = sc.trace_points > 1 ? time_grid(0.0, sc.time_us, sc.trace_points) : std::vector<double>{sc.time_us};
  const CMatrix rho0 = projector(initial_state(spec));
  const auto ideal = evolve_trajectory(rho0, register_hamiltonian(spec), out.sequence, times);
  const auto dims = spec.dims();
  const int c1[] = {1};
  auto negativity = [&](const std::vector<CMatrix>& states) {
    std::vector<double> v;
    for (const auto& s : states) v.push_back(log_negativity(s, dims, c1));
    return v;
  };

  GcceConfig g = sc.gcce;
  g.jobs = 1;
  out.records.resize(sc.baths);
  parallel_for(sc.baths, sc.jobs, [&](std::size_t b) {
    const auto start = std::chrono::steady_clock::now();
    auto& rec = out.records[b];
    rec.bath = b;
    const auto bath = scenario_bath(sc, spec, 0, b, &rec.seed);
    rec.spins = bath.size();
    const auto pairs = select_pairs(bath, g.pair_d1_nm, g.pair_d2_nm);
    rec.pairs = pairs.clusters.size();
    std::vector<CMatrix> exact;
    try {
      ExactMode mode;
      mode.samples = g.samples;
      mode.seed = derive_seed(rec.seed, 2);
      exact = exact_evolve(rho0, spec, bath, out.sequence, mode, times);
    } catch (const GuardViolation& e) {
      rec.skipped = true;
      rec.note = e.what();
      return;
    }
    const std::uint64_t state_seed = derive_seed(rec.seed, 1);
    const auto g0 = gcce0(rho0, spec, bath, out.sequence, g, state_seed, times);
    const auto g2 = gcce2(rho0, spec, bath, out.sequence, g, pairs, state_seed, times);
    rec.f_f_exact = bath_fidelity(exact.back(), ideal.back());
    rec.f_f_gcce0 = bath_fidelity(g0.states.back(), ideal.back());
    rec.f_f_gcce2 = bath_fidelity(g2.states.back(), ideal.back());
    rec.error_gcce0 = std::abs(rec.f_f_gcce0 - rec.f_f_exact);
    rec.error_gcce2 = std::abs(rec.f_f_gcce2 - rec.f_f_exact);
    rec.relative_error_gcce0 = rec.error_gcce0 / std::abs(rec.f_f_exact);
    rec.relative_error_gcce2 = rec.error_gcce2 / std::abs(rec.f_f_exact);
    if (times.size() > 1) {
      const auto en_exact = negativity(exact);
      rec.corr_gcce0 = pearson(negativity(g0.states), en_exact);
      rec.corr_gcce2 = pearson(negativity(g2.states), en_exact);
    }
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::vector<double> e0, e2, c0, c2;
  for (const auto& r : out.records) {
    if (r.skipped) {
      log << "bath " << r.bath << " skipped: " << r.note << '\n';
      continue;
    }
    e0.push_back(r.error_gcce0);
    e2.push_back(r.error_gcce2);
    if (!std::isnan(r.corr_gcce0)) c0.push_back(r.corr_gcce0);
    if (!std::isnan(r.corr_gcce2)) c2.push_back(r.corr_gcce2);
  }
  out.evaluated = e0.size();
  out.mean_error_gcce0 = e0.empty() ? 0.0 : detail::mean_of(e0);
  out.mean_error_gcce2 = e2.empty() ? 0.0 : detail::mean_of(e2);
  if (!c0.empty()) out.mean_corr_gcce0 = detail::mean_of(c0);
  if (!c2.empty()) out.mean_corr_gcce2 = detail::mean_of(c2);
  return out;
}

inline void write_benchmark_csv(std::ostream& os, const BenchmarkResult& br, const CsvMeta& meta, double time_us) {
  write_csv_header(os, meta);
  os << "# time_us: " << format_double(time_us) << '\n';
  os << "kind,bath,seed,spins,pairs,F_f_exact,F_f_gcce0,F_f_gcce2,error_gcce0,error_gcce2,rel_error_gcce0,"
        "rel_error_gcce2,corr_E_N_gcce0,corr_E_N_gcce2,note\n";
  for (const auto& r : br.records) {
    os << "record," << r.bath << ',' << r.seed << ',' << r.spins << ',' << r.pairs << ',';
    if (r.skipped) {
      os << ",,,,,,,,," << '"' << r.note << '"' << '\n';
      continue;
    }
    os << format_double(r.f_f_exact) << ',' << format_double(r.f_f_gcce0) << ',' << format_double(r.f_f_gcce2) << ','
       << format_double(r.error_gcce0) << ',' << format_double(r.error_gcce2) << ','
       << format_double(r.relative_error_gcce0) << ',' << format_double(r.relative_error_gcce2) << ','
       << format_double(r.corr_gcce0) << ',' << format_double(r.corr_gcce2) << ",\n";
  }
  os << "summary,,," << br.evaluated << ",,,,," << format_double(br.mean_error_gcce0) << ','
     << format_double(br.mean_error_gcce2) << ",,," << format_double(br.mean_corr_gcce0) << ','
     << format_double(br.mean_corr_gcce2) << ",mean\n";
}

// ---------------------------------------------------------------------------
// optimize and bath-gen

inline OptimizeResult run_optimize(const ScenarioConfig& sc, Logger log = {}) {
  ScenarioConfig copy = sc;
  copy.pulses.source = PulseRequest::Source::Optimize;
  OptimizeResult res;
  (void)resolve_sequence(copy, scenario_register(sc), &res, log);
  return res;
}

inline void write_optimize_report(std::ostream& os, const OptimizeResult& r, const ScenarioConfig& sc,
                                  const CsvMeta& meta) {
  write_csv_header(os, meta);
  os << "target,segments,optimizer_seed,F_p,t_e_us,target_fidelity,below_target,hops,evaluations\n";
  os << sc.target << ',' << sc.pulses.segments << ',' << r.seed << ',' << format_double(r.fidelity) << ','
     << format_double(r.sequence.duration()) << ',' << format_double(sc.pulses.budget.target_fidelity) << ','
     << (r.below_target ? 1 : 0) << ',' << r.hops << ',' << r.evaluations << '\n';
}

// ---------------------------------------------------------------------------
// Command dispatch: writes CSV files into sc.out_dir and returns an exit code.

inline int run_command(const std::string& verb, const ScenarioConfig& sc, std::ostream& log_stream) {
  Logger log{&log_stream};
  const CsvMeta meta{verb, sc.config_hash, sc.seed};
  const auto timing = [&](const std::string& name, const std::vector<double>& wall) {
    auto os = detail::open_output(sc.out_dir, name);
    os << "task,wall_s\n";
    for (std::size_t i = 0; i < wall.size(); ++i) os << i << ',' << format_double(wall[i]) << '\n';
  };
  if (verb == "trace") {
    const auto tr = run_trace(sc, log);
    auto os = detail::open_output(sc.out_dir, "trace.csv");
    write_trace_csv(os, tr, meta);
    log << "wrote " << (std::filesystem::path(sc.out_dir) / "trace.csv").string() << '\n';
    return kExitOk;
  }
  if (verb == "histogram") {
    const auto hr = run_histogram(sc, log);
    auto os = detail::open_output(sc.out_dir, "histogram.csv");
    write_histogram_csv(os, hr, meta);
    std::vector<double> wall;
    for (const auto& r : hr.records) wall.push_back(r.wall_s);
    timing("histogram.timing.csv", wall);
    for (const auto& s : hr.summaries) {
      log << "density " << format_double(s.density_ppb) << " ppb: mean F_f = " << format_double(s.mean) << '\n';
    }
    return kExitOk;
  }
  if (verb == "benchmark") {
    const auto br = run_benchmark(sc, log);
    auto os = detail::open_output(sc.out_dir, "benchmark.csv");
    write_benchmark_csv(os, br, meta, sc.time_us);
    std::vector<double> wall;
    for (const auto& r : br.records) wall.push_back(r.wall_s);
    timing("benchmark.timing.csv", wall);
    log << "mean error gcce0 = " << format_double(br.mean_error_gcce0)
        << ", gcce2 = " << format_double(br.mean_error_gcce2) << " over " << br.evaluated << " baths\n";
    return kExitOk;
  }
  if (verb == "optimize") {
    const auto res = run_optimize(sc, log);
    {
      auto os = detail::open_output(sc.out_dir, "sequence.csv");
      write_csv_header(os, meta);
      write_sequence_csv(os, res.sequence);
    }
    auto os = detail::open_output(sc.out_dir, "optimize.csv");
    write_optimize_report(os, res, sc, meta);
    if (res.below_target) {
      log << "below target: F_p = " << format_double(res.fidelity) << " < "
          << format_double(sc.pulses.budget.target_fidelity) << '\n';
      return kExitBelowTarget;
    }
    return kExitOk;
  }
  if (verb == "bath-gen") {
    const auto spec = scenario_register(sc);
    const std::size_t slots = std::max<std::size_t>(1, sc.densities_ppb.size());
    for (std::size_t slot = 0; slot < slots; ++slot) {
      for (std::size_t b = 0; b < sc.baths; ++b) {
        std::uint64_t seed = 0;
        const auto bath = scenario_bath(sc, spec, slot, b, &seed);
        auto os = detail::open_output((std::filesystem::path(sc.out_dir) / "baths").string(),
                                      "bath_d" + std::to_string(slot) + "_b" + std::to_string(b) + ".csv");
        write_csv_header(os, meta);
        os << "# density_ppb: " << format_double(slot < sc.densities_ppb.size() ? sc.densities_ppb[slot] : 0.0) << '\n';
        os << "# bath_seed: " << seed << '\n';
        write_realization_csv(os, bath);
      }
    }
    log << "wrote " << slots * sc.baths << " realizations\n";
    return kExitOk;
  }
  throw ConfigError("unknown command '" + verb + "' (expected trace, histogram, benchmark, optimize or bath-gen)");
}

}  // namespace nvreg
