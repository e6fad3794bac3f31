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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nvreg/linalg.hpp"

// INI-style scenario files:
//
//   # comment
//   [section]
//   key = value        ; trailing comments allowed
//
// Keys are case-sensitive. Lists are comma separated.

namespace nvreg {

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(std::string_view text, std::string origin = "<config>") {
    Config cfg;
    cfg.origin_ = std::move(origin);
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      auto line = raw;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string_view::npos) line = line.substr(0, comment);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') cfg.fail(line_no, "unterminated section header");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) cfg.fail(line_no, "empty section name");
        if (cfg.sections_.count(section)) cfg.fail(line_no, "section [" + section + "] appears twice");
        cfg.sections_[section];
        cfg.section_lines_[section] = line_no;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) cfg.fail(line_no, "expected 'key = value'");
      if (section.empty()) cfg.fail(line_no, "key outside of any section");
      const std::string key(detail::trim(line.substr(0, eq)));
      const std::string value(detail::trim(line.substr(eq + 1)));
      if (key.empty()) cfg.fail(line_no, "empty key");
      auto& sec = cfg.sections_[section];
      if (sec.count(key)) {
        cfg.fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(sec[key].line) + ")");
      }
      sec[key] = Entry{value, line_no};
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  [[nodiscard]] const std::string& origin() const { return origin_; }

  /// Hash of the parsed content (sections and keys sorted), so comments and
  /// layout do not change it.
  [[nodiscard]] std::uint64_t hash() const {
    std::string canon;
    for (const auto& [s, entries] : sections_) {
      canon += "[" + s + "]\n";
      for (const auto& [k, e] : entries) canon += k + "=" + e.value + "\n";
    }
    return fnv1a64(canon);
  }

  [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) != 0;
  }

  [[nodiscard]] std::string get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const {
    const auto* e = find(section, key);
    return e ? e->value : fallback;
  }

  [[nodiscard]] std::string require_string(const std::string& section, const std::string& key) const {
    const auto* e = find(section, key);
    if (!e) throw ConfigError(origin_ + ": missing required key '" + key + "' in [" + section + "]");
    return e->value;
  }

  [[nodiscard]] double get_double(const std::string& section, const std::string& key, double fallback) const {
    const auto* e = find(section, key);
    return e ? to_double(*e, key, e->value) : fallback;
  }

  [[nodiscard]] std::uint64_t get_u64(const std::string& section, const std::string& key,
                                      std::uint64_t fallback) const {
    const auto* e = find(section, key);
    return e ? to_u64(*e, key, e->value) : fallback;
  }

  [[nodiscard]] bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(e->line, "'" + key + "' expects true or false, got '" + e->value + "'");
  }

  [[nodiscard]] std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                                const std::vector<double>& fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& item : detail::split_list(e->value)) out.push_back(to_double(*e, key, item));
    return out;
  }

  [[nodiscard]] std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
    const auto* e = find(section, key);
    return e ? detail::split_list(e->value) : fallback;
  }

  [[nodiscard]] int line_of(const std::string& section, const std::string& key) const {
    const auto* e = find(section, key);
    return e ? e->line : 0;
  }

  /// Throws for any key that no getter has asked for (typically a typo).
  void reject_unused() const {
    for (const auto& [s, entries] : sections_) {
      for (const auto& [k, e] : entries) {
        if (!used_.count(s + "\n" + k)) fail(e.line, "unknown key '" + k + "' in [" + s + "]");
      }
    }
  }

  void restrict_sections(const std::set<std::string>& names) const {
    for (const auto& [s, line] : section_lines_) {
      if (!names.count(s)) fail(line, "unknown section [" + s + "]");
    }
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  const Entry* find(const std::string& section, const std::string& key) const {
    used_.insert(section + "\n" + key);
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  double to_double(const Entry& e, const std::string& key, const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) fail(e.line, "'" + key + "' expects a number, got '" + text + "'");
    return v;
  }

  std::uint64_t to_u64(const Entry& e, const std::string& key, const std::string& text) const {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) {
      fail(e.line, "'" + key + "' expects a non-negative integer, got '" + text + "'");
    }
    return v;
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, int> section_lines_;
  mutable std::set<std::string> used_;
};

}  // namespace nvreg
