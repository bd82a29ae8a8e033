#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ampvbic/harness.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/types.hpp"

namespace ampvbic {

/// Everything a CLI invocation reads from a config file.
struct ExperimentSpec {
  ScenarioConfig scenario{};
  int trials = 100;
  std::vector<DetectorKind> detectors{DetectorKind::AmpVbic, DetectorKind::Genie};
  std::optional<SweepAxis> axis;
  std::vector<double> values;
  bool include_rs_in_ser = false;
  bool bernoulli_activity = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return s;
}

// Accepts "a, b, c" as well as TOML-style "[a, b, c]".
inline std::vector<std::string> split_list(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = unquote(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = unquote(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("invalid value for '" + std::string(key) + "': " + std::string(text));
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  text = unquote(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for '" + std::string(key) + "': " + std::string(text));
}

}  // namespace detail

/**
 * Parses `key = value` lines. Blank lines, `#` / `;` comments and
 * `[section]` headers are ignored; unknown keys are an error.
 */
inline ExperimentSpec parse_experiment(std::istream& in, ExperimentSpec spec = {}) {
  using namespace detail;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find_first_of("#;"); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty() || view.front() == '[') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));
    auto& sc = spec.scenario;

    if (key == "M") sc.M = parse_number<int>(key, value);
    else if (key == "N") sc.N = parse_number<int>(key, value);
    else if (key == "J") sc.J = parse_number<int>(key, value);
    else if (key == "p_a") sc.p_a = parse_number<double>(key, value);
    else if (key == "snr_db") sc.snr_db = parse_number<double>(key, value);
    else if (key == "n_it") sc.n_it = parse_number<int>(key, value);
    else if (key == "seed") sc.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "active_count") sc.active_count = parse_number<int>(key, value);
    else if (key == "modulation") {
      const auto mod = parse_modulation(unquote(value));
      if (!mod) throw ConfigError("unknown modulation: " + std::string(value));
      sc.modulation = *mod;
    } else if (key == "trials") spec.trials = parse_number<int>(key, value);
    else if (key == "detectors") {
      spec.detectors.clear();
      for (const auto& name : split_list(value)) {
        const auto kind = parse_detector(name);
        if (!kind) throw ConfigError("unknown detector: " + name);
        spec.detectors.push_back(*kind);
      }
    } else if (key == "axis") {
      const auto axis = parse_axis(unquote(value));
      if (!axis) throw InvalidAxis("unknown sweep axis: " + std::string(value));
      spec.axis = axis;
    } else if (key == "values") {
      spec.values.clear();
      for (const auto& v : split_list(value)) spec.values.push_back(parse_number<double>(key, v));
    } else if (key == "include_rs_in_ser") spec.include_rs_in_ser = parse_bool(key, value);
    else if (key == "bernoulli_activity") spec.bernoulli_activity = parse_bool(key, value);
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return spec;
}

inline ExperimentSpec parse_experiment_string(std::string_view text, ExperimentSpec spec = {}) {
  std::istringstream in{std::string(text)};
  return parse_experiment(in, std::move(spec));
}

inline ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_experiment(in);
}

}  // namespace ampvbic
