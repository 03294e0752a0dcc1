#pragma once

// Run configuration: an INI-style `key = value` file with fixed sections.
//
//   [pump]             photons_per_pulse, rep_rate_hz
//   [source]           pair_gain, noise_coeff_signal, noise_coeff_idler, pair_statistics
//   [detector_signal]  efficiency, dark_prob
//   [detector_idler]   efficiency, dark_prob
//   [experiment]       gates_per_point, pump_powers, phase_points,
//                      analyzer_theta_signal, analyzer_theta_idler,
//                      distinguishability, noise_pass_prob, seed
//
// '#' and ';' start comments. Unknown sections or keys, duplicates, and
// out-of-range values are errors; all of them are collected before throwing.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fiberpair/errors.hpp"
#include "fiberpair/experiments.hpp"
#include "fiberpair/source_detector.hpp"
#include "fiberpair/text.hpp"

namespace fiberpair {

struct ExperimentSettings {
  std::vector<double> pump_powers{0.0, 2.5e7, 5e7, 7.5e7, 1e8};
  std::uint64_t gates_per_point = 1'000'000;
  std::size_t phase_points = 33;
  AnalyzerSettings analyzers;
  double distinguishability = 1.0;
  double noise_pass_prob = 0.5;
  std::uint64_t seed = 1;
};

struct ConfigBundle {
  PumpConfig pump;
  SourceModel source;
  DetectorPair detectors;
  ExperimentSettings experiment;

  CountingRunConfig counting_config() const {
    return {experiment.pump_powers, experiment.gates_per_point, experiment.seed};
  }

  FringeScanConfig fringe_config() const {
    FringeScanConfig scan;
    scan.phase_grid = uniform_phase_grid(experiment.phase_points);
    scan.gates_per_phase = experiment.gates_per_point;
    scan.analyzers = experiment.analyzers;
    scan.distinguishability = experiment.distinguishability;
    scan.noise_pass_prob = experiment.noise_pass_prob;
    scan.seed = experiment.seed;
    return scan;
  }
};

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

inline bool parse_u64(std::string_view text, std::uint64_t& out) {
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

struct Interval {
  double lo;
  double hi;
  bool lo_open = false;
  bool contains(double v) const { return (lo_open ? v > lo : v >= lo) && v <= hi; }
  std::string describe() const {
    std::ostringstream os;
    os << (lo_open ? '(' : '[') << lo << ", ";
    if (std::isinf(hi)) {
      os << "inf)";
    } else {
      os << hi << ']';
    }
    return os.str();
  }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

/// Parses and validates a run configuration. Throws ConfigError listing every
/// problem found, each prefixed with its line (and column where useful).
inline ConfigBundle parse_config(std::string_view text) {
  using detail::Interval;
  using detail::kInf;
  ConfigBundle bundle;
  std::vector<std::string> issues;

  using Setter = std::function<void(std::string_view value, const std::string& where)>;
  std::map<std::string, std::map<std::string, Setter>> schema;

  auto real = [&](double& target, Interval range) -> Setter {
    return [&target, range, &issues](std::string_view value, const std::string& where) {
      double v = 0.0;
      if (!detail::parse_double(value, v)) {
        issues.push_back(where + ": expected a number, got '" + std::string(value) + "'");
      } else if (!range.contains(v)) {
        issues.push_back(where + ": value " + std::string(value) + " outside legal interval " + range.describe());
      } else {
        target = v;
      }
    };
  };
  auto integer = [&](auto& target, std::uint64_t min_value) -> Setter {
    return [&target, min_value, &issues](std::string_view value, const std::string& where) {
      std::uint64_t v = 0;
      if (!detail::parse_u64(value, v)) {
        issues.push_back(where + ": expected a non-negative integer, got '" + std::string(value) + "'");
      } else if (v < min_value) {
        issues.push_back(where + ": value " + std::to_string(v) + " outside legal interval [" +
                         std::to_string(min_value) + ", inf)");
      } else {
        target = static_cast<std::remove_reference_t<decltype(target)>>(v);
      }
    };
  };

  const Interval non_negative{0.0, kInf};
  const Interval unit{0.0, 1.0};
  const Interval any_angle{-kInf, kInf};

  schema["pump"]["photons_per_pulse"] = real(bundle.pump.photons_per_pulse, non_negative);
  schema["pump"]["rep_rate_hz"] = real(bundle.pump.rep_rate_hz, {0.0, kInf, true});
  schema["source"]["pair_gain"] = real(bundle.source.pair_gain, non_negative);
  schema["source"]["noise_coeff_signal"] = real(bundle.source.noise_coeff_signal, non_negative);
  schema["source"]["noise_coeff_idler"] = real(bundle.source.noise_coeff_idler, non_negative);
  schema["source"]["pair_statistics"] = [&](std::string_view value, const std::string& where) {
    const auto v = detail::trim(value);
    if (v == "thermal") {
      bundle.source.pair_statistics = PairStatistics::Thermal;
    } else if (v == "poissonian" || v == "poisson") {
      bundle.source.pair_statistics = PairStatistics::Poissonian;
    } else {
      issues.push_back(where + ": pair_statistics must be 'thermal' or 'poissonian', got '" + std::string(v) + "'");
    }
  };
  for (auto* det : {&bundle.detectors.signal, &bundle.detectors.idler}) {
    const std::string section = det == &bundle.detectors.signal ? "detector_signal" : "detector_idler";
    schema[section]["efficiency"] = real(det->efficiency, unit);
    schema[section]["dark_prob"] = real(det->dark_prob, unit);
  }
  auto& exp = bundle.experiment;
  schema["experiment"]["gates_per_point"] = integer(exp.gates_per_point, 1);
  schema["experiment"]["phase_points"] = integer(exp.phase_points, 16);
  schema["experiment"]["seed"] = integer(exp.seed, 0);
  schema["experiment"]["analyzer_theta_signal"] = real(exp.analyzers.theta_signal, any_angle);
  schema["experiment"]["analyzer_theta_idler"] = real(exp.analyzers.theta_idler, any_angle);
  schema["experiment"]["distinguishability"] = real(exp.distinguishability, unit);
  schema["experiment"]["noise_pass_prob"] = real(exp.noise_pass_prob, unit);
  schema["experiment"]["pump_powers"] = [&](std::string_view value, const std::string& where) {
    std::vector<double> powers;
    std::size_t start = 0;
    bool ok = true;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const auto item = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      double v = 0.0;
      if (!detail::parse_double(item, v) || v < 0.0) {
        issues.push_back(where + ": pump_powers entry '" + std::string(detail::trim(item)) +
                         "' is not a number in [0, inf)");
        ok = false;
      }
      powers.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!ok) return;
    if (std::set<double>(powers.begin(), powers.end()).size() < 3) {
      issues.push_back(where + ": pump_powers needs at least 3 distinct values");
      return;
    }
    exp.pump_powers = std::move(powers);
  };

  const std::set<std::pair<std::string, std::string>> required = {{"pump", "photons_per_pulse"},
                                                                   {"source", "pair_gain"},
                                                                   {"detector_signal", "efficiency"},
                                                                   {"detector_idler", "efficiency"}};
  std::set<std::pair<std::string, std::string>> seen;

  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string where_line = "line " + std::to_string(line_no);

    if (const auto hash = raw.find_first_of("#;"); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back(where_line + ", column " + std::to_string(raw.find('[') + 1) + ": unterminated section header");
        section.clear();
        continue;
      }
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (!schema.contains(section)) {
        issues.push_back(where_line + ": unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back(where_line + ", column " + std::to_string(raw.find_first_not_of(" \t") + 1) +
                       ": expected 'key = value'");
      continue;
    }
    const std::string key(detail::trim(raw.substr(0, eq)));
    const std::string_view value = detail::trim(raw.substr(eq + 1));
    const std::string where = where_line + ", column " + std::to_string(eq + 2) + " (" + key + ")";
    if (section.empty()) {
      issues.push_back(where_line + ": key '" + key + "' appears before any section header");
      continue;
    }
    const auto sec = schema.find(section);
    if (sec == schema.end()) continue;  // already reported
    const auto setter = sec->second.find(key);
    if (setter == sec->second.end()) {
      issues.push_back(where_line + ", column 1: unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    if (!seen.insert({section, key}).second) {
      issues.push_back(where_line + ": duplicate key '" + key + "' in [" + section + "]");
      continue;
    }
    if (value.empty()) {
      issues.push_back(where + ": missing value");
      continue;
    }
    setter->second(value, where);
  }

  for (const auto& [sec, key] : required) {
    if (!seen.contains({sec, key})) issues.push_back("missing required key '" + key + "' in [" + sec + "]");
  }
  if (!issues.empty()) throw ConfigError(issues);
  return bundle;
}

}  // namespace fiberpair
