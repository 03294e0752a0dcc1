#pragma once

// summary.json construction. The "analysis" object is a pure function of the
// CSV rows, so re-analyzing a written table reproduces it exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fiberpair/analysis.hpp"
#include "fiberpair/config.hpp"
#include "fiberpair/csv.hpp"
#include "fiberpair/random.hpp"

namespace fiberpair {

inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

/// Canonical `section.key=value` listing of a validated bundle.
inline std::string canonical_config_text(const ConfigBundle& b) {
  std::string out;
  auto put = [&out](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  put("pump.photons_per_pulse", format_number(b.pump.photons_per_pulse));
  put("pump.rep_rate_hz", format_number(b.pump.rep_rate_hz));
  put("source.pair_gain", format_number(b.source.pair_gain));
  put("source.noise_coeff_signal", format_number(b.source.noise_coeff_signal));
  put("source.noise_coeff_idler", format_number(b.source.noise_coeff_idler));
  put("source.pair_statistics", std::string(to_string(b.source.pair_statistics)));
  put("detector_signal.efficiency", format_number(b.detectors.signal.efficiency));
  put("detector_signal.dark_prob", format_number(b.detectors.signal.dark_prob));
  put("detector_idler.efficiency", format_number(b.detectors.idler.efficiency));
  put("detector_idler.dark_prob", format_number(b.detectors.idler.dark_prob));
  std::string powers;
  for (double p : b.experiment.pump_powers) powers += (powers.empty() ? "" : ",") + format_number(p);
  put("experiment.pump_powers", powers);
  put("experiment.gates_per_point", format_number(b.experiment.gates_per_point));
  put("experiment.phase_points", format_number(static_cast<std::uint64_t>(b.experiment.phase_points)));
  put("experiment.analyzer_theta_signal", format_number(b.experiment.analyzers.theta_signal));
  put("experiment.analyzer_theta_idler", format_number(b.experiment.analyzers.theta_idler));
  put("experiment.distinguishability", format_number(b.experiment.distinguishability));
  put("experiment.noise_pass_prob", format_number(b.experiment.noise_pass_prob));
  put("experiment.seed", format_number(b.experiment.seed));
  return out;
}

/// FNV-1a 64-bit over the canonical config text, as 16 hex digits.
inline std::string config_hash(const ConfigBundle& bundle) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config_text(bundle)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json value_with_error(double value, double error) {
  return Json{{"value", number_or_null(value)}, {"error", number_or_null(error)}};
}

inline Json value_with_error_rate(double counts, double gates) {
  return value_with_error(counts / gates, std::sqrt(counts) / gates);
}

inline Json quadratic_json(const QuadraticFitResult& f) {
  return Json{{"n_d", value_with_error(f.n_d_hat, f.n_d_err)},
              {"s1", value_with_error(f.s1_hat, f.s1_err)},
              {"s2", value_with_error(f.s2_hat, f.s2_err)},
              {"residual_rms", f.residual_rms},
              {"chi_square", f.chi_square},
              {"dof", f.dof},
              {"condition_number", number_or_null(f.condition_number)},
              {"poorly_conditioned", f.poorly_conditioned}};
}

inline Json sinusoid_json(const SinusoidFitResult& f) {
  return Json{{"frequency", f.frequency},
              {"offset", value_with_error(f.offset, f.offset_err)},
              {"amplitude", value_with_error(f.amplitude, f.amplitude_err)},
              {"phase0", f.phase0},
              {"visibility", value_with_error(f.visibility, f.visibility_err)},
              {"chi_square", f.chi_square},
              {"selection_margin", number_or_null(f.selection_margin)},
              {"reliable", f.reliable}};
}

inline Json flatness_json(const FlatnessResult& f) {
  return Json{{"max_component_sigma", f.max_component_sigma}, {"flat", f.flat}};
}

}  // namespace detail

/// Fit and rate summary for a counting table. Throws AnalysisError when the
/// quadratic fit is impossible.
inline Json summarize_counts(const std::vector<CountsRow>& rows) {
  std::vector<RatePoint> signal, idler;
  for (const auto& r : rows) {
    signal.push_back({r.pump_photons, static_cast<double>(r.singles_signal), static_cast<double>(r.gates)});
    idler.push_back({r.pump_photons, static_cast<double>(r.singles_idler), static_cast<double>(r.gates)});
  }
  const auto dark_s = zero_pump_rate(signal);
  const auto dark_i = zero_pump_rate(idler);

  Json points = Json::array();
  double best_pps = 0.0, best_pps_err = 0.0;
  double worst_accidental_sigma = 0.0;
  for (const auto& r : rows) {
    const double gates = static_cast<double>(r.gates);
    const double expected_delayed = gates * r.rate_signal_per_gate * r.rate_idler_per_gate;
    const double delayed_sigma =
        (static_cast<double>(r.coinc_delayed) - expected_delayed) / std::sqrt(std::max(expected_delayed, 1.0));
    worst_accidental_sigma = std::max(worst_accidental_sigma, std::abs(delayed_sigma));
    const auto excess =
        subtract_accidentals(static_cast<double>(r.coinc_same), static_cast<double>(r.coinc_delayed));
    const double rs = r.rate_signal_per_gate - dark_s.value_or(0.0);
    const double ri = r.rate_idler_per_gate - dark_i.value_or(0.0);
    const double pps_err = r.coinc_same > 0 ? r.pairs_per_second / std::sqrt(static_cast<double>(r.coinc_same)) : 0.0;
    if (r.pairs_per_second > best_pps) {
      best_pps = r.pairs_per_second;
      best_pps_err = pps_err;
    }
    points.push_back(Json{
        {"pump_photons", r.pump_photons},
        {"singles_geometric_mean_dark_subtracted", rs > 0.0 && ri > 0.0 ? std::sqrt(rs * ri) : 0.0},
        {"coinc_rate", detail::value_with_error_rate(static_cast<double>(r.coinc_same), gates)},
        {"delayed_rate", detail::value_with_error_rate(static_cast<double>(r.coinc_delayed), gates)},
        {"accidental_rate", r.accidental_rate_per_gate},
        {"excess_sigma", excess.error > 0.0 ? excess.value / excess.error : 0.0},
        {"pairs_per_second", detail::value_with_error(r.pairs_per_second, pps_err)}});
  }

  Json out;
  out["points"] = rows.size();
  out["fit_signal"] = detail::quadratic_json(fit_quadratic(signal));
  out["fit_idler"] = detail::quadratic_json(fit_quadratic(idler));
  double zero_gates = 0.0;
  for (const auto& p : signal) zero_gates += p.pump_photons == 0.0 ? p.gates : 0.0;
  auto dark_json = [zero_gates](const std::optional<double>& rate) {
    return rate ? detail::value_with_error(*rate, std::sqrt(*rate * (1.0 - *rate) / zero_gates)) : Json(nullptr);
  };
  out["dark_rate_signal"] = dark_json(dark_s);
  out["dark_rate_idler"] = dark_json(dark_i);
  out["pairs_per_second"] = detail::value_with_error(best_pps, best_pps_err);
  out["max_delayed_deviation_sigma"] = worst_accidental_sigma;
  out["coincidence_points"] = std::move(points);
  return out;
}

/// Visibility, frequency and flatness summary for a fringe table.
inline Json summarize_fringes(const std::vector<FringeRow>& rows) {
  std::vector<double> phases, raw, corrected, corrected_err, delayed_twice, reference, unit_err, gates, ss, si;
  for (const auto& r : rows) {
    phases.push_back(r.phase_rad);
    raw.push_back(static_cast<double>(r.coinc_same));
    corrected.push_back(r.coinc_corrected);
    corrected_err.push_back(std::max(r.coinc_corrected_err, 1.0));
    delayed_twice.push_back(2.0 * static_cast<double>(r.coinc_delayed));
    reference.push_back(r.classical_reference);
    unit_err.push_back(1.0);
    gates.push_back(static_cast<double>(r.gates));
    ss.push_back(static_cast<double>(r.singles_signal));
    si.push_back(static_cast<double>(r.singles_idler));
  }
  // var(coinc - delayed) = (signal + delayed) + delayed, signal being the fitted excess
  const auto raw_fit = fit_sinusoid_counts(phases, raw, std::vector<double>(rows.size(), 0.0));
  const auto corrected_fit = fit_sinusoid_counts(phases, corrected, delayed_twice);
  const auto classical_fit = fit_sinusoid(phases, reference, unit_err);

  Json out;
  out["points"] = rows.size();
  out["visibility_raw"] = detail::value_with_error(raw_fit.visibility, raw_fit.visibility_err);
  out["visibility_corrected"] = detail::value_with_error(corrected_fit.visibility, corrected_fit.visibility_err);
  out["frequency_ratio"] = frequency_ratio(corrected_fit, classical_fit);
  out["frequency_reliable"] = corrected_fit.reliable;
  out["fit_raw"] = detail::sinusoid_json(raw_fit);
  out["fit_corrected"] = detail::sinusoid_json(corrected_fit);
  out["fit_classical"] = detail::sinusoid_json(classical_fit);
  out["flatness"] = Json{{"singles_signal", detail::flatness_json(flatness_test(phases, ss, gates))},
                         {"singles_idler", detail::flatness_json(flatness_test(phases, si, gates))},
                         {"coinc_corrected", detail::flatness_json(component_flatness(phases, corrected, corrected_err))}};
  return out;
}

inline Json make_summary(const std::string& mode, Json analysis, const ConfigBundle* bundle) {
  Json out;
  out["tool"] = "fiberpair";
  out["version"] = kToolVersion;
  out["rng"] = kRandomStreamVersion;
  out["mode"] = mode;
  out["config_hash"] = bundle ? Json(config_hash(*bundle)) : Json(nullptr);
  out["analysis"] = std::move(analysis);
  return out;
}

}  // namespace fiberpair
