#pragma once

// Pulsed pair source with linear pump leakage, and gated threshold detectors.
//
// Per pulse the source emits n_pairs ~ pair law with mean q * N_P^2 and, in
// each channel independently, Poisson(l * N_P) uncorrelated noise photons.
// A gate clicks with probability 1 - (1 - dark) (1 - eta)^n for n incident
// photons.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "fiberpair/errors.hpp"
#include "fiberpair/quantum_statistics.hpp"
#include "fiberpair/random.hpp"

namespace fiberpair {

struct PumpConfig {
  double photons_per_pulse = 0.0;  ///< N_P
  double rep_rate_hz = 75.3e6;
};

struct SourceModel {
  double pair_gain = 0.0;          ///< q: mean pairs per pulse = q * N_P^2
  double noise_coeff_signal = 0.0; ///< l_s: mean noise photons per pulse = l_s * N_P
  double noise_coeff_idler = 0.0;  ///< l_i
  PairStatistics pair_statistics = PairStatistics::Thermal;

  double mean_pairs(const PumpConfig& pump) const {
    return pair_gain * pump.photons_per_pulse * pump.photons_per_pulse;
  }
  double mean_noise_signal(const PumpConfig& pump) const {
    return noise_coeff_signal * pump.photons_per_pulse;
  }
  double mean_noise_idler(const PumpConfig& pump) const {
    return noise_coeff_idler * pump.photons_per_pulse;
  }
  PairNumberDistribution pair_distribution(const PumpConfig& pump) const {
    return {pair_statistics, mean_pairs(pump)};
  }
};

struct DetectorConfig {
  double efficiency = 1.0;  ///< per-photon detection probability within the gate
  double dark_prob = 0.0;   ///< per-gate dark-click probability
};

struct DetectorPair {
  DetectorConfig signal;
  DetectorConfig idler;
};

enum class Channel { Signal, Idler };

struct PulseEmission {
  std::uint64_t n_pairs = 0;
  std::uint64_t n_noise_signal = 0;
  std::uint64_t n_noise_idler = 0;

  friend bool operator==(const PulseEmission&, const PulseEmission&) = default;
};

/// Accumulated gate counts at one operating point.
///
/// coinc_delayed pairs the signal click of gate k with the idler click of
/// gate k+1 (cyclically, so there are exactly gates_total such pairs).
struct CountsRecord {
  std::uint64_t gates_total = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coinc_same_pulse = 0;
  std::uint64_t coinc_delayed = 0;

  double rate_signal() const { return per_gate(singles_signal); }
  double rate_idler() const { return per_gate(singles_idler); }
  double coinc_rate() const { return per_gate(coinc_same_pulse); }
  double delayed_rate() const { return per_gate(coinc_delayed); }

  CountsRecord& operator+=(const CountsRecord& other) {
    gates_total += other.gates_total;
    singles_signal += other.singles_signal;
    singles_idler += other.singles_idler;
    coinc_same_pulse += other.coinc_same_pulse;
    coinc_delayed += other.coinc_delayed;
    return *this;
  }

  friend bool operator==(const CountsRecord&, const CountsRecord&) = default;

 private:
  double per_gate(std::uint64_t n) const {
    return gates_total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(gates_total);
  }
};

namespace detail {

inline void check_unit_interval(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

inline void check_non_negative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(what) + " must be finite and >= 0, got " + std::to_string(value));
  }
}

}  // namespace detail

inline void validate(const PumpConfig& pump) {
  detail::check_non_negative(pump.photons_per_pulse, "photons_per_pulse");
  if (!(pump.rep_rate_hz > 0.0) || !std::isfinite(pump.rep_rate_hz)) {
    throw DomainError("rep_rate_hz must be finite and > 0");
  }
}

inline void validate(const SourceModel& source) {
  detail::check_non_negative(source.pair_gain, "pair_gain");
  detail::check_non_negative(source.noise_coeff_signal, "noise_coeff_signal");
  detail::check_non_negative(source.noise_coeff_idler, "noise_coeff_idler");
}

inline void validate(const DetectorConfig& det) {
  detail::check_unit_interval(det.efficiency, "efficiency");
  detail::check_unit_interval(det.dark_prob, "dark_prob");
}

/// Samplers for one (source, pump) operating point, built once and reused
/// for every gate.
class EmissionSampler {
 public:
  EmissionSampler(const SourceModel& source, const PumpConfig& pump)
      : pairs_(source.pair_distribution(pump)),
        noise_signal_({PairStatistics::Poissonian, source.mean_noise_signal(pump)}),
        noise_idler_({PairStatistics::Poissonian, source.mean_noise_idler(pump)}) {
    validate(source);
    validate(pump);
  }

  PulseEmission operator()(RandomStream& stream) const {
    PulseEmission e;
    e.n_pairs = pairs_(stream);
    e.n_noise_signal = noise_signal_(stream);
    e.n_noise_idler = noise_idler_(stream);
    return e;
  }

 private:
  CountSampler pairs_;
  CountSampler noise_signal_;
  CountSampler noise_idler_;
};

inline PulseEmission emit_pulse(const SourceModel& source, const PumpConfig& pump, RandomStream& stream) {
  return EmissionSampler(source, pump)(stream);
}

inline double click_probability(std::uint64_t n_photons, const DetectorConfig& det) {
  const double miss = (1.0 - det.dark_prob) * std::pow(1.0 - det.efficiency, static_cast<double>(n_photons));
  return std::clamp(1.0 - miss, 0.0, 1.0);
}

struct ClickPair {
  bool signal = false;
  bool idler = false;
};

/// Draws both detector outcomes for one gate. Signal is drawn first.
inline ClickPair sample_clicks(const PulseEmission& emission, const DetectorConfig& det_s,
                               const DetectorConfig& det_i, RandomStream& stream) {
  ClickPair out;
  out.signal = stream.uniform() < click_probability(emission.n_pairs + emission.n_noise_signal, det_s);
  out.idler = stream.uniform() < click_probability(emission.n_pairs + emission.n_noise_idler, det_i);
  return out;
}

/// Closed-form single-channel click probability per gate.
inline double analytic_click_prob(const SourceModel& source, const PumpConfig& pump,
                                  const DetectorConfig& det, Channel channel) {
  const double noise =
      channel == Channel::Signal ? source.mean_noise_signal(pump) : source.mean_noise_idler(pump);
  const double no_click = (1.0 - det.dark_prob) * std::exp(-noise * det.efficiency) *
                          pgf(source.pair_distribution(pump), 1.0 - det.efficiency);
  return std::clamp(1.0 - no_click, 0.0, 1.0);
}

/// Closed-form same-gate coincidence probability.
inline double analytic_coincidence_prob(const SourceModel& source, const PumpConfig& pump,
                                        const DetectorConfig& det_s, const DetectorConfig& det_i) {
  const auto pairs = source.pair_distribution(pump);
  const double ns = source.mean_noise_signal(pump);
  const double ni = source.mean_noise_idler(pump);
  const double none_s = (1.0 - det_s.dark_prob) * std::exp(-ns * det_s.efficiency) * pgf(pairs, 1.0 - det_s.efficiency);
  const double none_i = (1.0 - det_i.dark_prob) * std::exp(-ni * det_i.efficiency) * pgf(pairs, 1.0 - det_i.efficiency);
  const double neither = (1.0 - det_s.dark_prob) * (1.0 - det_i.dark_prob) *
                         std::exp(-ns * det_s.efficiency - ni * det_i.efficiency) *
                         pgf(pairs, (1.0 - det_s.efficiency) * (1.0 - det_i.efficiency));
  return std::clamp(1.0 - none_s - none_i + neither, 0.0, 1.0);
}

/// Coincidence probability between clicks of independent origin.
inline double accidental_rate(double r_s, double r_i) {
  detail::check_unit_interval(r_s, "r_s");
  detail::check_unit_interval(r_i, "r_i");
  return r_s * r_i;
}

}  // namespace fiberpair
