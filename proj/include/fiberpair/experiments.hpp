#pragma once

// Gate-level Monte Carlo for the pump-power counting run and the pump-phase
// fringe scan.
//
// Gates of one operating point ("task") are split into fixed blocks of
// kGateBlockSize. Block b of task t draws from RandomStream(seed,
// derived_stream_index(t, b)), so the counts depend only on the seed and never
// on how many workers processed the blocks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fiberpair/entanglement.hpp"
#include "fiberpair/errors.hpp"
#include "fiberpair/quantum_statistics.hpp"
#include "fiberpair/random.hpp"
#include "fiberpair/source_detector.hpp"

namespace fiberpair {

inline constexpr std::uint64_t kGateBlockSize = std::uint64_t{1} << 16;

struct CountingRunConfig {
  std::vector<double> pump_powers;  ///< photons per pulse at each point
  std::uint64_t gates_per_point = 1'000'000;
  std::uint64_t seed = 0;
};

struct CountingPoint {
  double pump_photons = 0.0;
  CountsRecord counts;
};

struct FringeScanConfig {
  std::vector<double> phase_grid;
  std::uint64_t gates_per_phase = 100'000;
  AnalyzerSettings analyzers;
  double distinguishability = 1.0;
  double noise_pass_prob = 0.5;  ///< unpolarized noise passes a polarizer half the time
  std::uint64_t seed = 0;
};

struct FringePoint {
  double phase = 0.0;
  CountsRecord counts;
  double classical_reference = 0.0;
};

struct FringeScanResult {
  std::vector<FringePoint> points;
  std::uint64_t gates_per_phase = 0;
  FringeScanConfig config;
};

/// n equally spaced phases covering [0, 2 pi] inclusive.
inline std::vector<double> uniform_phase_grid(std::size_t n = 33) {
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) {
    grid[k] = n == 1 ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return grid;
}

inline void validate(const CountingRunConfig& config) {
  std::vector<std::string> issues;
  std::set<double> distinct;
  for (double p : config.pump_powers) {
    if (!(p >= 0.0) || !std::isfinite(p)) issues.push_back("pump powers must be finite and >= 0");
    distinct.insert(p);
  }
  if (distinct.size() < 3) issues.push_back("counting run needs at least 3 distinct pump powers");
  if (config.gates_per_point == 0) issues.push_back("gates_per_point must be > 0");
  if (!issues.empty()) throw ConfigError(issues);
}

inline void validate(const FringeScanConfig& config) {
  std::vector<std::string> issues;
  if (config.phase_grid.size() < 16) issues.push_back("fringe scan needs at least 16 phase points");
  if (!config.phase_grid.empty()) {
    const auto [lo, hi] = std::minmax_element(config.phase_grid.begin(), config.phase_grid.end());
    if (*hi - *lo < 2.0 * std::numbers::pi - 1e-9) issues.push_back("phase grid must span at least 2 pi");
  }
  if (config.gates_per_phase == 0) issues.push_back("gates_per_phase must be > 0");
  if (!(config.distinguishability >= 0.0 && config.distinguishability <= 1.0)) {
    issues.push_back("distinguishability must lie in [0, 1]");
  }
  if (!(config.noise_pass_prob >= 0.0 && config.noise_pass_prob <= 1.0)) {
    issues.push_back("noise_pass_prob must lie in [0, 1]");
  }
  if (!issues.empty()) throw ConfigError(issues);
}

namespace detail {

struct BlockTally {
  CountsRecord counts;  // coinc_delayed holds only pairs inside the block
  bool first_idler = false;
  bool last_signal = false;
};

/// Runs fn(job) for job in [0, n_jobs) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n_jobs, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_jobs)));
  if (workers <= 1) {
    for (std::size_t job = 0; job < n_jobs; ++job) fn(job);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t job = next++; job < n_jobs; job = next++) fn(job);
    });
  }
}

/// Simulates `gates` gates for each task; gate(task, stream) -> ClickPair.
template <class GateFn>
std::vector<CountsRecord> simulate_tasks(std::size_t n_tasks, std::uint64_t gates, std::uint64_t seed,
                                         unsigned workers, GateFn&& gate) {
  const std::uint64_t blocks = (gates + kGateBlockSize - 1) / kGateBlockSize;
  std::vector<BlockTally> tallies(n_tasks * blocks);

  parallel_for(tallies.size(), workers, [&](std::size_t job) {
    const std::size_t task = job / blocks;
    const std::uint64_t block = job % blocks;
    const std::uint64_t begin = block * kGateBlockSize;
    const std::uint64_t end = std::min(gates, begin + kGateBlockSize);
    RandomStream stream(seed, derived_stream_index(task, block));
    BlockTally& tally = tallies[job];
    bool prev_signal = false;
    for (std::uint64_t g = begin; g < end; ++g) {
      const ClickPair click = gate(task, stream);
      tally.counts.singles_signal += click.signal;
      tally.counts.singles_idler += click.idler;
      tally.counts.coinc_same_pulse += click.signal && click.idler;
      if (g == begin) {
        tally.first_idler = click.idler;
      } else {
        tally.counts.coinc_delayed += prev_signal && click.idler;
      }
      prev_signal = click.signal;
    }
    tally.last_signal = prev_signal;
    tally.counts.gates_total = end - begin;
  });

  std::vector<CountsRecord> out(n_tasks);
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const BlockTally* row = &tallies[task * blocks];
    for (std::uint64_t b = 0; b < blocks; ++b) {
      out[task] += row[b].counts;
      const BlockTally& next = row[(b + 1) % blocks];
      out[task].coinc_delayed += row[b].last_signal && next.first_idler;
    }
  }
  return out;
}

}  // namespace detail

/// Singles and same-/delayed-gate coincidences at each pump power.
inline std::vector<CountingPoint> run_counting_experiment(const SourceModel& source, const PumpConfig& pump,
                                                          const DetectorPair& detectors,
                                                          const CountingRunConfig& config,
                                                          unsigned workers = 1) {
  validate(config);
  validate(source);
  validate(pump);
  validate(detectors.signal);
  validate(detectors.idler);

  std::vector<EmissionSampler> samplers;
  samplers.reserve(config.pump_powers.size());
  for (double power : config.pump_powers) {
    samplers.emplace_back(source, PumpConfig{power, pump.rep_rate_hz});
  }

  const auto records = detail::simulate_tasks(
      config.pump_powers.size(), config.gates_per_point, config.seed, workers,
      [&](std::size_t task, RandomStream& stream) {
        const PulseEmission emission = samplers[task](stream);
        return sample_clicks(emission, detectors.signal, detectors.idler, stream);
      });

  std::vector<CountingPoint> out;
  out.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) out.push_back({config.pump_powers[k], records[k]});
  return out;
}

/// Pump-phase scan behind polarization analyzers. Each pair independently
/// draws a JointOutcome; noise photons pass each analyzer with
/// noise_pass_prob regardless of angle.
inline FringeScanResult run_fringe_scan(const SourceModel& source, const PumpConfig& pump,
                                        const DetectorPair& detectors, const FringeScanConfig& scan,
                                        unsigned workers = 1) {
  validate(scan);
  validate(detectors.signal);
  validate(detectors.idler);
  const EmissionSampler emit(source, pump);

  std::vector<JointOutcome> outcomes;
  outcomes.reserve(scan.phase_grid.size());
  for (double phase : scan.phase_grid) {
    outcomes.push_back(joint_outcome_probs({phase, scan.distinguishability}, scan.analyzers));
  }

  const auto records = detail::simulate_tasks(
      scan.phase_grid.size(), scan.gates_per_phase, scan.seed, workers,
      [&](std::size_t task, RandomStream& stream) {
        const PulseEmission emission = emit(stream);
        std::uint64_t at_signal = 0, at_idler = 0;
        for (std::uint64_t p = 0; p < emission.n_pairs; ++p) {
          switch (sample_outcome(outcomes[task], stream)) {
            case PairOutcome::PassPass: ++at_signal; ++at_idler; break;
            case PairOutcome::PassBlock: ++at_signal; break;
            case PairOutcome::BlockPass: ++at_idler; break;
            case PairOutcome::BlockBlock: break;
          }
        }
        for (std::uint64_t n = 0; n < emission.n_noise_signal; ++n) at_signal += stream.uniform() < scan.noise_pass_prob;
        for (std::uint64_t n = 0; n < emission.n_noise_idler; ++n) at_idler += stream.uniform() < scan.noise_pass_prob;
        ClickPair click;
        click.signal = stream.uniform() < click_probability(at_signal, detectors.signal);
        click.idler = stream.uniform() < click_probability(at_idler, detectors.idler);
        return click;
      });

  FringeScanResult result;
  result.gates_per_phase = scan.gates_per_phase;
  result.config = scan;
  result.points.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    result.points.push_back({scan.phase_grid[k], records[k], classical_fringe(scan.phase_grid[k])});
  }
  return result;
}

/// Closed-form per-gate probabilities for one fringe point, under the same
/// independent-pair model the simulation uses.
struct FringeExpectation {
  double singles_signal = 0.0;
  double singles_idler = 0.0;
  double coincidence = 0.0;
  double accidental = 0.0;  ///< singles_signal * singles_idler
};

inline FringeExpectation expected_fringe_point(const SourceModel& source, const PumpConfig& pump,
                                               const DetectorPair& detectors, const BiphotonState& state,
                                               const AnalyzerSettings& analyzers, double noise_pass_prob = 0.5) {
  const JointOutcome o = joint_outcome_probs(state, analyzers);
  const auto pairs = source.pair_distribution(pump);
  const double es = detectors.signal.efficiency, ei = detectors.idler.efficiency;
  const double ds = detectors.signal.dark_prob, di = detectors.idler.dark_prob;
  const double ns = source.mean_noise_signal(pump) * noise_pass_prob;
  const double ni = source.mean_noise_idler(pump) * noise_pass_prob;

  const double pass_s = o.p_pass_pass + o.p_pass_block;
  const double pass_i = o.p_pass_pass + o.p_block_pass;
  const double none_s = (1.0 - ds) * std::exp(-ns * es) * pgf(pairs, 1.0 - es * pass_s);
  const double none_i = (1.0 - di) * std::exp(-ni * ei) * pgf(pairs, 1.0 - ei * pass_i);
  // per-pair probability that neither detector registers that pair
  const double pair_silent = std::clamp(1.0 - es * pass_s - ei * pass_i + es * ei * o.p_pass_pass, 0.0, 1.0);
  const double neither = (1.0 - ds) * (1.0 - di) * std::exp(-ns * es - ni * ei) * pgf(pairs, pair_silent);

  FringeExpectation out;
  out.singles_signal = 1.0 - none_s;
  out.singles_idler = 1.0 - none_i;
  out.coincidence = std::clamp(1.0 - none_s - none_i + neither, 0.0, 1.0);
  out.accidental = out.singles_signal * out.singles_idler;
  return out;
}

}  // namespace fiberpair
