#pragma once

// Per-pulse photon-number laws: probability mass, generating function, and
// exact inverse-CDF sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fiberpair/errors.hpp"
#include "fiberpair/random.hpp"

namespace fiberpair {

enum class PairStatistics { Thermal, Poissonian };

inline std::string_view to_string(PairStatistics kind) {
  return kind == PairStatistics::Thermal ? "thermal" : "poissonian";
}

/// Pair-count law with mean `mean` pairs per pulse.
struct PairNumberDistribution {
  PairStatistics kind = PairStatistics::Thermal;
  double mean = 0.0;
};

/// Probability mass beyond which the sampling table is truncated.
inline constexpr double kTailTolerance = 1e-14;

namespace detail {

inline void check_mean(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("distribution mean must be finite and >= 0, got " + std::to_string(mean));
  }
}

inline double poisson_pmf(double mean, std::uint64_t n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double k = static_cast<double>(n);
  return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

inline double thermal_pmf(double mean, std::uint64_t n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double k = static_cast<double>(n);
  // mean^n / (1 + mean)^(n + 1)
  return std::exp(k * std::log(mean / (1.0 + mean)) - std::log1p(mean));
}

}  // namespace detail

inline double pmf(const PairNumberDistribution& dist, std::uint64_t n) {
  detail::check_mean(dist.mean);
  return dist.kind == PairStatistics::Thermal ? detail::thermal_pmf(dist.mean, n)
                                              : detail::poisson_pmf(dist.mean, n);
}

/// Probability generating function E[x^N] for x in [0, 1].
inline double pgf(const PairNumberDistribution& dist, double x) {
  detail::check_mean(dist.mean);
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("pgf argument must lie in [0, 1], got " + std::to_string(x));
  }
  const double deficit = dist.mean * (1.0 - x);
  return dist.kind == PairStatistics::Thermal ? 1.0 / (1.0 + deficit) : std::exp(-deficit);
}

/// Smallest K with P(N > K) < kTailTolerance.
inline std::uint64_t tail_cutoff(const PairNumberDistribution& dist) {
  detail::check_mean(dist.mean);
  if (dist.mean == 0.0) return 0;
  if (dist.kind == PairStatistics::Thermal) {
    // P(N > K) = r^(K + 1), r = mean / (1 + mean)
    const double log_ratio = std::log(dist.mean / (1.0 + dist.mean));
    const double needed = std::log(kTailTolerance) / log_ratio;  // K + 1 > needed
    return static_cast<std::uint64_t>(std::max(0.0, std::floor(needed)));
  }
  // Poisson: accumulate the upper tail directly past the mode.
  std::uint64_t k = static_cast<std::uint64_t>(dist.mean);
  for (;; ++k) {
    double tail = 0.0;
    double term = detail::poisson_pmf(dist.mean, k + 1);
    for (std::uint64_t j = k + 1; term > 0.0; ++j) {
      tail += term;
      term *= dist.mean / static_cast<double>(j + 1);
      if (term < tail * 1e-17) break;
    }
    if (tail < kTailTolerance) return k;
  }
}

/// Inverse-CDF sampler with a cached cumulative table.
///
/// The table covers n = 0..tail_cutoff(dist); the vanishing remainder is
/// sampled by extending the cumulative sum on the fly, so draws are exact.
class CountSampler {
 public:
  CountSampler() : CountSampler(PairNumberDistribution{PairStatistics::Poissonian, 0.0}) {}

  explicit CountSampler(PairNumberDistribution dist) : dist_(dist) {
    const std::uint64_t cutoff = tail_cutoff(dist);
    cdf_.reserve(cutoff + 1);
    double acc = 0.0;
    for (std::uint64_t n = 0; n <= cutoff; ++n) {
      acc += pmf(dist, n);
      cdf_.push_back(acc);
    }
  }

  const PairNumberDistribution& distribution() const noexcept { return dist_; }
  const std::vector<double>& cumulative_table() const noexcept { return cdf_; }

  std::uint64_t operator()(RandomStream& stream) const { return from_uniform(stream.uniform()); }

  std::uint64_t from_uniform(double u) const {
    if (dist_.mean == 0.0) return 0;
    // Nearly every draw at mean << 1 lands in n = 0.
    if (u < cdf_.front()) return 0;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it != cdf_.end()) return static_cast<std::uint64_t>(it - cdf_.begin());
    std::uint64_t n = cdf_.size() - 1;
    double acc = cdf_.back();
    while (u >= acc) {
      ++n;
      const double p = pmf(dist_, n);
      if (p == 0.0) break;
      acc += p;
    }
    return n;
  }

 private:
  PairNumberDistribution dist_;
  std::vector<double> cdf_;
};

/// One draw from the pair-count law. Builds a table per call; reuse a
/// CountSampler for repeated draws from the same law.
inline std::uint64_t sample_pair_count(const PairNumberDistribution& dist, RandomStream& stream) {
  return CountSampler(dist)(stream);
}

inline std::uint64_t sample_poisson(double mean, RandomStream& stream) {
  detail::check_mean(mean);
  return CountSampler({PairStatistics::Poissonian, mean})(stream);
}

}  // namespace fiberpair
