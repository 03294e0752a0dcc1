#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fiberpair/quantum_statistics.hpp"
#include "test_support.hpp"

namespace fiberpair {
namespace {

using test::binomial_z;

// Term-by-term series built from the recurrences t_n = t_{n-1} * r (thermal)
// and t_n = t_{n-1} * mu / n (Poisson), normalized by brute-force summation.
std::vector<double> brute_force_pmf(PairNumberDistribution d, std::size_t terms) {
  std::vector<double> t(terms);
  t[0] = 1.0;
  for (std::size_t n = 1; n < terms; ++n) {
    t[n] = d.kind == PairStatistics::Thermal ? t[n - 1] * d.mean / (1.0 + d.mean)
                                             : t[n - 1] * d.mean / static_cast<double>(n);
  }
  double z = 0.0;
  for (double v : t) z += v;
  for (double& v : t) v /= z;
  return t;
}

TEST(Pmf, ThermalZeroMeanPutsAllMassAtZero) {
  EXPECT_EQ(pmf({PairStatistics::Thermal, 0.0}, 0), 1.0);
  EXPECT_EQ(pmf({PairStatistics::Thermal, 0.0}, 3), 0.0);
}

TEST(Pmf, ThermalUnitMean) { EXPECT_NEAR(pmf({PairStatistics::Thermal, 1.0}, 2), 0.125, 1e-15); }

TEST(Pmf, PoissonSmallMean) {
  const PairNumberDistribution d{PairStatistics::Poissonian, 0.01};
  const auto series = brute_force_pmf(d, 40);
  EXPECT_NEAR(series[1], 0.009900498337491681, 1e-16);
  EXPECT_NEAR(pmf(d, 1), series[1], 1e-15);
  EXPECT_NEAR(pmf(d, 1), 0.009900498337491681, 1e-15);
}

TEST(Pmf, MatchesBruteForceSeries) {
  for (auto kind : {PairStatistics::Thermal, PairStatistics::Poissonian}) {
    for (double mean : {0.001, 0.05, 0.7, 3.0}) {
      const PairNumberDistribution d{kind, mean};
      const auto series = brute_force_pmf(d, 400);
      for (std::uint64_t n = 0; n < 20; ++n) {
        EXPECT_NEAR(pmf(d, n), series[n], 1e-13 * std::max(1.0, series[n])) << to_string(kind) << " " << mean;
      }
    }
  }
}

TEST(Pmf, NormalizedUpToTailCutoff) {
  for (auto kind : {PairStatistics::Thermal, PairStatistics::Poissonian}) {
    for (double mean : {0.0, 1e-4, 0.01, 0.2, 1.0, 5.0, 40.0}) {
      const PairNumberDistribution d{kind, mean};
      const auto cutoff = tail_cutoff(d);
      double total = 0.0;
      for (std::uint64_t n = 0; n <= cutoff; ++n) total += pmf(d, n);
      EXPECT_LT(std::abs(total - 1.0), 1e-12) << to_string(kind) << " mean " << mean;
    }
  }
}

TEST(Pmf, NegativeMeanIsDomainError) {
  EXPECT_THROW(pmf({PairStatistics::Thermal, -0.1}, 0), DomainError);
}

TEST(Pgf, Examples) {
  EXPECT_DOUBLE_EQ(pgf({PairStatistics::Thermal, 1.0}, 0.0), 0.5);
  for (auto kind : {PairStatistics::Thermal, PairStatistics::Poissonian}) {
    EXPECT_DOUBLE_EQ(pgf({kind, 0.37}, 1.0), 1.0);
  }
  EXPECT_NEAR(pgf({PairStatistics::Thermal, 0.5}, 0.8), 1.0 / 1.1, 1e-15);
}

TEST(Pgf, ClosedFormMatchesSeries) {
  for (auto kind : {PairStatistics::Thermal, PairStatistics::Poissonian}) {
    for (double mean : {0.0, 0.01, 0.5, 2.0}) {
      const PairNumberDistribution d{kind, mean};
      const auto cutoff = tail_cutoff(d);
      for (double x : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        double series = 0.0;
        for (std::uint64_t n = 0; n <= cutoff; ++n) series += pmf(d, n) * std::pow(x, static_cast<double>(n));
        EXPECT_NEAR(pgf(d, x), series, 1e-10) << to_string(kind) << " mean " << mean << " x " << x;
      }
    }
  }
}

TEST(Pgf, ArgumentOutsideUnitIntervalIsDomainError) {
  EXPECT_THROW(pgf({PairStatistics::Thermal, 0.1}, 1.5), DomainError);
  EXPECT_THROW(pgf({PairStatistics::Poissonian, 0.1}, -0.01), DomainError);
}

TEST(TailCutoff, ThermalTailBelowTolerance) {
  const PairNumberDistribution d{PairStatistics::Thermal, 0.05};
  const auto k = tail_cutoff(d);
  const double r = 0.05 / 1.05;
  EXPECT_LT(std::pow(r, static_cast<double>(k + 1)), kTailTolerance);
  EXPECT_GE(std::pow(r, static_cast<double>(k)), kTailTolerance);
}

TEST(Sampling, ZeroMeanAlwaysZero) {
  RandomStream s(1, 0);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(sample_pair_count({PairStatistics::Thermal, 0.0}, s), 0u);
    ASSERT_EQ(sample_poisson(0.0, s), 0u);
  }
}

TEST(Sampling, ThermalMeanConverges) {
  const PairNumberDistribution d{PairStatistics::Thermal, 0.05};
  const CountSampler sampler(d);
  RandomStream s(test::kSeed, 0);
  constexpr int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(sampler(s));
  EXPECT_NEAR(sum / n, 0.05, 4.0 * std::sqrt(0.05 * 1.05 / n));
}

TEST(Sampling, PoissonIndexOfDispersion) {
  const CountSampler sampler({PairStatistics::Poissonian, 2.0});
  RandomStream s(test::kSeed, 1);
  constexpr int n = 1'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(sampler(s));
    sum += k;
    sum_sq += k * k;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(var / mean, 1.0, 0.02);
}

TEST(Sampling, PoissonNonzeroFraction) {
  const CountSampler sampler({PairStatistics::Poissonian, 0.001});
  RandomStream s(test::kSeed, 2);
  constexpr int n = 1'000'000;
  int nonzero = 0;
  for (int i = 0; i < n; ++i) nonzero += sampler(s) != 0;
  const double p = -std::expm1(-0.001);
  EXPECT_NEAR(p, 9.995e-4, 1e-7);
  EXPECT_LT(std::abs(binomial_z(nonzero, n, p)), 4.0);
}

TEST(Sampling, NegativePoissonMeanIsDomainError) {
  RandomStream s(1, 0);
  EXPECT_THROW(sample_poisson(-1.0, s), DomainError);
}

TEST(Sampling, DeterministicForFixedStream) {
  const PairNumberDistribution d{PairStatistics::Thermal, 0.3};
  RandomStream a(42, 0), b(42, 0);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(sample_pair_count(d, a), sample_pair_count(d, b));
}

TEST(Sampling, FarTailExtendsBeyondTable) {
  const CountSampler sampler({PairStatistics::Thermal, 0.01});
  const auto& table = sampler.cumulative_table();
  const double beyond = std::nextafter(table.back(), 2.0);
  if (beyond < 1.0) {
    EXPECT_GE(sampler.from_uniform(beyond), table.size() - 1);
  }
  EXPECT_EQ(sampler.from_uniform(0.0), 0u);
}

TEST(Sampling, ChiSquareGoodnessOfFit) {
  std::uint64_t stream = 10;
  for (auto kind : {PairStatistics::Thermal, PairStatistics::Poissonian}) {
    for (double mean : {0.05, 0.5, 3.0}) {
      EXPECT_GT(test::chi_square_pvalue({kind, mean}, stream++), 0.001) << to_string(kind) << " mean " << mean;
    }
  }
}

}  // namespace
}  // namespace fiberpair
