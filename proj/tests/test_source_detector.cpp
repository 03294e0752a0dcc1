#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fiberpair/source_detector.hpp"
#include "test_support.hpp"

namespace fiberpair {
namespace {

using test::binomial_z;

TEST(EmitPulse, SilentSourceEmitsNothing) {
  const SourceModel source{};
  const PumpConfig pump{1e8, 75.3e6};
  RandomStream s(1, 0);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(emit_pulse(source, pump, s), PulseEmission{});
}

TEST(EmitPulse, TypicalScaleMeanPairs) {
  SourceModel source;
  source.pair_gain = 1e-18;
  const PumpConfig pump{1e8, 75.3e6};
  ASSERT_DOUBLE_EQ(source.mean_pairs(pump), 0.01);
  const EmissionSampler emit(source, pump);
  RandomStream s(test::kSeed, 0);
  constexpr int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(emit(s).n_pairs);
  EXPECT_NEAR(sum / n, 0.01, 4.0 * std::sqrt(0.01 * 1.01 / n));
}

struct EmissionMeans {
  double pairs = 0.0, noise_s = 0.0, noise_i = 0.0;
};

EmissionMeans empirical_means(const SourceModel& source, double photons, std::uint64_t stream, int n) {
  const EmissionSampler emit(source, {photons, 75.3e6});
  RandomStream s(test::kSeed, stream);
  EmissionMeans m;
  for (int i = 0; i < n; ++i) {
    const auto e = emit(s);
    m.pairs += static_cast<double>(e.n_pairs);
    m.noise_s += static_cast<double>(e.n_noise_signal);
    m.noise_i += static_cast<double>(e.n_noise_idler);
  }
  m.pairs /= n;
  m.noise_s /= n;
  m.noise_i /= n;
  return m;
}

TEST(EmitPulse, DoublingPumpQuadruplesPairsAndDoublesNoise) {
  const SourceModel source{1e-18, 1e-10, 2e-10, PairStatistics::Thermal};
  constexpr int n = 1'000'000;
  const auto lo = empirical_means(source, 5e7, 1, n);
  const auto hi = empirical_means(source, 1e8, 2, n);
  // relative sd of a ratio of independent means: sqrt(var1/m1^2/n + var2/m2^2/n)
  auto ratio_sd = [n](double m1, double v1, double m2, double v2) {
    return std::sqrt(v1 / (m1 * m1 * n) + v2 / (m2 * m2 * n));
  };
  const double r_pairs = hi.pairs / lo.pairs;
  EXPECT_NEAR(r_pairs, 4.0, 4.0 * 4.0 * ratio_sd(0.01, 0.01 * 1.01, 0.0025, 0.0025 * 1.0025));
  EXPECT_NEAR(hi.noise_s / lo.noise_s, 2.0, 4.0 * 2.0 * ratio_sd(0.01, 0.01, 0.005, 0.005));
  EXPECT_NEAR(hi.noise_i / lo.noise_i, 2.0, 4.0 * 2.0 * ratio_sd(0.02, 0.02, 0.01, 0.01));
}

// log-log regression slope of empirical means against pump photons
double fitted_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TEST(EmitPulse, ScalingExponents) {
  const SourceModel source{1e-18, 1e-10, 1e-10, PairStatistics::Thermal};
  const std::vector<double> powers{2e7, 4e7, 6e7, 8e7, 1e8};
  std::vector<double> pairs, noise;
  std::uint64_t stream = 10;
  for (double p : powers) {
    const auto m = empirical_means(source, p, stream++, 1'000'000);
    pairs.push_back(m.pairs);
    noise.push_back(m.noise_s);
  }
  EXPECT_NEAR(fitted_exponent(powers, pairs), 2.0, 0.05);
  EXPECT_NEAR(fitted_exponent(powers, noise), 1.0, 0.05);
}

TEST(ClickProbability, Examples) {
  EXPECT_EQ(click_probability(0, {0.3, 0.0}), 0.0);
  EXPECT_EQ(click_probability(3, {1.0, 0.0}), 1.0);
  EXPECT_NEAR(click_probability(1, {0.2, 0.001}), 0.2008, 1e-15);
}

TEST(ClickProbability, MonotoneInPhotonsEfficiencyAndDarks) {
  RandomStream s(5, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const DetectorConfig d{s.uniform(), s.uniform() * 0.1};
    const auto n = static_cast<std::uint64_t>(s.uniform() * 5);
    EXPECT_LE(click_probability(n, d), click_probability(n + 1, d));
    EXPECT_LE(click_probability(n, d), click_probability(n, {std::min(1.0, d.efficiency + 0.05), d.dark_prob}));
    EXPECT_LE(click_probability(n, d), click_probability(n, {d.efficiency, d.dark_prob + 0.01}));
  }
}

TEST(SampleClicks, TrivialEmissions) {
  RandomStream s(3, 0);
  const DetectorConfig perfect{1.0, 0.0};
  for (int i = 0; i < 100; ++i) {
    const auto none = sample_clicks({0, 0, 0}, {0.5, 0.0}, {0.5, 0.0}, s);
    EXPECT_FALSE(none.signal);
    EXPECT_FALSE(none.idler);
    const auto pair = sample_clicks({1, 0, 0}, perfect, perfect, s);
    EXPECT_TRUE(pair.signal);
    EXPECT_TRUE(pair.idler);
  }
}

TEST(SampleClicks, MonteCarloMatchesAnalyticClickProbability) {
  SourceModel source;
  source.pair_gain = 1e-18;
  const PumpConfig pump{1e8, 75.3e6};  // mu = 0.01
  const DetectorConfig det{0.25, 1e-4};
  const EmissionSampler emit(source, pump);
  RandomStream s(test::kSeed, 7);
  constexpr int n = 1'000'000;
  int clicks_s = 0, clicks_i = 0;
  for (int i = 0; i < n; ++i) {
    const auto c = sample_clicks(emit(s), det, det, s);
    clicks_s += c.signal;
    clicks_i += c.idler;
  }
  const double p = analytic_click_prob(source, pump, det, Channel::Signal);
  EXPECT_LT(std::abs(binomial_z(clicks_s, n, p)), 4.0);
  EXPECT_LT(std::abs(binomial_z(clicks_i, n, p)), 4.0);
}

TEST(AnalyticClickProb, DarkOnly) {
  EXPECT_DOUBLE_EQ(analytic_click_prob({}, {1e8, 75.3e6}, {0.3, 0.002}, Channel::Idler), 0.002);
}

TEST(AnalyticClickProb, ThermalUnitEfficiency) {
  const SourceModel source{1e-18, 0.0, 0.0, PairStatistics::Thermal};
  EXPECT_NEAR(analytic_click_prob(source, {1e8, 75.3e6}, {1.0, 0.0}, Channel::Signal), 1.0 - 1.0 / 1.01, 1e-15);
  EXPECT_NEAR(1.0 - 1.0 / 1.01, 0.00990099009900991, 1e-17);
}

TEST(AnalyticClickProb, SmallSignalExpansionMatchesQuadraticModel) {
  // dark + eta l N_P + eta q N_P^2 with every term below 0.02
  const SourceModel source{1e-18, 1e-10, 1e-10, PairStatistics::Thermal};
  const DetectorConfig det{0.2, 1e-3};
  for (double np : {1e7, 3e7, 6e7, 1e8}) {
    const double linear = det.efficiency * source.noise_coeff_signal * np;
    const double quadratic = det.efficiency * source.pair_gain * np * np;
    ASSERT_LT(linear, 0.02);
    ASSERT_LT(quadratic, 0.02);
    const double approx = det.dark_prob + linear + quadratic;
    const double exact = analytic_click_prob(source, {np, 75.3e6}, det, Channel::Signal);
    EXPECT_NEAR(exact / approx, 1.0, 0.02) << "N_P " << np;
  }
}

TEST(AnalyticCoincidenceProb, IndependentDarks) {
  const DetectorPair darks{{0.3, 0.01}, {0.4, 0.02}};
  EXPECT_NEAR(analytic_coincidence_prob({}, {1e8, 1.0}, darks.signal, darks.idler), 0.01 * 0.02, 1e-15);
}

TEST(AnalyticCoincidenceProb, LosslessThermalEqualsSingles) {
  const SourceModel source{1e-18, 0.0, 0.0, PairStatistics::Thermal};
  const PumpConfig pump{1e8, 75.3e6};
  const DetectorConfig perfect{1.0, 0.0};
  const double cc = analytic_coincidence_prob(source, pump, perfect, perfect);
  EXPECT_NEAR(cc, 1.0 - 2.0 / 1.01 + 1.0 / 1.01, 1e-15);
  EXPECT_NEAR(cc, 0.0099009900990099, 1e-15);
  EXPECT_NEAR(cc, analytic_click_prob(source, pump, perfect, Channel::Signal), 1e-15);
}

TEST(AnalyticCoincidenceProb, ExceedsProductOfSingles) {
  RandomStream s(11, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const SourceModel source{1e-18 * (0.01 + s.uniform()), 1e-10 * s.uniform(), 1e-10 * s.uniform(),
                             trial % 2 ? PairStatistics::Thermal : PairStatistics::Poissonian};
    const PumpConfig pump{1e8 * (0.1 + s.uniform()), 75.3e6};
    const DetectorConfig ds{0.01 + 0.99 * s.uniform(), 0.01 * s.uniform()};
    const DetectorConfig di{0.01 + 0.99 * s.uniform(), 0.01 * s.uniform()};
    const double cc = analytic_coincidence_prob(source, pump, ds, di);
    const double prod = analytic_click_prob(source, pump, ds, Channel::Signal) *
                        analytic_click_prob(source, pump, di, Channel::Idler);
    EXPECT_GT(cc, prod);
  }
}

TEST(AnalyticProbabilities, MonotoneInEachParameter) {
  RandomStream s(13, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto kind = trial % 2 ? PairStatistics::Thermal : PairStatistics::Poissonian;
    const SourceModel base{1e-18 * s.uniform(), 1e-10 * s.uniform(), 1e-10 * s.uniform(), kind};
    const PumpConfig pump{1e8, 75.3e6};
    const DetectorConfig det{0.9 * s.uniform(), 0.01 * s.uniform()};
    const double p0 = analytic_click_prob(base, pump, det, Channel::Signal);
    const double c0 = analytic_coincidence_prob(base, pump, det, det);

    SourceModel more_pairs = base;
    more_pairs.pair_gain *= 1.5;
    SourceModel more_noise = base;
    more_noise.noise_coeff_signal *= 1.5;
    more_noise.noise_coeff_idler *= 1.5;
    const DetectorConfig more_eta{det.efficiency + 0.05, det.dark_prob};
    const DetectorConfig more_dark{det.efficiency, det.dark_prob + 0.001};

    EXPECT_LE(p0, analytic_click_prob(more_pairs, pump, det, Channel::Signal));
    EXPECT_LE(p0, analytic_click_prob(more_noise, pump, det, Channel::Signal));
    EXPECT_LE(p0, analytic_click_prob(base, pump, more_eta, Channel::Signal));
    EXPECT_LE(p0, analytic_click_prob(base, pump, more_dark, Channel::Signal));
    EXPECT_LE(c0, analytic_coincidence_prob(more_pairs, pump, det, det));
    EXPECT_LE(c0, analytic_coincidence_prob(more_noise, pump, det, det));
    EXPECT_LE(c0, analytic_coincidence_prob(base, pump, more_eta, more_eta));
    EXPECT_LE(c0, analytic_coincidence_prob(base, pump, more_dark, more_dark));
  }
}

TEST(AccidentalRate, Examples) {
  EXPECT_NEAR(accidental_rate(0.01, 0.01), 1.0e-4, 1e-19);
  EXPECT_EQ(accidental_rate(0.0, 0.3), 0.0);
  EXPECT_NEAR(accidental_rate(0.02, 0.005), 1.0e-4, 1e-19);
  EXPECT_THROW(accidental_rate(1.2, 0.1), DomainError);
}

TEST(AccidentalRate, DelayedGateMonteCarloMatchesProduct) {
  RandomStream s(test::kSeed, 21);
  constexpr int n = 1'000'000;
  int delayed = 0;
  bool prev_signal = false;
  for (int i = 0; i < n; ++i) {
    const bool sig = s.uniform() < 0.02;
    const bool idl = s.uniform() < 0.005;
    delayed += prev_signal && idl;
    prev_signal = sig;
  }
  EXPECT_LT(std::abs(binomial_z(delayed, n - 1, accidental_rate(0.02, 0.005))), 4.0);
}

TEST(Validation, RejectsOutOfRangeConfigs) {
  EXPECT_THROW(validate(DetectorConfig{1.5, 0.0}), DomainError);
  EXPECT_THROW(validate(DetectorConfig{0.5, -0.1}), DomainError);
  EXPECT_THROW(validate(PumpConfig{1e8, 0.0}), DomainError);
  EXPECT_THROW(validate(SourceModel{-1.0, 0.0, 0.0, PairStatistics::Thermal}), DomainError);
}

TEST(CountsRecord, RatesAndMerge) {
  CountsRecord a{100, 10, 20, 5, 2};
  const CountsRecord b{100, 0, 0, 0, 0};
  a += b;
  EXPECT_EQ(a.gates_total, 200u);
  EXPECT_DOUBLE_EQ(a.rate_signal(), 0.05);
  EXPECT_DOUBLE_EQ(a.coinc_rate(), 0.025);
  EXPECT_DOUBLE_EQ(a.delayed_rate(), 0.01);
}

}  // namespace
}  // namespace fiberpair
