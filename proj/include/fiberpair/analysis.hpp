#pragma once

// Inference on count data: weighted quadratic pump-power fit, accidental and
// dark subtraction, discrete-frequency sinusoid fits and visibility.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "fiberpair/errors.hpp"

namespace fiberpair {

/// One measured operating point: `counts` clicks in `gates` gates at
/// `pump_photons` photons per pulse. Counts may be fractional for
/// synthetic data.
struct RatePoint {
  double pump_photons = 0.0;
  double counts = 0.0;
  double gates = 0.0;
};

/// rate = n_d + s1 * N_P + s2 * N_P^2, rates per gate.
struct QuadraticFitResult {
  double n_d_hat = 0.0;
  double s1_hat = 0.0;
  double s2_hat = 0.0;
  double n_d_err = 0.0;
  double s1_err = 0.0;
  double s2_err = 0.0;
  double residual_rms = 0.0;  ///< unweighted RMS of rate residuals
  double chi_square = 0.0;
  int dof = 0;
  double condition_number = 0.0;  ///< of the whitened, rescaled design matrix
  bool poorly_conditioned = false;  ///< pump range spans less than one decade

  double evaluate(double pump_photons) const {
    return n_d_hat + s1_hat * pump_photons + s2_hat * pump_photons * pump_photons;
  }
};

/// Per-gate rate variance with a floor of one count, in rate units squared.
inline double binomial_rate_variance(double counts, double gates) {
  const double rate = counts / gates;
  return std::max(rate * (1.0 - rate), 1.0 / gates) / gates;
}

/// Weighted least squares of per-gate rates against a quadratic in pump
/// photons. Pump values are rescaled to order one and the whitened system is
/// solved by column-pivoted Householder QR.
inline QuadraticFitResult fit_quadratic(std::span<const RatePoint> points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.gates > 0.0)) throw AnalysisError("fit_quadratic: every point needs gates > 0");
    distinct.insert(p.pump_photons);
  }
  if (distinct.size() < 3) {
    throw AnalysisError("fit_quadratic: rank deficient, need at least 3 distinct pump powers");
  }

  double scale = 0.0;
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (double x : distinct) {
    scale = std::max(scale, std::abs(x));
    if (x > 0.0) smallest_positive = std::min(smallest_positive, x);
  }
  const bool has_zero = *distinct.begin() <= 0.0;

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  Eigen::VectorXd rates(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& p = points[static_cast<std::size_t>(k)];
    const double x = p.pump_photons / scale;
    const double sigma = std::sqrt(binomial_rate_variance(p.counts, p.gates));
    rates(k) = p.counts / p.gates;
    design.row(k) << 1.0 / sigma, x / sigma, x * x / sigma;
    rhs(k) = rates(k) / sigma;
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw AnalysisError("fit_quadratic: design matrix is rank deficient");
  const Eigen::Vector3d coef = qr.solve(rhs);

  // (A^T W A)^{-1} = P R^{-1} R^{-T} P^T
  const Eigen::Matrix3d r = qr.matrixR().topLeftCorner(3, 3).template triangularView<Eigen::Upper>();
  const Eigen::Matrix3d r_inv = r.inverse();
  const Eigen::Matrix3d perm = qr.colsPermutation();
  const Eigen::Matrix3d cov = perm * (r_inv * r_inv.transpose()) * perm.transpose();

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const auto& sv = svd.singularValues();

  QuadraticFitResult out;
  out.n_d_hat = coef(0);
  out.s1_hat = coef(1) / scale;
  out.s2_hat = coef(2) / (scale * scale);
  out.n_d_err = std::sqrt(cov(0, 0));
  out.s1_err = std::sqrt(cov(1, 1)) / scale;
  out.s2_err = std::sqrt(cov(2, 2)) / (scale * scale);
  const Eigen::VectorXd whitened_residual = design * coef - rhs;
  out.chi_square = whitened_residual.squaredNorm();
  out.dof = static_cast<int>(n) - 3;
  double sum_sq = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = points[static_cast<std::size_t>(k)].pump_photons;
    const double resid = rates(k) - out.evaluate(x);
    sum_sq += resid * resid;
  }
  out.residual_rms = std::sqrt(sum_sq / static_cast<double>(n));
  out.condition_number = sv(0) / sv(sv.size() - 1);
  out.poorly_conditioned = !has_zero && scale / smallest_positive < 10.0;
  return out;
}

/// Measured rate at zero pump power, if the data contain such a point.
inline std::optional<double> zero_pump_rate(std::span<const RatePoint> points) {
  double counts = 0.0, gates = 0.0;
  for (const auto& p : points) {
    if (p.pump_photons == 0.0) {
      counts += p.counts;
      gates += p.gates;
    }
  }
  if (gates <= 0.0) return std::nullopt;
  return counts / gates;
}

struct CorrectedCount {
  double value = 0.0;
  double error = 0.0;
};

/// coinc - delayed, Poisson errors added in quadrature. Negative results are kept.
inline CorrectedCount subtract_accidentals(double coinc, double delayed) {
  return {coinc - delayed, std::sqrt(std::max(coinc, 0.0) + std::max(delayed, 0.0))};
}

/// values = offset + amplitude * cos(frequency * phi - phase0)
struct SinusoidFitResult {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase0 = 0.0;
  int frequency = 0;  ///< cycles per 2 pi of pump phase
  double visibility = 0.0;
  double offset_err = 0.0;
  double amplitude_err = 0.0;
  double visibility_err = 0.0;
  double cos_coef = 0.0;
  double sin_coef = 0.0;
  double cos_err = 0.0;
  double sin_err = 0.0;
  double chi_square = 0.0;
  /// chi-square of the runner-up candidate over that of the selection
  /// (infinite when only one candidate was tried)
  double selection_margin = std::numeric_limits<double>::infinity();
  /// amplitude exceeds three standard errors
  bool reliable = false;
};

namespace detail {

inline void check_sinusoid_grid(std::span<const double> phases, int lowest_frequency) {
  if (phases.size() < 8) throw AnalysisError("fit_sinusoid: need at least 8 points");
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  const double period = 2.0 * std::numbers::pi / lowest_frequency;
  if (*hi - *lo < period * (1.0 - 1e-9)) {
    throw AnalysisError("fit_sinusoid: phases do not span a full period of the lowest candidate");
  }
}

inline SinusoidFitResult fit_single_frequency(std::span<const double> phases, std::span<const double> values,
                                              std::span<const double> errors, int k) {
  const auto n = static_cast<Eigen::Index>(phases.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double w = 1.0 / errors[u];
    design.row(i) << w, w * std::cos(k * phases[u]), w * std::sin(k * phases[u]);
    rhs(i) = w * values[u];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw AnalysisError("fit_sinusoid: degenerate phase grid");
  const Eigen::Vector3d c = qr.solve(rhs);
  const Eigen::Matrix3d r = qr.matrixR().topLeftCorner(3, 3).template triangularView<Eigen::Upper>();
  const Eigen::Matrix3d r_inv = r.inverse();
  const Eigen::Matrix3d perm = qr.colsPermutation();
  const Eigen::Matrix3d cov = perm * (r_inv * r_inv.transpose()) * perm.transpose();

  SinusoidFitResult out;
  out.frequency = k;
  out.offset = c(0);
  out.cos_coef = c(1);
  out.sin_coef = c(2);
  out.offset_err = std::sqrt(cov(0, 0));
  out.cos_err = std::sqrt(cov(1, 1));
  out.sin_err = std::sqrt(cov(2, 2));
  out.amplitude = std::hypot(c(1), c(2));
  out.phase0 = std::atan2(c(2), c(1));
  out.chi_square = (design * c - rhs).squaredNorm();

  if (out.amplitude > 0.0) {
    const Eigen::Vector3d grad(0.0, c(1) / out.amplitude, c(2) / out.amplitude);
    out.amplitude_err = std::sqrt(grad.dot(cov * grad));
  } else {
    out.amplitude_err = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
  }
  if (out.offset != 0.0) {
    out.visibility = out.amplitude / out.offset;
    // d V / d(offset, a, b)
    const double a_over = out.amplitude > 0.0 ? 1.0 / (out.offset * out.amplitude) : 0.0;
    const Eigen::Vector3d grad(-out.visibility / out.offset, c(1) * a_over, c(2) * a_over);
    out.visibility_err = std::sqrt(grad.dot(cov * grad));
    if (out.amplitude == 0.0) out.visibility_err = out.amplitude_err / std::abs(out.offset);
  }
  out.reliable = out.amplitude > 3.0 * out.amplitude_err;
  return out;
}

}  // namespace detail

/// Linear least squares on {1, cos k phi, sin k phi} for each candidate k;
/// returns the candidate with the smallest weighted residual.
inline SinusoidFitResult fit_sinusoid(std::span<const double> phases, std::span<const double> values,
                                      std::span<const double> errors, std::span<const int> frequency_candidates) {
  if (values.size() != phases.size() || errors.size() != phases.size()) {
    throw AnalysisError("fit_sinusoid: phases, values and errors differ in length");
  }
  if (frequency_candidates.empty()) throw AnalysisError("fit_sinusoid: no frequency candidates");
  for (int k : frequency_candidates) {
    if (k <= 0) throw AnalysisError("fit_sinusoid: frequency candidates must be positive");
  }
  for (double e : errors) {
    if (!(e > 0.0) || !std::isfinite(e)) throw AnalysisError("fit_sinusoid: errors must be finite and > 0");
  }
  detail::check_sinusoid_grid(phases, *std::min_element(frequency_candidates.begin(), frequency_candidates.end()));

  std::vector<SinusoidFitResult> fits;
  for (int k : frequency_candidates) fits.push_back(detail::fit_single_frequency(phases, values, errors, k));
  std::stable_sort(fits.begin(), fits.end(),
                   [](const auto& a, const auto& b) { return a.chi_square < b.chi_square; });
  SinusoidFitResult best = fits.front();
  if (fits.size() > 1) {
    best.selection_margin = best.chi_square > 0.0 ? fits[1].chi_square / best.chi_square
                                                  : std::numeric_limits<double>::infinity();
  }
  return best;
}

inline SinusoidFitResult fit_sinusoid(std::span<const double> phases, std::span<const double> values,
                                      std::span<const double> errors) {
  static constexpr int kDefaultCandidates[] = {1, 2};
  return fit_sinusoid(phases, values, errors, kDefaultCandidates);
}

/// Count-data variant: the variance of point i is max(model_i + extra_variance_i, 1)
/// with model_i taken from the current fit, iterated to a fixed point. Weights
/// from the observed counts favour downward fluctuations and pull low-count
/// fringe minima (hence visibility) in one direction; model weights do not.
inline SinusoidFitResult fit_sinusoid_counts(std::span<const double> phases, std::span<const double> counts,
                                             std::span<const double> extra_variance,
                                             std::span<const int> frequency_candidates) {
  if (counts.size() != phases.size() || extra_variance.size() != phases.size()) {
    throw AnalysisError("fit_sinusoid_counts: inputs differ in length");
  }
  std::vector<double> errors(phases.size());
  auto reweight = [&](auto variance_of) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      errors[i] = std::sqrt(std::max(variance_of(i) + extra_variance[i], 1.0));
    }
  };
  reweight([&](std::size_t i) { return counts[i]; });
  // validates the inputs once with observed-count weights
  fit_sinusoid(phases, counts, errors, frequency_candidates);

  std::vector<SinusoidFitResult> fits;
  for (int k : frequency_candidates) {
    reweight([&](std::size_t i) { return counts[i]; });
    SinusoidFitResult fit;
    for (int iter = 0; iter < 50; ++iter) {
      fit = detail::fit_single_frequency(phases, counts, errors, k);
      double change = 0.0;
      const std::vector<double> previous = errors;
      reweight([&](std::size_t i) {
        return fit.offset + fit.cos_coef * std::cos(k * phases[i]) + fit.sin_coef * std::sin(k * phases[i]);
      });
      for (std::size_t i = 0; i < errors.size(); ++i) change = std::max(change, std::abs(errors[i] / previous[i] - 1.0));
      if (change < 1e-12) break;
    }
    fits.push_back(detail::fit_single_frequency(phases, counts, errors, k));
  }
  std::stable_sort(fits.begin(), fits.end(),
                   [](const auto& a, const auto& b) { return a.chi_square < b.chi_square; });
  SinusoidFitResult best = fits.front();
  if (fits.size() > 1) {
    best.selection_margin = best.chi_square > 0.0 ? fits[1].chi_square / best.chi_square
                                                  : std::numeric_limits<double>::infinity();
  }
  return best;
}

inline SinusoidFitResult fit_sinusoid_counts(std::span<const double> phases, std::span<const double> counts,
                                             std::span<const double> extra_variance) {
  static constexpr int kDefaultCandidates[] = {1, 2};
  return fit_sinusoid_counts(phases, counts, extra_variance, kDefaultCandidates);
}

inline double frequency_ratio(const SinusoidFitResult& coincidence_fit, const SinusoidFitResult& classical_fit) {
  return static_cast<double>(coincidence_fit.frequency) / static_cast<double>(classical_fit.frequency);
}

struct FlatnessResult {
  double max_component_sigma = 0.0;
  bool flat = true;
};

/// Fits k = 1 and k = 2 sinusoids and reports the largest |cos| or |sin|
/// coefficient in units of its standard error. Flat when every component is
/// below 3 sigma.
inline FlatnessResult component_flatness(std::span<const double> phases, std::span<const double> values,
                                         std::span<const double> errors) {
  if (values.size() != phases.size() || errors.size() != phases.size()) {
    throw AnalysisError("flatness: inputs differ in length");
  }
  if (phases.size() < 8) throw AnalysisError("flatness: need at least 8 phase points");
  detail::check_sinusoid_grid(phases, 1);
  FlatnessResult out;
  for (int k : {1, 2}) {
    const auto fit = detail::fit_single_frequency(phases, values, errors, k);
    out.max_component_sigma = std::max({out.max_component_sigma, std::abs(fit.cos_coef) / fit.cos_err,
                                        std::abs(fit.sin_coef) / fit.sin_err});
  }
  out.flat = out.max_component_sigma < 3.0;
  return out;
}

/// component_flatness on per-gate singles rates with binomial errors.
inline FlatnessResult flatness_test(std::span<const double> phases, std::span<const double> singles,
                                    std::span<const double> gates) {
  if (singles.size() != phases.size() || gates.size() != phases.size()) {
    throw AnalysisError("flatness_test: inputs differ in length");
  }
  std::vector<double> rates(phases.size()), errors(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!(gates[i] > 0.0)) throw AnalysisError("flatness_test: gates must be > 0");
    rates[i] = singles[i] / gates[i];
    errors[i] = std::sqrt(binomial_rate_variance(singles[i], gates[i]));
  }
  return component_flatness(phases, rates, errors);
}

}  // namespace fiberpair
