#pragma once

// Dual-pump polarization-entangled biphoton.
//
// Pairs from the H pump are |HH>, pairs from the V pump are |VV>, and the
// pump relative phase enters twice because two pump photons feed each pair:
//
//   rho = 1/2 ( |HH><HH| + |VV><VV| + D e^{2i phi} |VV><HH| + h.c. )
//
// D = 1 is the pure entangled state, D = 0 the incoherent mixture.

#include <array>
#include <cmath>
#include <numbers>

#include "fiberpair/errors.hpp"
#include "fiberpair/random.hpp"

namespace fiberpair {

struct BiphotonState {
  double pump_phase = 0.0;          ///< radians
  double distinguishability = 1.0;  ///< coherence factor D in [0, 1]
};

/// Polarizer pass axes measured from H, radians.
struct AnalyzerSettings {
  double theta_signal = std::numbers::pi / 4;
  double theta_idler = std::numbers::pi / 4;
};

struct JointOutcome {
  double p_pass_pass = 0.0;
  double p_pass_block = 0.0;  ///< signal passes, idler blocked
  double p_block_pass = 0.0;
  double p_block_block = 0.0;

  double sum() const { return p_pass_pass + p_pass_block + p_block_pass + p_block_block; }
};

inline void validate(const BiphotonState& state) {
  if (!(state.distinguishability >= 0.0 && state.distinguishability <= 1.0)) {
    throw DomainError("distinguishability must lie in [0, 1]");
  }
}

namespace detail {

inline double pass_both(double theta_s, double theta_i, double coherence) {
  const double cs = std::cos(theta_s), ss = std::sin(theta_s);
  const double ci = std::cos(theta_i), si = std::sin(theta_i);
  const double p = 0.5 * (cs * cs * ci * ci + ss * ss * si * si + 2.0 * coherence * cs * ss * ci * si);
  return p < 0.0 ? 0.0 : p;
}

}  // namespace detail

/// Four-outcome distribution for one pair behind the two analyzers. A blocked
/// arm is a projection onto the orthogonal axis theta + pi/2.
inline JointOutcome joint_outcome_probs(const BiphotonState& state, const AnalyzerSettings& analyzers) {
  validate(state);
  constexpr double kQuarter = std::numbers::pi / 2;
  const double coherence = state.distinguishability * std::cos(2.0 * state.pump_phase);
  const double ts = analyzers.theta_signal, ti = analyzers.theta_idler;
  return {detail::pass_both(ts, ti, coherence), detail::pass_both(ts, ti + kQuarter, coherence),
          detail::pass_both(ts + kQuarter, ti, coherence),
          detail::pass_both(ts + kQuarter, ti + kQuarter, coherence)};
}

/// Marginal pass probability of either photon. The HH and VV weights are
/// equal, so this is 1/2 for every angle, phase and D.
inline double singles_prob(const BiphotonState& state, double /*theta*/) {
  validate(state);
  return 0.5;
}

/// Pass-pass probability with both analyzers at pi/4.
inline double ideal_coincidence_fringe(double pump_phase, double distinguishability) {
  validate(BiphotonState{pump_phase, distinguishability});
  return 0.25 * (1.0 + distinguishability * std::cos(2.0 * pump_phase));
}

/// Normalized pump self-interference seen by the reference detector.
inline double classical_fringe(double pump_phase) { return 0.5 * (1.0 + std::cos(pump_phase)); }

enum class PairOutcome { PassPass, PassBlock, BlockPass, BlockBlock };

/// Categorical draw over a JointOutcome; one uniform per call.
inline PairOutcome sample_outcome(const JointOutcome& probs, RandomStream& stream) {
  const double u = stream.uniform() * probs.sum();
  double acc = probs.p_pass_pass;
  if (u < acc) return PairOutcome::PassPass;
  acc += probs.p_pass_block;
  if (u < acc) return PairOutcome::PassBlock;
  acc += probs.p_block_pass;
  if (u < acc) return PairOutcome::BlockPass;
  return PairOutcome::BlockBlock;
}

}  // namespace fiberpair
