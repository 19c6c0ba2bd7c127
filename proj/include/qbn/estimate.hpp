#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qbn/common.hpp"
#include "qbn/oracle.hpp"
#include "qbn/qprep.hpp"
#include "qbn/qsim.hpp"
#include "qbn/scoring.hpp"

namespace qbn {

// Inverts the amplitude ratio back to the order sum:
//   log sum = log|z1/z0| + log n! - (n/2) log 2 + sum of level scales.
// The branch weight cancels in the ratio, so the same formula serves the
// restricted and unrestricted circuits.
inline double recover_log_sum(const AmplitudePair& pair, int n, const std::vector<double>& level_scale_log) {
  if (std::abs(pair.z0) == 0.0) throw DegenerateDataError("reference amplitude z0 vanished");
  double out = std::log(std::abs(pair.z1)) - std::log(std::abs(pair.z0));
  out += log_factorial(n) - 0.5 * n * std::log(2.0);
  for (double c : level_scale_log) out += c;
  return out;
}

struct EstimateOptions {
  std::optional<int> lmax;
  enum class Mode { ExactAmplitude, Sampled } mode = Mode::ExactAmplitude;
  std::uint64_t shots = 100000;
  std::uint64_t seed = 1;
  SimOptions sim;
  bool compare_oracle = true;
  int perm_bound = 8;
};

struct EstimationResult {
  int n = 0;
  int lmax = -1;  // -1 = unrestricted
  std::string mode;
  double epsilon_log = 0.0;
  std::vector<double> level_scale_log;

  Amplitude z1_num, z0_num, z1_den, z0_den;
  double ratio_num = 0.0;  // |z1/z0| of the feature run
  double ratio_den = 0.0;  // |z1/z0| of the trivial run
  double log_sum_num = kNegInf;
  double log_sum_den = kNegInf;
  double posterior = 0.0;
  bool degenerate_numerator = false;

  // Sampled mode only.
  std::optional<double> sampled_posterior;
  std::optional<double> sampled_lo, sampled_hi;
  std::optional<double> sampled_ratio_num, sampled_ratio_den;
  std::optional<std::uint64_t> amplify_iterations_num, amplify_iterations_den;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;

  std::optional<double> oracle_value;
  std::optional<double> discrepancy;
};

namespace detail {

struct SampledRatio {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t iterations = 0;
};

inline void wilson_bounds(double hits, double total, double& lo, double& hi) {
  constexpr double z = 1.959963984540054;  // 95%
  const double phat = hits / total;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / total;
  const double center = phat + z2 / (2.0 * total);
  const double half = z * std::sqrt(phat * (1.0 - phat) / total + z2 / (4.0 * total * total));
  lo = (center - half) / denom;
  hi = (center + half) / denom;
}

inline double odds_ratio_sqrt(double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(p / (1.0 - p));
}

// Amplifies toward omega = 0, measures (mu0, omega), and turns the
// conditional mu0 split into a |z1/z0| estimate with a Wilson interval.
inline SampledRatio sampled_amplitude_ratio(const StateVector& prepared, const QubitLayout& layout,
                                            std::uint64_t shots, std::uint64_t seed) {
  const Projector target = target_projector(layout);
  const double p = projector_weight(prepared, target);
  SampledRatio out;
  out.iterations = optimal_iterations(p);
  const StateVector boosted = amplify(prepared, target, out.iterations);
  const auto hist = sample(boosted, {layout.mu0, layout.omega}, shots, seed);

  auto get = [&](const char* key) {
    auto it = hist.find(key);
    return it == hist.end() ? std::uint64_t{0} : it->second;
  };
  const double c1 = static_cast<double>(get("10"));  // mu0 = 1, omega = 0
  const double c0 = static_cast<double>(get("00"));  // mu0 = 0, omega = 0
  if (c0 + c1 == 0.0) throw DegenerateDataError("no omega = 0 outcomes observed");
  if (c0 == 0.0) throw DegenerateDataError("reference branch never observed");

  const double phat = c1 / (c0 + c1);
  double lo = 0.0, hi = 0.0;
  wilson_bounds(c1, c0 + c1, lo, hi);
  out.point = odds_ratio_sqrt(phat);
  out.lo = odds_ratio_sqrt(lo);
  out.hi = odds_ratio_sqrt(hi);
  return out;
}

}  // namespace detail

// Full pipeline: score tables for the feature and the trivial feature,
// per-level scales taken from the trivial table and shared by both runs,
// one simulated preparation per table, and the ratio of recovered sums.
// In sampled mode the ratio additionally comes from measured frequencies
// after amplification.
inline EstimationResult estimate_feature_posterior(const Dataset& d, const PriorSpec& prior,
                                                   const ModularFeatureSet& f,
                                                   const EstimateOptions& opts = {}) {
  if (f.n != d.n) throw DimensionError("feature set and dataset sizes differ");
  const QubitLayout layout = QubitLayout::make(d.n, opts.lmax);
  if (layout.qubit_count > opts.sim.max_qubits)
    throw SizeError("circuit needs " + std::to_string(layout.qubit_count) + " qubits, memory bound is " +
                    std::to_string(opts.sim.max_qubits));

  const LocalScoreTable den_table = build_score_table(d, prior, nullptr, opts.lmax);
  const LocalScoreTable num_table = build_score_table(d, prior, &f, opts.lmax);
  const std::vector<double> scales = level_scales_log(den_table);

  const AngleTable den_angles = angles_from_scores(den_table, scales);
  const AngleTable num_angles = angles_from_scores(num_table, scales);
  if (num_angles.level_scale_log != den_angles.level_scale_log)
    throw DimensionError("numerator and denominator runs must share level scales");

  EstimationResult r;
  r.n = d.n;
  r.lmax = opts.lmax ? *opts.lmax : -1;
  r.mode = opts.mode == EstimateOptions::Mode::ExactAmplitude ? "exact" : "sampled";
  r.epsilon_log = log_branch_weight(d.n, layout.lmax);
  r.level_scale_log = scales;
  r.seed = opts.seed;

  const StateVector num_state = run(build_state_prep(layout, num_angles), opts.sim);
  {
    const AmplitudePair pair = extract_hypothesis_amplitudes(num_state, layout);
    r.z1_num = pair.z1;
    r.z0_num = pair.z0;
    r.ratio_num = std::abs(pair.z1) / std::abs(pair.z0);
    r.degenerate_numerator = std::abs(pair.z1) == 0.0;
    r.log_sum_num = recover_log_sum(pair, d.n, scales);
  }
  if (opts.mode == EstimateOptions::Mode::Sampled) r.shots = opts.shots;
  if (opts.mode == EstimateOptions::Mode::Sampled && !r.degenerate_numerator) {
    const auto sr = detail::sampled_amplitude_ratio(num_state, layout, opts.shots, opts.seed);
    r.sampled_ratio_num = sr.point;
    r.amplify_iterations_num = sr.iterations;
    // Stash the interval; combined with the denominator run below.
    r.sampled_lo = sr.lo;
    r.sampled_hi = sr.hi;
  }

  const StateVector den_state = run(build_state_prep(layout, den_angles), opts.sim);
  {
    const AmplitudePair pair = extract_hypothesis_amplitudes(den_state, layout);
    r.z1_den = pair.z1;
    r.z0_den = pair.z0;
    r.ratio_den = std::abs(pair.z1) / std::abs(pair.z0);
    r.log_sum_den = recover_log_sum(pair, d.n, scales);
  }
  if (r.log_sum_den == kNegInf) throw DegenerateDataError("denominator order sum vanished");
  r.posterior = r.degenerate_numerator ? 0.0 : std::exp(r.log_sum_num - r.log_sum_den);

  if (opts.mode == EstimateOptions::Mode::Sampled) {
    if (r.degenerate_numerator) {
      r.sampled_posterior = 0.0;
      r.sampled_lo = 0.0;
      r.sampled_hi = 0.0;
    } else {
      const auto sr = detail::sampled_amplitude_ratio(den_state, layout, opts.shots, opts.seed + 1);
      if (sr.point == 0.0)
        throw DegenerateDataError(
            "trivial-feature branch was never observed; the scaled order sum is too small for this shot budget");
      r.sampled_ratio_den = sr.point;
      r.amplify_iterations_den = sr.iterations;
      // Scale factors and the branch weight cancel between the two runs.
      r.sampled_posterior = *r.sampled_ratio_num / sr.point;
      r.sampled_lo = *r.sampled_lo / sr.hi;
      r.sampled_hi = sr.lo > 0.0 ? *r.sampled_hi / sr.lo : std::numeric_limits<double>::infinity();
    }
  }

  if (opts.compare_oracle && d.n <= opts.perm_bound) {
    const PosteriorReport oracle = ordered_feature_posterior(d, prior, f, opts.lmax, opts.perm_bound);
    r.oracle_value = oracle.feature_value;
    const double estimate = r.sampled_posterior ? *r.sampled_posterior : r.posterior;
    r.discrepancy = std::abs(estimate - oracle.feature_value);
  }
  return r;
}

}  // namespace qbn
