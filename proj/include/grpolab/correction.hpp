#ifndef GRPOLAB_CORRECTION_HPP_
#define GRPOLAB_CORRECTION_HPP_

#include <span>
#include <string>
#include <vector>

#include "grpolab/prng.hpp"
#include "grpolab/reward_channel.hpp"

namespace grpolab {

// Flip-rate pair used to invert the corruption channel. Construction rejects
// rates whose sum reaches 1 (InversionError), so a held instance is always
// usable for debiasing.
struct FlipRateEstimate {
  double rho_plus_hat = 0.0;
  double rho_minus_hat = 0.0;
  long sample_count = 0;  // size of the estimation set, 0 when rates are exact

  FlipRateEstimate() = default;
  FlipRateEstimate(double rho_plus_hat, double rho_minus_hat,
                   long sample_count = 0);

  // Wraps the true channel rates (the known-rates regime).
  static FlipRateEstimate exact(const NoiseSpec& noise);

  double signal() const { return 1.0 - rho_plus_hat - rho_minus_hat; }
};

// Debiased reward r-hat. The value is one of two atoms:
//   observed 1  ->  (1 - rho+) / (1 - rho+ - rho-)   (>= 1 when rho- > 0)
//   observed 0  ->      -rho+  / (1 - rho+ - rho-)   (<= 0)
// With the true rates, the expectation over the channel equals the true
// reward exactly.
struct DebiasedReward {
  double value = 0.0;
  int source_bit = 0;
};

DebiasedReward debias(int r_noisy, const FlipRateEstimate& rates);

// Unbiased estimator of the true reward variance p(1-p), computed from n >= 2
// debiased samples: the (n-1)-divisor sample variance minus the extra
// variance the stochastic correction itself injects,
//   Z = Var-hat(r-hat) - rbar rho-(1-rho-)/s^2 - (1-rbar) rho+(1-rho+)/s^2
// with s = 1 - rho+ - rho-. Can be negative in finite samples.
double variance_estimate_Z(std::span<const double> debiased,
                           const FlipRateEstimate& rates);

// Standard-deviation-scale divisor with a strictly positive floor:
// max(sqrt(max(z, 0)), sqrt(floor)). Monotone in z.
double clip_Z(double z, double floor);

// One row of an estimation set: the observed (model) score paired with the
// ground-truth label it was scored against.
struct LabeledScore {
  long prompt_id = 0;
  long response_id = 0;
  int r_observed = 0;
  int r_true = 0;
};

// One candidate item for the estimation holdout, before scoring.
struct HoldoutItem {
  long prompt_id = 0;
  long response_id = 0;
  int r_true = 0;
};

// Relabels a uniformly chosen subset of the positives so the r_true marginal
// hits the target fraction (|fraction - target| <= 1/n). Item identities are
// preserved so the later (score, truth) pairing stays intact. When positives
// are already at or below the target the set is returned unchanged.
std::vector<HoldoutItem> balanced_corrupt_holdout(
    std::vector<HoldoutItem> items, SequentialRng& rng,
    double target_positive_fraction = 0.5);

// Conditional-frequency estimator:
//   rho+ = #(observed 1 & true 0) / #(true 0)   (false positive rate)
//   rho- = #(observed 0 & true 1) / #(true 1)   (false negative rate)
// Equals the balanced 1/(2N) count formula exactly when the set is exactly
// balanced, and stays well defined under slight imbalance.
FlipRateEstimate estimate_flip_rates(std::span<const LabeledScore> labeled);

// How rate-estimation error rescales the normalization function:
// M' = M (1 - rho+_hat - rho-_hat) / (1 - rho+ - rho-). Advantages computed
// with estimated rates and divisor M coincide with advantages computed with
// the true rates and divisor M'.
double effective_M_scale(const NoiseSpec& true_rates,
                         const FlipRateEstimate& est_rates, double m);

// Estimation-set CSV, header `prompt_id,response_id,r_observed,r_true`.
std::vector<LabeledScore> read_labeled_csv(const std::string& path);
void write_labeled_csv(const std::string& path,
                       std::span<const LabeledScore> rows);

}  // namespace grpolab

#endif  // GRPOLAB_CORRECTION_HPP_
