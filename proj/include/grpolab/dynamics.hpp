#ifndef GRPOLAB_DYNAMICS_HPP_
#define GRPOLAB_DYNAMICS_HPP_

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "grpolab/reward_channel.hpp"

namespace grpolab {

// Parameters of the closed-form success-probability recursion: the KL
// coefficient beta, the stabilizer epsilon added under every sigma square
// root, the reference success probability, and the optional channel. With a
// channel present the recursion is the noisy map h-tilde, otherwise h.
struct RecursionConfig {
  double beta = 1.0;
  double epsilon = 1e-6;
  double p_ref = 0.25;
  std::optional<NoiseSpec> noise;

  RecursionConfig() = default;
  RecursionConfig(double beta, double epsilon, double p_ref,
                  std::optional<NoiseSpec> noise = std::nullopt);
};

// Candidate policy pi and current policy pi_k over one prompt's responses.
struct DiscretePolicyPair {
  PromptSpec prompt;
  std::vector<double> pi;
  std::vector<double> pi_k;

  DiscretePolicyPair(PromptSpec prompt, std::vector<double> pi,
                     std::vector<double> pi_k);
};

// p_pi(q): probability mass the policy puts on the correct responses.
double success_probability(std::span<const double> policy_vec,
                           const PromptSpec& prompt);

// sqrt(p (1-p)), the Bernoulli reward standard deviation.
double success_sigma(double p);

// Epsilon-stabilized sigma, sqrt(p (1-p) + eps). The recursion uses it inside
// the square root; we apply the same convention to every sigma denominator.
double sigma_eps(double p, double eps);

// Exact total variation distance on finite supports, half the L1 distance.
double total_variation(std::span<const double> a, std::span<const double> b);

// Exact categorical KL(a || b).
double categorical_kl(std::span<const double> a, std::span<const double> b);

// The three surrogate normalizations: the clean standard deviation sigma_k,
// the noisy sigma-tilde with its (1 - rho+ - rho-) signal factor, and an
// arbitrary strictly positive divisor M (M = 1 recovers Dr.GRPO).
struct CleanVariant {
  double epsilon = 0.0;
};
struct NoisyVariant {
  NoiseSpec noise;
  double epsilon = 0.0;
};
struct GeneralizedVariant {
  double m = 1.0;
};
using LossVariant = std::variant<CleanVariant, NoisyVariant, GeneralizedVariant>;

// Surrogate loss of the candidate policy against the current one:
//   clean:        (p_pi - p_k) / sigma_k
//   noisy:        (1 - rho+ - rho-) (p_pi - p_k) / sigma-tilde_k
//   generalized:  (p_pi - p_k) / M
double surrogate_loss(const DiscretePolicyPair& pair,
                      const LossVariant& variant);

// Factor multiplying the TV term in the improvement lower bounds, evaluated at
// the current policy's success probability p:
//   clean: (1 - sigma)/sigma,  noisy: (1 - rho+ - rho- - sigma~)/sigma~,
//   generalized: (1 - M)/M.
double penalty_coefficient(double p, const LossVariant& variant);

struct BoundCheck {
  double lhs = 0.0;        // E_q[p_pi - p_k]
  double rhs = 0.0;        // E_q[L] - penalty
  double surrogate = 0.0;  // E_q[L]
  double penalty = 0.0;    // 2 sqrt(E coef^2) sqrt(E TV^2)
  bool holds = false;      // lhs >= rhs - 1e-9
};

// Numerically verifies an improvement lower bound on a weighted prompt set.
// variants.size() must equal pairs.size(); weights sum to 1.
BoundCheck improvement_bound_check(std::span<const DiscretePolicyPair> pairs,
                                   std::span<const double> weights,
                                   std::span<const LossVariant> variants);
BoundCheck improvement_bound_check(const DiscretePolicyPair& pair,
                                   const LossVariant& variant);

// Exponential-tilt weights of the closed-form update. At eps = 0 these are
// sqrt((1-p)/p) and sqrt(p/(1-p)); the stabilizer enters the shared
// denominator: omega+ = (1-p)/sigma_eps, omega- = p/sigma_eps.
struct OmegaWeights {
  double plus = 0.0;
  double minus = 0.0;
};
OmegaWeights omega_weights(double p, double epsilon);

// One step of the success-probability recursion:
//   h(p)  = 1 / (1 + (1-p_ref)/p_ref exp(-1 / (beta sigma_eps(p))))
//   h~(p) = same with exponent (1-rho+-rho-) / (beta sqrt(F(p)(1-F(p))+eps)),
// where F(p) = rho+ + (1-rho+-rho-) p. Output lies strictly in (p_ref, 1).
double closed_form_step(double p_prev, const RecursionConfig& config);

// trajectory[0] = p0, trajectory[i+1] = closed_form_step(trajectory[i]).
std::vector<double> iterate_recursion(const RecursionConfig& config, double p0,
                                      int k_max);

// Fixed point of the recursion map: damped iteration, with a bisection
// fallback on a sign change of h(p) - p over [p_ref, 1].
double fixed_point(const RecursionConfig& config, double tol = 1e-12,
                   int max_iter = 10000);

// Closed-form KL-regularized update: tilts the reference policy by
// exp((omega+ 1{correct} - omega- 1{incorrect}) / beta) and renormalizes.
// The omega weights are evaluated at the current policy's success
// probability (noisy-tilted when the config carries a channel), so the
// success probability of the result equals closed_form_step of the current
// success probability.
std::vector<double> closed_form_policy_update(
    std::span<const double> reference_policy,
    std::span<const double> current_policy, const PromptSpec& prompt,
    const RecursionConfig& config);

}  // namespace grpolab

#endif  // GRPOLAB_DYNAMICS_HPP_
