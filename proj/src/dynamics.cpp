#include "grpolab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "grpolab/errors.hpp"

namespace grpolab {

namespace {

constexpr double kBoundSlack = 1e-9;

void check_distribution(std::span<const double> vec, const PromptSpec& prompt,
                        const char* name) {
  if (vec.size() != static_cast<std::size_t>(prompt.response_count)) {
    throw std::invalid_argument(std::string(name) +
                                " length does not match response count");
  }
  double sum = 0.0;
  for (double v : vec) {
    if (v < 0.0) throw std::invalid_argument(std::string(name) + " has negative mass");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(name) + " must sum to 1");
  }
}

// Recursion exponent w+ + w- for the current success probability. Clean maps
// use 1/(beta sigma_eps); noisy maps use the attenuated signal over the
// observed-reward deviation.
double recursion_exponent(double p, const RecursionConfig& config) {
  if (config.noise) {
    const double f = noisy_mean(p, *config.noise);
    return config.noise->signal() /
           (config.beta * std::sqrt(f * (1.0 - f) + config.epsilon));
  }
  return 1.0 / (config.beta * sigma_eps(p, config.epsilon));
}

}  // namespace

RecursionConfig::RecursionConfig(double beta, double epsilon, double p_ref,
                                 std::optional<NoiseSpec> noise)
    : beta(beta), epsilon(epsilon), p_ref(p_ref), noise(noise) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(p_ref > 0.0 && p_ref < 1.0)) {
    throw std::invalid_argument("p_ref must lie in (0,1)");
  }
  if (noise && !noise->invertible()) {
    throw std::invalid_argument(
        "recursion requires 1 - rho+ - rho- > 0");
  }
}

DiscretePolicyPair::DiscretePolicyPair(PromptSpec prompt_in,
                                       std::vector<double> pi_in,
                                       std::vector<double> pi_k_in)
    : prompt(std::move(prompt_in)),
      pi(std::move(pi_in)),
      pi_k(std::move(pi_k_in)) {
  check_distribution(pi, prompt, "pi");
  check_distribution(pi_k, prompt, "pi_k");
}

double success_probability(std::span<const double> policy_vec,
                           const PromptSpec& prompt) {
  if (policy_vec.size() != static_cast<std::size_t>(prompt.response_count)) {
    throw std::invalid_argument("policy vector length mismatch");
  }
  double p = 0.0;
  for (int o : prompt.correct_set) p += policy_vec[o];
  return p;
}

double success_sigma(double p) { return std::sqrt(p * (1.0 - p)); }

double sigma_eps(double p, double eps) {
  return std::sqrt(p * (1.0 - p) + eps);
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("total_variation size mismatch");
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] - b[i]);
  return 0.5 * l1;
}

double categorical_kl(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("categorical_kl size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    if (b[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += a[i] * std::log(a[i] / b[i]);
  }
  return kl;
}

double surrogate_loss(const DiscretePolicyPair& pair,
                      const LossVariant& variant) {
  const double p = success_probability(pair.pi, pair.prompt);
  const double p_k = success_probability(pair.pi_k, pair.prompt);
  const double gap = p - p_k;
  return std::visit(
      [&](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, CleanVariant>) {
          const double sigma = sigma_eps(p_k, v.epsilon);
          if (sigma == 0.0) {
            throw DegenerateDivisor("sigma_k = 0 at p_k in {0,1} with eps=0");
          }
          return gap / sigma;
        } else if constexpr (std::is_same_v<V, NoisyVariant>) {
          const double f = noisy_mean(p_k, v.noise);
          const double sigma = std::sqrt(f * (1.0 - f) + v.epsilon);
          if (sigma == 0.0) {
            throw DegenerateDivisor("sigma~_k = 0: degenerate observed reward");
          }
          return v.noise.signal() * gap / sigma;
        } else {
          if (!(v.m > 0.0)) {
            throw DegenerateDivisor("M must be strictly positive");
          }
          return gap / v.m;
        }
      },
      variant);
}

double penalty_coefficient(double p, const LossVariant& variant) {
  return std::visit(
      [&](const auto& v) -> double {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, CleanVariant>) {
          const double sigma = sigma_eps(p, v.epsilon);
          if (sigma == 0.0) {
            throw DegenerateDivisor("sigma = 0 at p in {0,1} with eps=0");
          }
          return (1.0 - sigma) / sigma;
        } else if constexpr (std::is_same_v<V, NoisyVariant>) {
          const double f = noisy_mean(p, v.noise);
          const double sigma = std::sqrt(f * (1.0 - f) + v.epsilon);
          if (sigma == 0.0) {
            throw DegenerateDivisor("sigma~ = 0: degenerate observed reward");
          }
          return (v.noise.signal() - sigma) / sigma;
        } else {
          if (!(v.m > 0.0)) {
            throw DegenerateDivisor("M must be strictly positive");
          }
          return (1.0 - v.m) / v.m;
        }
      },
      variant);
}

BoundCheck improvement_bound_check(std::span<const DiscretePolicyPair> pairs,
                                   std::span<const double> weights,
                                   std::span<const LossVariant> variants) {
  if (pairs.size() != weights.size() || pairs.size() != variants.size()) {
    throw std::invalid_argument("improvement_bound_check size mismatch");
  }
  BoundCheck check;
  double mean_coef_sq = 0.0;
  double mean_tv_sq = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const DiscretePolicyPair& pair = pairs[i];
    const double w = weights[i];
    const double p = success_probability(pair.pi, pair.prompt);
    const double p_k = success_probability(pair.pi_k, pair.prompt);
    const double coef = penalty_coefficient(p_k, variants[i]);
    const double tv = total_variation(pair.pi, pair.pi_k);
    check.lhs += w * (p - p_k);
    check.surrogate += w * surrogate_loss(pair, variants[i]);
    mean_coef_sq += w * coef * coef;
    mean_tv_sq += w * tv * tv;
  }
  check.penalty = 2.0 * std::sqrt(mean_coef_sq) * std::sqrt(mean_tv_sq);
  check.rhs = check.surrogate - check.penalty;
  check.holds = check.lhs >= check.rhs - kBoundSlack;
  return check;
}

BoundCheck improvement_bound_check(const DiscretePolicyPair& pair,
                                   const LossVariant& variant) {
  const double weight = 1.0;
  return improvement_bound_check({&pair, 1}, {&weight, 1}, {&variant, 1});
}

OmegaWeights omega_weights(double p, double epsilon) {
  const double sigma = sigma_eps(p, epsilon);
  if (sigma == 0.0) {
    throw DegenerateDivisor("omega weights undefined at p in {0,1} with eps=0");
  }
  return {(1.0 - p) / sigma, p / sigma};
}

double closed_form_step(double p_prev, const RecursionConfig& config) {
  const double odds = (1.0 - config.p_ref) / config.p_ref;
  return 1.0 / (1.0 + odds * std::exp(-recursion_exponent(p_prev, config)));
}

std::vector<double> iterate_recursion(const RecursionConfig& config, double p0,
                                      int k_max) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) {
    throw std::invalid_argument("p0 must lie in [0,1]");
  }
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  std::vector<double> trajectory;
  trajectory.reserve(static_cast<std::size_t>(k_max) + 1);
  trajectory.push_back(p0);
  for (int k = 0; k < k_max; ++k) {
    trajectory.push_back(closed_form_step(trajectory.back(), config));
  }
  return trajectory;
}

double fixed_point(const RecursionConfig& config, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const auto step = [&](double p) { return closed_form_step(p, config); };

  // Damped iteration. The recursion maps [0,1] into (p_ref, 1), so iterates
  // stay in the bracket after one step.
  double p = 0.5 * (config.p_ref + 1.0);
  double residual = std::numeric_limits<double>::infinity();
  for (int i = 0; i < max_iter; ++i) {
    const double hp = step(p);
    residual = std::abs(hp - p);
    if (residual <= tol) return p;
    p = 0.5 * (p + hp);
  }

  // Bisection fallback on g(p) = h(p) - p. g(p_ref) > 0 always; if g stays
  // nonnegative up to 1 the fixed point sits at the upper boundary.
  double lo = config.p_ref;
  double hi = 1.0;
  if (step(hi) - hi >= 0.0) {
    const double r = std::abs(step(hi) - hi);
    if (r <= tol) return hi;
    throw NoConvergence("fixed_point: no sign change on [p_ref, 1]", p,
                        residual);
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = step(mid) - mid;
    if (std::abs(g) <= tol) return mid;
    if (g > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double r = std::abs(step(mid) - mid);
  if (r <= tol) return mid;
  throw NoConvergence("fixed_point: residual above tolerance", mid, r);
}

std::vector<double> closed_form_policy_update(
    std::span<const double> reference_policy,
    std::span<const double> current_policy, const PromptSpec& prompt,
    const RecursionConfig& config) {
  check_distribution(reference_policy, prompt, "reference policy");
  check_distribution(current_policy, prompt, "current policy");
  const double p = success_probability(current_policy, prompt);

  // Tilt weights at the current success probability; with a channel present
  // these are the noisy-attenuated weights, whose sum reproduces the noisy
  // recursion exponent.
  double w_plus, w_minus;
  if (config.noise) {
    const double f = noisy_mean(p, *config.noise);
    const double sigma = std::sqrt(f * (1.0 - f) + config.epsilon);
    if (sigma == 0.0) {
      throw DegenerateDivisor("tilt weights undefined: sigma~ = 0");
    }
    w_plus = config.noise->signal() * (1.0 - p) / sigma;
    w_minus = config.noise->signal() * p / sigma;
  } else {
    const OmegaWeights w = omega_weights(p, config.epsilon);
    w_plus = w.plus;
    w_minus = w.minus;
  }

  // Work in log space and shift by the max so exp never overflows even for
  // tiny beta.
  const std::size_t n = reference_policy.size();
  std::vector<double> log_tilted(n, -std::numeric_limits<double>::infinity());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t o = 0; o < n; ++o) {
    if (reference_policy[o] == 0.0) continue;
    const double tilt = prompt.is_correct(static_cast<int>(o))
                            ? w_plus / config.beta
                            : -w_minus / config.beta;
    log_tilted[o] = std::log(reference_policy[o]) + tilt;
    max_log = std::max(max_log, log_tilted[o]);
  }
  std::vector<double> next(n, 0.0);
  double norm = 0.0;
  for (std::size_t o = 0; o < n; ++o) {
    if (log_tilted[o] == -std::numeric_limits<double>::infinity()) continue;
    next[o] = std::exp(log_tilted[o] - max_log);
    norm += next[o];
  }
  for (double& v : next) v /= norm;
  return next;
}

}  // namespace grpolab
