#include "grpolab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grpolab/dynamics.hpp"
#include "grpolab/errors.hpp"

namespace grpolab {

std::vector<double> softmax(std::span<const double> logits) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_logit = std::max(max_logit, l);
  std::vector<double> probs(logits.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    norm += probs[i];
  }
  for (double& p : probs) p /= norm;
  return probs;
}

TabularPolicy TabularPolicy::uniform(const Environment& env) {
  TabularPolicy policy;
  policy.logits.reserve(env.size());
  for (const PromptSpec& prompt : env.prompts) {
    policy.logits.emplace_back(prompt.response_count, 0.0);
  }
  policy.reference_logits = policy.logits;
  return policy;
}

std::vector<double> TabularPolicy::probs(int prompt_id) const {
  return softmax(logits.at(prompt_id));
}

std::vector<double> TabularPolicy::reference_probs(int prompt_id) const {
  return softmax(reference_logits.at(prompt_id));
}

void TrainerConfig::validate() const {
  if (group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (mode == NormMode::grpo_z && group_size < 2) {
    throw std::invalid_argument(
        "grpo_z needs group_size >= 2: the variance estimate is undefined "
        "for a single sample");
  }
  if (correction == CorrectionMode::natarajan && !rates.has_value()) {
    throw std::invalid_argument("natarajan correction needs flip rates");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (epochs < 0 || batches_per_epoch < 0) {
    throw std::invalid_argument("epochs and batches_per_epoch must be >= 0");
  }
  if (!(z_floor > 0.0)) throw std::invalid_argument("z_floor must be positive");
}

GroupSample sample_group(const TabularPolicy& policy, const Environment& env,
                         int prompt_id, const TrainerConfig& config,
                         std::uint64_t iteration) {
  const PromptSpec& prompt = env.prompts.at(prompt_id);
  const std::vector<double> probs = policy.probs(prompt_id);

  GroupSample sample;
  sample.prompt_id = prompt_id;
  sample.responses.reserve(config.group_size);
  sample.draws.reserve(config.group_size);
  sample.old_probs.reserve(config.group_size);

  const auto pid = static_cast<std::uint64_t>(prompt_id);
  for (int slot = 0; slot < config.group_size; ++slot) {
    const auto sid = static_cast<std::uint64_t>(slot);
    // Inverse-CDF draw from the softmax.
    const double u = key_uniform(
        {config.seed, StreamDomain::response, pid, iteration, sid});
    int response = prompt.response_count - 1;
    double cdf = 0.0;
    for (int o = 0; o < prompt.response_count; ++o) {
      cdf += probs[o];
      if (u < cdf) {
        response = o;
        break;
      }
    }
    const StreamKey xi_key{config.seed, StreamDomain::xi, pid, iteration, sid};
    sample.responses.push_back(response);
    sample.draws.push_back(
        draw_reward(prompt.true_reward(response), prompt.noise, xi_key));
    sample.old_probs.push_back(probs[response]);
  }
  return sample;
}

AdvantageBatch advantages_from_values(std::span<const double> values,
                                      const TrainerConfig& config) {
  AdvantageBatch batch;
  batch.debiased.assign(values.begin(), values.end());

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  batch.advantages.reserve(values.size());
  for (double v : values) batch.advantages.push_back(v - mean);

  if (config.mode == NormMode::grpo_z) {
    const FlipRateEstimate rates =
        config.correction == CorrectionMode::natarajan
            ? *config.rates
            : FlipRateEstimate(0.0, 0.0, 0);
    const double z = variance_estimate_Z(batch.debiased, rates);
    batch.divisor = clip_Z(z, config.z_floor);
    batch.floored = z <= config.z_floor;
  }
  return batch;
}

AdvantageBatch group_advantages(const GroupSample& sample,
                                const TrainerConfig& config) {
  std::vector<double> values;
  values.reserve(sample.draws.size());
  for (const RewardDraw& draw : sample.draws) {
    if (config.correction == CorrectionMode::natarajan) {
      values.push_back(debias(draw.r_noisy, *config.rates).value);
    } else {
      values.push_back(static_cast<double>(draw.r_noisy));
    }
  }
  return advantages_from_values(values, config);
}

double batch_objective(const std::vector<std::vector<double>>& theta,
                       const std::vector<std::vector<double>>& reference_logits,
                       std::span<const PromptBatch> batches,
                       std::span<const double> prompt_weights, double beta) {
  double objective = 0.0;
  for (const PromptBatch& batch : batches) {
    const int q = batch.sample.prompt_id;
    const std::vector<double> probs = softmax(theta.at(q));
    const double w = prompt_weights[q];
    const std::size_t group = batch.sample.responses.size();
    const double scale = 1.0 / (static_cast<double>(group) * batch.adv.divisor);
    for (std::size_t i = 0; i < group; ++i) {
      const double ratio =
          probs[batch.sample.responses[i]] / batch.sample.old_probs[i];
      objective += w * scale * ratio * batch.adv.advantages[i];
    }
  }
  for (std::size_t q = 0; q < theta.size(); ++q) {
    objective -= beta * prompt_weights[q] *
                 categorical_kl(softmax(theta[q]), softmax(reference_logits[q]));
  }
  return objective;
}

std::vector<std::vector<double>> batch_gradient(
    const std::vector<std::vector<double>>& theta,
    const std::vector<std::vector<double>>& reference_logits,
    std::span<const PromptBatch> batches,
    std::span<const double> prompt_weights, double beta) {
  std::vector<std::vector<double>> grad(theta.size());
  for (std::size_t q = 0; q < theta.size(); ++q) {
    grad[q].assign(theta[q].size(), 0.0);
  }

  // Surrogate term. d ratio_i / d theta_a = ratio_i (1{a=o_i} - pi_theta(a)).
  for (const PromptBatch& batch : batches) {
    const int q = batch.sample.prompt_id;
    const std::vector<double> probs = softmax(theta.at(q));
    const double w = prompt_weights[q];
    const std::size_t group = batch.sample.responses.size();
    const double scale = 1.0 / (static_cast<double>(group) * batch.adv.divisor);
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < group; ++i) {
      const int o = batch.sample.responses[i];
      const double contrib = scale * batch.adv.advantages[i] * probs[o] /
                             batch.sample.old_probs[i];
      grad[q][o] += w * contrib;
      weighted_sum += contrib;
    }
    for (std::size_t a = 0; a < probs.size(); ++a) {
      grad[q][a] -= w * weighted_sum * probs[a];
    }
  }

  // KL term. d KL / d theta_a = pi(a) (log(pi(a)/ref(a)) - KL).
  for (std::size_t q = 0; q < theta.size(); ++q) {
    const std::vector<double> probs = softmax(theta[q]);
    const std::vector<double> ref = softmax(reference_logits[q]);
    const double kl = categorical_kl(probs, ref);
    for (std::size_t a = 0; a < probs.size(); ++a) {
      const double g = std::log(probs[a] / ref[a]);
      grad[q][a] -= beta * prompt_weights[q] * probs[a] * (g - kl);
    }
  }
  return grad;
}

TabularPolicy policy_gradient_step(const TabularPolicy& policy,
                                   std::span<const PromptBatch> batches,
                                   const Environment& env,
                                   const TrainerConfig& config) {
  const std::vector<std::vector<double>> grad =
      batch_gradient(policy.logits, policy.reference_logits, batches,
                     env.prompt_weights, config.beta);
  TabularPolicy next = policy;
  for (std::size_t q = 0; q < next.logits.size(); ++q) {
    for (std::size_t a = 0; a < next.logits[q].size(); ++a) {
      next.logits[q][a] += config.learning_rate * grad[q][a];
    }
  }
  return next;
}

double evaluate_clean_accuracy(const TabularPolicy& policy,
                               const Environment& env) {
  double accuracy = 0.0;
  for (std::size_t q = 0; q < env.size(); ++q) {
    accuracy += env.prompt_weights[q] *
                success_probability(policy.probs(static_cast<int>(q)),
                                    env.prompts[q]);
  }
  return accuracy;
}

TrainReport train(const Environment& env, const TrainerConfig& config) {
  config.validate();
  TabularPolicy policy = TabularPolicy::uniform(env);
  TrainReport report;
  report.initial_accuracy = evaluate_clean_accuracy(policy, env);

  const int total = config.total_iterations();
  report.iterations.reserve(total);
  for (int iter = 1; iter <= total; ++iter) {
    std::vector<PromptBatch> batches;
    batches.reserve(env.size());
    double mean_noisy = 0.0;
    for (std::size_t q = 0; q < env.size(); ++q) {
      PromptBatch batch;
      batch.sample = sample_group(policy, env, static_cast<int>(q), config,
                                  static_cast<std::uint64_t>(iter));
      batch.adv = group_advantages(batch.sample, config);

      double group_mean = 0.0;
      for (const RewardDraw& draw : batch.sample.draws) {
        group_mean += draw.r_noisy;
      }
      mean_noisy += env.prompt_weights[q] * group_mean /
                    static_cast<double>(config.group_size);

      // A floored divisor with live advantages amplifies the step; keep count.
      if (batch.adv.floored) {
        const bool live = std::any_of(
            batch.adv.advantages.begin(), batch.adv.advantages.end(),
            [](double a) { return a != 0.0; });
        if (live) ++report.z_floor_hits;
      }
      batches.push_back(std::move(batch));
    }
    policy = policy_gradient_step(policy, batches, env, config);
    report.iterations.push_back(
        {iter, evaluate_clean_accuracy(policy, env), mean_noisy});
  }
  report.final_policy = std::move(policy);
  return report;
}

}  // namespace grpolab
