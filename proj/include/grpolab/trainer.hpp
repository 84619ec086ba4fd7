#ifndef GRPOLAB_TRAINER_HPP_
#define GRPOLAB_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grpolab/correction.hpp"
#include "grpolab/reward_channel.hpp"

namespace grpolab {

std::vector<double> softmax(std::span<const double> logits);

// Per-prompt softmax policy plus the frozen reference it is anchored to.
struct TabularPolicy {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<double>> reference_logits;

  // Uniform reference: all logits zero.
  static TabularPolicy uniform(const Environment& env);

  std::vector<double> probs(int prompt_id) const;
  std::vector<double> reference_probs(int prompt_id) const;
};

enum class NormMode {
  grpo_z,   // divide by the clipped Z-based standard-deviation estimate
  dr_grpo,  // M = 1
};

enum class CorrectionMode {
  off,
  natarajan,
};

struct TrainerConfig {
  int group_size = 5;
  double learning_rate = 0.1;  // retuned for the tabular scale
  double beta = 0.01;
  int epochs = 10;
  int batches_per_epoch = 20;
  NormMode mode = NormMode::dr_grpo;
  CorrectionMode correction = CorrectionMode::off;
  std::optional<FlipRateEstimate> rates;
  double z_floor = 1e-6;
  std::uint64_t seed = 1;

  int total_iterations() const { return epochs * batches_per_epoch; }
  void validate() const;
};

// G responses drawn from the current policy for one prompt, each scored
// through the prompt's corruption channel with a fresh xi.
struct GroupSample {
  int prompt_id = 0;
  std::vector<int> responses;
  std::vector<RewardDraw> draws;
  std::vector<double> old_probs;  // pi_old at sampling time, strictly positive
};

// Group-relative advantages. `advantages` is the centered signal (sums to
// zero); the divisor M is applied at gradient time so the baseline property
// survives any normalization.
struct AdvantageBatch {
  std::vector<double> debiased;
  std::vector<double> advantages;
  double divisor = 1.0;
  bool floored = false;  // Z clipped at the floor
};

GroupSample sample_group(const TabularPolicy& policy, const Environment& env,
                         int prompt_id, const TrainerConfig& config,
                         std::uint64_t iteration);

// Centered, normalized advantages for arbitrary real rewards. grpo_z treats
// the values as debiased samples of the configured rate pair (zero rates when
// correction is off, i.e. the plain group sample deviation).
AdvantageBatch advantages_from_values(std::span<const double> values,
                                      const TrainerConfig& config);

AdvantageBatch group_advantages(const GroupSample& sample,
                                const TrainerConfig& config);

struct PromptBatch {
  GroupSample sample;
  AdvantageBatch adv;
};

// Surrogate-plus-KL objective at candidate logits theta:
//   sum_q w_q (1/G) sum_i ratio_i A_i / M  -  beta sum_q w_q KL(pi_theta || pi_ref)
// with ratio_i = pi_theta(o_i) / pi_old(o_i). No ratio clipping.
double batch_objective(const std::vector<std::vector<double>>& theta,
                       const std::vector<std::vector<double>>& reference_logits,
                       std::span<const PromptBatch> batches,
                       std::span<const double> prompt_weights, double beta);

// Exact gradient of batch_objective in theta.
std::vector<std::vector<double>> batch_gradient(
    const std::vector<std::vector<double>>& theta,
    const std::vector<std::vector<double>>& reference_logits,
    std::span<const PromptBatch> batches,
    std::span<const double> prompt_weights, double beta);

// One ascent step from the policy the batches were sampled under.
TabularPolicy policy_gradient_step(const TabularPolicy& policy,
                                   std::span<const PromptBatch> batches,
                                   const Environment& env,
                                   const TrainerConfig& config);

// Exact E_q[p_pi(q)]: softmax mass on the correct sets, no sampling.
double evaluate_clean_accuracy(const TabularPolicy& policy,
                               const Environment& env);

struct IterationStats {
  int iteration = 0;
  double clean_accuracy = 0.0;
  double mean_noisy_reward = 0.0;
};

struct TrainReport {
  double initial_accuracy = 0.0;
  std::vector<IterationStats> iterations;
  TabularPolicy final_policy;
  long z_floor_hits = 0;  // groups whose divisor was floored with live signal

  double final_accuracy() const {
    return iterations.empty() ? initial_accuracy
                              : iterations.back().clean_accuracy;
  }
};

// Full training loop: epochs x batches of sample / advantage / step, with the
// exact clean accuracy recorded after every step. Deterministic given the
// seed: all randomness is keyed by (seed, prompt, iteration, slot).
TrainReport train(const Environment& env, const TrainerConfig& config);

}  // namespace grpolab

#endif  // GRPOLAB_TRAINER_HPP_
