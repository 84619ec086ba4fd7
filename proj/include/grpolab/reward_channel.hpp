#ifndef GRPOLAB_REWARD_CHANNEL_HPP_
#define GRPOLAB_REWARD_CHANNEL_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "grpolab/prng.hpp"

namespace grpolab {

// Bernoulli corruption channel for binary rewards: a true 0 flips to 1 with
// probability rho_plus (false positive), a true 1 flips to 0 with probability
// rho_minus (false negative).
struct NoiseSpec {
  double rho_plus = 0.0;
  double rho_minus = 0.0;

  NoiseSpec() = default;
  NoiseSpec(double rho_plus, double rho_minus);

  // Retained signal 1 - rho+ - rho-. Positive iff the channel is invertible;
  // operations that invert the channel check this at their use site.
  double signal() const { return 1.0 - rho_plus - rho_minus; }
  bool invertible() const { return signal() > 0.0; }
  bool is_zero() const { return rho_plus == 0.0 && rho_minus == 0.0; }
};

// One prompt: a finite response set, the subset the ground-truth oracle scores
// as 1, and the corruption channel attached to this prompt.
struct PromptSpec {
  int response_count = 0;
  std::vector<int> correct_set;  // sorted, strict nonempty subset
  NoiseSpec noise;

  PromptSpec() = default;
  PromptSpec(int response_count, std::vector<int> correct_set,
             NoiseSpec noise = {});

  bool is_correct(int response) const;
  int true_reward(int response) const { return is_correct(response) ? 1 : 0; }
};

// Finite prompt universe with its sampling distribution.
struct Environment {
  std::vector<PromptSpec> prompts;
  std::vector<double> prompt_weights;  // sums to 1 within 1e-12

  Environment() = default;
  // Empty weights means uniform.
  explicit Environment(std::vector<PromptSpec> prompts,
                       std::vector<double> weights = {});

  std::size_t size() const { return prompts.size(); }
};

// One scored response: the latent true reward, the observed corrupted reward,
// and the auxiliary uniform that decided the flip.
struct RewardDraw {
  int r_true = 0;
  int r_noisy = 0;
  double xi = 0.0;
};

// 2x2 row-stochastic corruption matrix. Row 0 conditions on true reward 1,
// row 1 on true reward 0; column 0 is observed 1, column 1 is observed 0:
//   [ 1-rho-   rho-  ]
//   [ rho+    1-rho+ ]
std::array<std::array<double, 2>, 2> corruption_matrix(const NoiseSpec& noise);

// Stochastic representation of the channel: with xi ~ U[0,1],
//   r_true = 0  ->  1{xi <= rho+}
//   r_true = 1  ->  1{xi <= 1 - rho-}
int corrupt(int r_true, const NoiseSpec& noise, double xi);

// Scores one response with a fresh channel draw addressed by `key`.
RewardDraw draw_reward(int r_true, const NoiseSpec& noise,
                       const StreamKey& key);

// Mean of the observed reward when the true reward is Bernoulli(p):
// mu = rho+ + (1 - rho+ - rho-) p. Also the map F in the noisy recursion.
double noisy_mean(double p, const NoiseSpec& noise);

// Standard deviation of the observed reward, sqrt(mu (1 - mu)). Bounded away
// from zero by interior noise regardless of p.
double noisy_std(double p, const NoiseSpec& noise);

}  // namespace grpolab

#endif  // GRPOLAB_REWARD_CHANNEL_HPP_
