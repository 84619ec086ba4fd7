#include "grpolab/reward_channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grpolab {

namespace {

void check_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(std::string(name) +
                                " must lie in [0,1], got " +
                                std::to_string(value));
  }
}

}  // namespace

NoiseSpec::NoiseSpec(double rho_plus, double rho_minus)
    : rho_plus(rho_plus), rho_minus(rho_minus) {
  check_probability(rho_plus, "rho_plus");
  check_probability(rho_minus, "rho_minus");
}

PromptSpec::PromptSpec(int response_count, std::vector<int> correct,
                       NoiseSpec noise)
    : response_count(response_count),
      correct_set(std::move(correct)),
      noise(noise) {
  if (response_count < 2) {
    throw std::invalid_argument("prompt needs at least 2 responses");
  }
  std::sort(correct_set.begin(), correct_set.end());
  correct_set.erase(std::unique(correct_set.begin(), correct_set.end()),
                    correct_set.end());
  if (correct_set.empty()) {
    throw std::invalid_argument("prompt needs at least one correct response");
  }
  if (static_cast<int>(correct_set.size()) >= response_count) {
    throw std::invalid_argument(
        "prompt needs at least one incorrect response");
  }
  if (correct_set.front() < 0 || correct_set.back() >= response_count) {
    throw std::invalid_argument("correct_set index out of range");
  }
}

bool PromptSpec::is_correct(int response) const {
  return std::binary_search(correct_set.begin(), correct_set.end(), response);
}

Environment::Environment(std::vector<PromptSpec> prompts_in,
                         std::vector<double> weights)
    : prompts(std::move(prompts_in)), prompt_weights(std::move(weights)) {
  if (prompts.empty()) {
    throw std::invalid_argument("environment needs at least one prompt");
  }
  if (prompt_weights.empty()) {
    prompt_weights.assign(prompts.size(), 1.0 / prompts.size());
    return;
  }
  if (prompt_weights.size() != prompts.size()) {
    throw std::invalid_argument("prompt_weights size mismatch");
  }
  double sum = 0.0;
  for (double w : prompt_weights) {
    if (w < 0.0) throw std::invalid_argument("negative prompt weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("prompt_weights must sum to 1");
  }
}

std::array<std::array<double, 2>, 2> corruption_matrix(
    const NoiseSpec& noise) {
  return {{{1.0 - noise.rho_minus, noise.rho_minus},
           {noise.rho_plus, 1.0 - noise.rho_plus}}};
}

int corrupt(int r_true, const NoiseSpec& noise, double xi) {
  if (r_true != 0) {
    return xi <= 1.0 - noise.rho_minus ? 1 : 0;
  }
  return xi <= noise.rho_plus ? 1 : 0;
}

RewardDraw draw_reward(int r_true, const NoiseSpec& noise,
                       const StreamKey& key) {
  RewardDraw draw;
  draw.r_true = r_true;
  draw.xi = key_uniform(key);
  draw.r_noisy = corrupt(r_true, noise, draw.xi);
  return draw;
}

double noisy_mean(double p, const NoiseSpec& noise) {
  return noise.rho_plus + noise.signal() * p;
}

double noisy_std(double p, const NoiseSpec& noise) {
  const double mu = noisy_mean(p, noise);
  return std::sqrt(mu * (1.0 - mu));
}

}  // namespace grpolab
