#include "grpolab/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "grpolab/correction.hpp"
#include "grpolab/dynamics.hpp"
#include "grpolab/prng.hpp"
#include "grpolab/reward_channel.hpp"
#include "grpolab/trainer.hpp"

namespace grpolab {

namespace {

// The Table-1 style synthetic noise grid.
const std::array<NoiseSpec, 5> kNoiseGrid = {
    NoiseSpec(0.05, 0.15), NoiseSpec(0.1, 0.2), NoiseSpec(0.2, 0.3),
    NoiseSpec(0.3, 0.4), NoiseSpec(0.4, 0.5)};

// Recursion parameters for the verification suites. beta is set to 1 so the
// fixed points stay interior and resolvable in double precision; with the
// training-scale beta = 0.01 every fixed point rounds to 1.
const RecursionConfig kCleanRecursion{1.0, 1e-6, 0.25};

RecursionConfig noisy_recursion(const NoiseSpec& noise) {
  return RecursionConfig(kCleanRecursion.beta, kCleanRecursion.epsilon,
                         kCleanRecursion.p_ref, noise);
}

std::vector<double> random_simplex(SequentialRng& rng, int n) {
  std::vector<double> vec(n);
  double sum = 0.0;
  for (double& v : vec) {
    v = -std::log(1.0 - rng.uniform());
    sum += v;
  }
  for (double& v : vec) v /= sum;
  return vec;
}

PromptSpec random_prompt(SequentialRng& rng, NoiseSpec noise = {}) {
  const int responses = static_cast<int>(rng.uniform_int(2, 6));
  const int correct = static_cast<int>(rng.uniform_int(1, responses - 1));
  std::vector<int> order(responses);
  for (int i = 0; i < responses; ++i) order[i] = i;
  for (int i = 0; i < correct; ++i) {
    std::swap(order[i],
              order[rng.uniform_int(i, responses - 1)]);
  }
  return PromptSpec(responses, {order.begin(), order.begin() + correct},
                    noise);
}

NoiseSpec random_invertible_noise(SequentialRng& rng) {
  const double rho_plus = rng.uniform(0.01, 0.6);
  const double rho_minus = rng.uniform(0.01, std::min(0.9 - rho_plus, 0.6));
  return NoiseSpec(rho_plus, rho_minus);
}

CheckResult deviation_check(std::string suite, std::string name,
                            double deviation, double tolerance) {
  CheckResult result;
  result.suite = std::move(suite);
  result.name = std::move(name);
  result.margin = tolerance - deviation;
  result.pass = result.margin >= 0.0;
  return result;
}

CheckResult slack_check(std::string suite, std::string name, double slack) {
  CheckResult result;
  result.suite = std::move(suite);
  result.name = std::move(name);
  result.margin = slack;
  result.pass = slack >= 0.0;
  return result;
}

// --- bounds suite ---------------------------------------------------------

BoundsRow bound_instance(const std::string& variant_name, std::uint64_t seed) {
  SequentialRng rng(seed);
  NoiseSpec noise;
  LossVariant variant = CleanVariant{0.0};
  if (variant_name == "noisy") {
    noise = random_invertible_noise(rng);
    variant = NoisyVariant{noise, 0.0};
  } else if (variant_name == "generalized") {
    variant = GeneralizedVariant{std::exp(rng.uniform(std::log(0.05),
                                                      std::log(2.0)))};
  }
  PromptSpec prompt = random_prompt(rng, noise);
  DiscretePolicyPair pair(prompt, random_simplex(rng, prompt.response_count),
                          random_simplex(rng, prompt.response_count));
  const BoundCheck check = improvement_bound_check(pair, variant);
  return {variant_name, seed, check.lhs, check.rhs, check.holds};
}

}  // namespace

std::vector<CheckResult> verify_bounds(std::uint64_t seed, int instances,
                                       std::vector<BoundsRow>* bounds_rows) {
  std::vector<CheckResult> results;
  const std::array<std::string, 3> variants = {"clean", "noisy",
                                               "generalized"};
  for (std::size_t v = 0; v < variants.size(); ++v) {
    double min_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < instances; ++i) {
      const std::uint64_t instance_seed = mix64(
          mix64(seed) ^ ((v + 1) * 0x100000001b3ULL + static_cast<std::uint64_t>(i)));
      const BoundsRow row = bound_instance(variants[v], instance_seed);
      min_slack = std::min(min_slack, row.lhs - row.rhs + 1e-9);
      if (bounds_rows) bounds_rows->push_back(row);
    }
    results.push_back(
        slack_check("bounds", "improvement_" + variants[v], min_slack));
  }

  // With M = sigma_k the generalized bound must coincide with the clean one.
  double max_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    SequentialRng rng(mix64(seed ^ (0xab5e17ULL + i)));
    PromptSpec prompt = random_prompt(rng);
    DiscretePolicyPair pair(prompt,
                            random_simplex(rng, prompt.response_count),
                            random_simplex(rng, prompt.response_count));
    const double p_k = success_probability(pair.pi_k, pair.prompt);
    const BoundCheck clean =
        improvement_bound_check(pair, CleanVariant{0.0});
    const BoundCheck gen = improvement_bound_check(
        pair, GeneralizedVariant{success_sigma(p_k)});
    max_dev = std::max(max_dev, std::abs(clean.rhs - gen.rhs));
  }
  results.push_back(
      deviation_check("bounds", "generalized_matches_clean_at_sigma", max_dev,
                      1e-12));
  return results;
}

// --- unbiasedness suite ----------------------------------------------------

namespace {

// Channel probability of observing `r_noisy` given `r_true`.
double channel_prob(int r_true, int r_noisy, double rho_plus,
                    double rho_minus) {
  if (r_true == 1) return r_noisy == 1 ? 1.0 - rho_minus : rho_minus;
  return r_noisy == 1 ? rho_plus : 1.0 - rho_plus;
}

// Exhaustive expectation of Z over all (r*, r~) outcomes of n samples.
double enumerate_expected_Z(int n, double p, const FlipRateEstimate& rates) {
  // Each sample lands in one of four (r*, r~) cells.
  struct Cell {
    double prob;
    double value;
  };
  const std::array<Cell, 4> cells = {
      Cell{p * (1.0 - rates.rho_minus_hat), debias(1, rates).value},
      Cell{p * rates.rho_minus_hat, debias(0, rates).value},
      Cell{(1.0 - p) * rates.rho_plus_hat, debias(1, rates).value},
      Cell{(1.0 - p) * (1.0 - rates.rho_plus_hat), debias(0, rates).value}};

  double expected = 0.0;
  std::vector<double> sample(n);
  std::function<void(int, double)> recurse = [&](int index, double prob) {
    if (index == n) {
      expected += prob * variance_estimate_Z(sample, rates);
      return;
    }
    for (const Cell& cell : cells) {
      if (cell.prob == 0.0) continue;
      sample[index] = cell.value;
      recurse(index + 1, prob * cell.prob);
    }
  };
  recurse(0, 1.0);
  return expected;
}

}  // namespace

std::vector<CheckResult> verify_unbiasedness(std::uint64_t seed) {
  std::vector<CheckResult> results;

  // Prop. 3: channel-enumerated expectation of the debiased reward equals the
  // true reward on a rate grid.
  {
    const std::array<double, 5> grid = {0.0, 0.1, 0.2, 0.3, 0.45};
    double max_dev = 0.0;
    for (double rho_plus : grid) {
      for (double rho_minus : grid) {
        const FlipRateEstimate rates(rho_plus, rho_minus);
        for (int r_true : {0, 1}) {
          double expected = 0.0;
          for (int r_noisy : {0, 1}) {
            expected += channel_prob(r_true, r_noisy, rho_plus, rho_minus) *
                        debias(r_noisy, rates).value;
          }
          max_dev = std::max(max_dev, std::abs(expected - r_true));
        }
      }
    }
    results.push_back(
        deviation_check("unbiasedness", "debias_expectation_grid", max_dev,
                        1e-12));
  }

  // Prop. 4, exhaustively for n <= 4.
  {
    double max_dev = 0.0;
    const std::array<std::array<double, 3>, 3> combos = {
        std::array<double, 3>{0.5, 0.2, 0.3},
        std::array<double, 3>{0.3, 0.1, 0.2},
        std::array<double, 3>{0.7, 0.05, 0.45}};
    for (const auto& combo : combos) {
      const double p = combo[0];
      const FlipRateEstimate rates(combo[1], combo[2]);
      for (int n = 2; n <= 4; ++n) {
        const double expected = enumerate_expected_Z(n, p, rates);
        max_dev = std::max(max_dev, std::abs(expected - p * (1.0 - p)));
      }
    }
    results.push_back(
        deviation_check("unbiasedness", "z_expectation_enumerated", max_dev,
                        1e-10));
  }

  // Prop. 4, Monte Carlo at n = 64.
  {
    const double p = 0.5;
    const NoiseSpec noise(0.2, 0.3);
    const FlipRateEstimate rates = FlipRateEstimate::exact(noise);
    SequentialRng rng(mix64(seed ^ 0x5a11edULL));
    const int groups = 10000;
    const int n = 64;
    double mean_z = 0.0;
    std::vector<double> sample(n);
    for (int g = 0; g < groups; ++g) {
      for (int i = 0; i < n; ++i) {
        const int r_true = rng.uniform() < p ? 1 : 0;
        const int r_noisy = corrupt(r_true, noise, rng.uniform());
        sample[i] = debias(r_noisy, rates).value;
      }
      mean_z += variance_estimate_Z(sample, rates);
    }
    mean_z /= groups;
    results.push_back(
        deviation_check("unbiasedness", "z_monte_carlo_n64",
                        std::abs(mean_z - p * (1.0 - p)), 0.01));
  }

  // Thm. 6: estimated-rate advantages with divisor M equal true-rate
  // advantages with divisor M'.
  {
    SequentialRng rng(mix64(seed ^ 0x7e0006ULL));
    double max_dev = 0.0;
    for (int batch = 0; batch < 100; ++batch) {
      NoiseSpec true_noise = random_invertible_noise(rng);
      while (true_noise.signal() < 0.2) {
        true_noise = random_invertible_noise(rng);
      }
      const FlipRateEstimate true_rates = FlipRateEstimate::exact(true_noise);
      const FlipRateEstimate est_rates(
          std::clamp(true_noise.rho_plus + rng.uniform(-0.05, 0.05), 0.0, 1.0),
          std::clamp(true_noise.rho_minus + rng.uniform(-0.05, 0.05), 0.0,
                     1.0));
      const double m = std::exp(rng.uniform(std::log(0.2), std::log(2.0)));
      const double m_scaled = effective_M_scale(true_noise, est_rates, m);

      const int group = static_cast<int>(rng.uniform_int(2, 8));
      std::vector<double> with_est(group), with_true(group);
      double mean_est = 0.0, mean_true = 0.0;
      std::vector<int> bits(group);
      for (int i = 0; i < group; ++i) {
        bits[i] = rng.uniform() < 0.5 ? 1 : 0;
        with_est[i] = debias(bits[i], est_rates).value;
        with_true[i] = debias(bits[i], true_rates).value;
        mean_est += with_est[i];
        mean_true += with_true[i];
      }
      mean_est /= group;
      mean_true /= group;
      for (int i = 0; i < group; ++i) {
        const double adv_est = (with_est[i] - mean_est) / m;
        const double adv_true = (with_true[i] - mean_true) / m_scaled;
        max_dev = std::max(max_dev, std::abs(adv_est - adv_true));
      }
    }
    results.push_back(
        deviation_check("unbiasedness", "estimated_rate_divisor_identity",
                        max_dev, 1e-12));
  }

  // Standardization invariance: affine reward maps only rescale or flip the
  // standardized advantage; Dr.GRPO advantages scale linearly.
  {
    SequentialRng rng(mix64(seed ^ 0xaff1eULL));
    double max_dev = 0.0;
    TrainerConfig std_cfg;
    std_cfg.mode = NormMode::grpo_z;
    std_cfg.z_floor = 1e-12;
    TrainerConfig dr_cfg;
    dr_cfg.mode = NormMode::dr_grpo;
    for (int g = 0; g < 100; ++g) {
      const int group = static_cast<int>(rng.uniform_int(3, 8));
      std::vector<double> values(group), mapped(group);
      double spread = 0.0;
      do {
        for (int i = 0; i < group; ++i) values[i] = rng.uniform(-1.0, 2.0);
        spread = *std::max_element(values.begin(), values.end()) -
                 *std::min_element(values.begin(), values.end());
      } while (spread < 0.1);
      double a = rng.uniform(-3.0, 3.0);
      if (std::abs(a) < 0.1) a = a < 0.0 ? -0.1 : 0.1;
      const double b = rng.uniform(-2.0, 2.0);
      for (int i = 0; i < group; ++i) mapped[i] = a * values[i] + b;

      const AdvantageBatch base = advantages_from_values(values, std_cfg);
      const AdvantageBatch affine = advantages_from_values(mapped, std_cfg);
      const double sign = a > 0.0 ? 1.0 : -1.0;
      for (int i = 0; i < group; ++i) {
        max_dev = std::max(
            max_dev, std::abs(affine.advantages[i] / affine.divisor -
                              sign * base.advantages[i] / base.divisor));
      }

      const AdvantageBatch dr_base = advantages_from_values(values, dr_cfg);
      const AdvantageBatch dr_affine = advantages_from_values(mapped, dr_cfg);
      for (int i = 0; i < group; ++i) {
        max_dev = std::max(max_dev, std::abs(dr_affine.advantages[i] -
                                             a * dr_base.advantages[i]));
      }
    }
    results.push_back(deviation_check("unbiasedness",
                                      "standardization_invariance", max_dev,
                                      1e-12));
  }

  // Duplicating every labeled pair leaves the rate estimate unchanged.
  {
    SequentialRng rng(mix64(seed ^ 0xd0b1eULL));
    std::vector<LabeledScore> rows;
    for (int i = 0; i < 200; ++i) {
      LabeledScore row;
      row.prompt_id = i;
      row.r_true = rng.uniform() < 0.5 ? 1 : 0;
      row.r_observed = rng.uniform() < 0.3 ? 1 - row.r_true : row.r_true;
      rows.push_back(row);
    }
    std::vector<LabeledScore> doubled = rows;
    doubled.insert(doubled.end(), rows.begin(), rows.end());
    const FlipRateEstimate once = estimate_flip_rates(rows);
    const FlipRateEstimate twice = estimate_flip_rates(doubled);
    const double dev =
        std::max(std::abs(once.rho_plus_hat - twice.rho_plus_hat),
                 std::abs(once.rho_minus_hat - twice.rho_minus_hat));
    results.push_back(
        deviation_check("unbiasedness", "estimator_scale_free", dev, 1e-15));
  }

  return results;
}

// --- recursion suite --------------------------------------------------------

std::vector<CheckResult> verify_recursion() {
  std::vector<CheckResult> results;

  // h~ < h on a 1001-point grid for every noise pair.
  {
    double min_gap = std::numeric_limits<double>::infinity();
    for (const NoiseSpec& noise : kNoiseGrid) {
      const RecursionConfig noisy = noisy_recursion(noise);
      for (int i = 0; i <= 1000; ++i) {
        const double p = static_cast<double>(i) / 1000.0;
        min_gap = std::min(min_gap, closed_form_step(p, kCleanRecursion) -
                                        closed_form_step(p, noisy));
      }
    }
    results.push_back(slack_check("recursion", "noisy_below_clean_grid",
                                  min_gap));
  }

  // Every iterate beyond the start exceeds p_ref, for clean and noisy maps
  // and degenerate starts.
  {
    double min_gap = std::numeric_limits<double>::infinity();
    std::vector<RecursionConfig> configs = {kCleanRecursion};
    for (const NoiseSpec& noise : kNoiseGrid) {
      configs.push_back(noisy_recursion(noise));
    }
    for (const RecursionConfig& config : configs) {
      for (double p0 : {0.0, 0.25, 0.5, 1.0}) {
        const std::vector<double> traj = iterate_recursion(config, p0, 50);
        for (std::size_t k = 1; k < traj.size(); ++k) {
          min_gap = std::min(min_gap, traj[k] - config.p_ref);
        }
      }
    }
    results.push_back(
        slack_check("recursion", "iterates_above_reference", min_gap));
  }

  // The clean trajectory dominates the noisy one pointwise from k = 1.
  {
    double min_gap = std::numeric_limits<double>::infinity();
    for (const NoiseSpec& noise : kNoiseGrid) {
      const std::vector<double> clean =
          iterate_recursion(kCleanRecursion, 0.5, 30);
      const std::vector<double> noisy =
          iterate_recursion(noisy_recursion(noise), 0.5, 30);
      for (std::size_t k = 1; k < clean.size(); ++k) {
        min_gap = std::min(min_gap, clean[k] - noisy[k]);
      }
    }
    results.push_back(
        slack_check("recursion", "clean_trajectory_dominates", min_gap));
  }

  // Fixed points: residuals within tolerance, noisy strictly below clean,
  // ordered by the retained signal, all above p_ref.
  {
    const double clean_star = fixed_point(kCleanRecursion);
    double max_residual =
        std::abs(closed_form_step(clean_star, kCleanRecursion) - clean_star);
    std::vector<double> stars;
    for (const NoiseSpec& noise : kNoiseGrid) {
      const RecursionConfig config = noisy_recursion(noise);
      const double star = fixed_point(config);
      max_residual = std::max(
          max_residual, std::abs(closed_form_step(star, config) - star));
      stars.push_back(star);
    }
    results.push_back(deviation_check("recursion", "fixed_point_residuals",
                                      max_residual, 1e-12));

    // kNoiseGrid is ordered by increasing rho+ + rho-, so the fixed points
    // must be strictly decreasing along it.
    double min_gap = clean_star - stars.front();
    for (std::size_t i = 0; i + 1 < stars.size(); ++i) {
      min_gap = std::min(min_gap, stars[i] - stars[i + 1]);
    }
    min_gap = std::min(min_gap, stars.back() - kCleanRecursion.p_ref);
    results.push_back(
        slack_check("recursion", "fixed_point_ordering", min_gap));
  }

  // Pushforward consistency: the success probability of the closed-form
  // update equals the recursion step, clean and noisy.
  {
    SequentialRng rng(0x5eedULL);
    double max_dev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const bool noisy = rng.uniform() < 0.5;
      const NoiseSpec noise =
          noisy ? random_invertible_noise(rng) : NoiseSpec();
      PromptSpec prompt = random_prompt(rng, noise);
      const std::vector<double> reference =
          random_simplex(rng, prompt.response_count);
      const std::vector<double> current =
          random_simplex(rng, prompt.response_count);
      const RecursionConfig config(
          std::exp(rng.uniform(std::log(0.05), std::log(5.0))), 1e-6,
          success_probability(reference, prompt),
          noisy ? std::optional<NoiseSpec>(noise) : std::nullopt);
      const std::vector<double> next =
          closed_form_policy_update(reference, current, prompt, config);
      const double via_policy = success_probability(next, prompt);
      const double via_step = closed_form_step(
          success_probability(current, prompt), config);
      max_dev = std::max(max_dev, std::abs(via_policy - via_step));
    }
    results.push_back(deviation_check(
        "recursion", "closed_form_pushforward_consistency", max_dev, 1e-10));
  }

  // Attenuation: the noisy surrogate has the sign of the clean one and never
  // exceeds it in magnitude.
  {
    SequentialRng rng(0xa77e4ULL);
    double min_gap = std::numeric_limits<double>::infinity();
    bool signs_agree = true;
    for (int i = 0; i < 500; ++i) {
      const NoiseSpec noise = random_invertible_noise(rng);
      PromptSpec prompt = random_prompt(rng, noise);
      DiscretePolicyPair pair(prompt,
                              random_simplex(rng, prompt.response_count),
                              random_simplex(rng, prompt.response_count));
      const double clean = surrogate_loss(pair, CleanVariant{0.0});
      const double noisy = surrogate_loss(pair, NoisyVariant{noise, 0.0});
      min_gap = std::min(min_gap, std::abs(clean) - std::abs(noisy));
      if (clean * noisy < 0.0) signs_agree = false;
    }
    CheckResult check = slack_check("recursion", "noise_attenuates_surrogate",
                                    min_gap);
    check.pass = check.pass && signs_agree;
    results.push_back(check);
  }

  // Noise flattens the penalty coefficient pointwise.
  {
    double min_gap = std::numeric_limits<double>::infinity();
    for (const NoiseSpec& noise : kNoiseGrid) {
      for (int i = 1; i < 100; ++i) {
        const double p = static_cast<double>(i) / 100.0;
        min_gap = std::min(
            min_gap, penalty_coefficient(p, CleanVariant{0.0}) -
                         penalty_coefficient(p, NoisyVariant{noise, 0.0}));
      }
    }
    results.push_back(
        slack_check("recursion", "noise_flattens_penalty", min_gap));
  }

  return results;
}

// --- gradient suite ---------------------------------------------------------

namespace {

// Expected full-step gradient (surrogate plus KL) of one prompt with G = 2,
// enumerating response tuples and channel outcomes exactly.
std::vector<double> enumerate_expected_gradient(
    const PromptSpec& prompt, const std::vector<double>& theta_old,
    const TrainerConfig& config) {
  const Environment env({PromptSpec(prompt)});
  const std::vector<std::vector<double>> theta = {theta_old};
  const std::vector<std::vector<double>> reference = {
      std::vector<double>(theta_old.size(), 0.0)};
  const std::vector<double> probs = softmax(theta_old);
  const int n = prompt.response_count;

  std::vector<double> expected(theta_old.size(), 0.0);
  for (int o1 = 0; o1 < n; ++o1) {
    for (int o2 = 0; o2 < n; ++o2) {
      for (int f1 : {0, 1}) {
        for (int f2 : {0, 1}) {
          const int t1 = prompt.true_reward(o1);
          const int t2 = prompt.true_reward(o2);
          const double weight =
              probs[o1] * probs[o2] *
              channel_prob(t1, f1, prompt.noise.rho_plus,
                           prompt.noise.rho_minus) *
              channel_prob(t2, f2, prompt.noise.rho_plus,
                           prompt.noise.rho_minus);
          if (weight == 0.0) continue;

          PromptBatch batch;
          batch.sample.prompt_id = 0;
          batch.sample.responses = {o1, o2};
          batch.sample.draws = {{t1, f1, 0.0}, {t2, f2, 0.0}};
          batch.sample.old_probs = {probs[o1], probs[o2]};
          batch.adv = group_advantages(batch.sample, config);

          const std::vector<std::vector<double>> grad = batch_gradient(
              theta, reference, {&batch, 1}, env.prompt_weights, config.beta);
          for (std::size_t a = 0; a < expected.size(); ++a) {
            expected[a] += weight * grad[0][a];
          }
        }
      }
    }
  }
  return expected;
}

}  // namespace

std::vector<CheckResult> verify_gradient(std::uint64_t seed) {
  std::vector<CheckResult> results;

  // Corrected Dr.GRPO gradient expectation equals the clean-reward gradient
  // expectation on an enumerable instance.
  {
    const NoiseSpec noise(0.2, 0.3);
    const std::vector<double> theta_old = {0.3, -0.2, 0.5, 0.1};

    PromptSpec noisy_prompt(4, {1, 3}, noise);
    TrainerConfig corrected;
    corrected.group_size = 2;
    corrected.mode = NormMode::dr_grpo;
    corrected.correction = CorrectionMode::natarajan;
    corrected.rates = FlipRateEstimate::exact(noise);

    PromptSpec clean_prompt(4, {1, 3}, NoiseSpec());
    TrainerConfig clean;
    clean.group_size = 2;
    clean.mode = NormMode::dr_grpo;
    clean.correction = CorrectionMode::off;

    const std::vector<double> corrected_grad =
        enumerate_expected_gradient(noisy_prompt, theta_old, corrected);
    const std::vector<double> clean_grad =
        enumerate_expected_gradient(clean_prompt, theta_old, clean);
    double max_dev = 0.0;
    for (std::size_t a = 0; a < corrected_grad.size(); ++a) {
      max_dev = std::max(max_dev,
                         std::abs(corrected_grad[a] - clean_grad[a]));
    }
    results.push_back(deviation_check(
        "gradient", "corrected_matches_clean_expectation", max_dev, 1e-8));
  }

  // Analytic gradient against central finite differences at a perturbed
  // policy (ratios away from 1).
  {
    SequentialRng rng(mix64(seed ^ 0xf1d1ffULL));
    double max_rel = 0.0;
    for (int instance = 0; instance < 5; ++instance) {
      const NoiseSpec noise = random_invertible_noise(rng);
      PromptSpec prompt = random_prompt(rng, noise);
      const Environment env({prompt});

      TrainerConfig config;
      config.group_size = 6;
      config.mode = instance % 2 == 0 ? NormMode::dr_grpo : NormMode::grpo_z;
      config.correction = CorrectionMode::natarajan;
      config.rates = FlipRateEstimate::exact(noise);
      config.seed = rng.next_u64();

      TabularPolicy sampling_policy = TabularPolicy::uniform(env);
      for (double& l : sampling_policy.logits[0]) l = rng.uniform(-1.0, 1.0);

      PromptBatch batch;
      batch.sample = sample_group(sampling_policy, env, 0, config, 1);
      batch.adv = group_advantages(batch.sample, config);

      std::vector<std::vector<double>> theta = sampling_policy.logits;
      for (double& l : theta[0]) l += rng.uniform(-0.5, 0.5);

      const std::vector<std::vector<double>> analytic =
          batch_gradient(theta, sampling_policy.reference_logits, {&batch, 1},
                         env.prompt_weights, config.beta);
      const double h = 1e-5;
      for (std::size_t a = 0; a < theta[0].size(); ++a) {
        std::vector<std::vector<double>> hi = theta, lo = theta;
        hi[0][a] += h;
        lo[0][a] -= h;
        const double fd =
            (batch_objective(hi, sampling_policy.reference_logits, {&batch, 1},
                             env.prompt_weights, config.beta) -
             batch_objective(lo, sampling_policy.reference_logits, {&batch, 1},
                             env.prompt_weights, config.beta)) /
            (2.0 * h);
        const double rel = std::abs(fd - analytic[0][a]) /
                           std::max(std::abs(analytic[0][a]), 1e-2);
        max_rel = std::max(max_rel, rel);
      }
    }
    results.push_back(deviation_check("gradient", "matches_finite_differences",
                                      max_rel, 1e-4));
  }

  return results;
}

std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed, int instances,
                                          std::vector<BoundsRow>* bounds_rows) {
  std::vector<CheckResult> results;
  const bool all = suite == "all";
  if (all || suite == "bounds") {
    const auto part = verify_bounds(seed, instances, bounds_rows);
    results.insert(results.end(), part.begin(), part.end());
  }
  if (all || suite == "unbiasedness") {
    const auto part = verify_unbiasedness(seed);
    results.insert(results.end(), part.begin(), part.end());
  }
  if (all || suite == "recursion") {
    const auto part = verify_recursion();
    results.insert(results.end(), part.begin(), part.end());
  }
  if (all || suite == "gradient") {
    const auto part = verify_gradient(seed);
    results.insert(results.end(), part.begin(), part.end());
  }
  if (results.empty()) {
    throw std::invalid_argument("unknown verify suite '" + suite + "'");
  }
  return results;
}

}  // namespace grpolab
