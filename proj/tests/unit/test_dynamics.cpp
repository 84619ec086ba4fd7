#include <doctest.h>

#include <array>
#include <cmath>

#include "grpolab/dynamics.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/prng.hpp"

using namespace grpolab;

namespace {

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

}  // namespace

TEST_CASE("success_probability") {
  const PromptSpec quarter(4, {2});
  const std::vector<double> uniform = {0.25, 0.25, 0.25, 0.25};
  CHECK(success_probability(uniform, quarter) == doctest::Approx(0.25));

  const std::vector<double> point = {0.0, 0.0, 1.0, 0.0};
  CHECK(success_probability(point, quarter) == 1.0);

  const PromptSpec two_correct(4, {1, 3});
  const std::vector<double> vec = {0.1, 0.2, 0.3, 0.4};
  CHECK(success_probability(vec, two_correct) ==
        doctest::Approx(0.6).epsilon(1e-14));
  CHECK(success_sigma(0.5) == 0.5);
}

TEST_CASE("surrogate_loss variants") {
  const PromptSpec prompt(4, {0, 1});
  // p_k = 0.5, p = 0.6
  const DiscretePolicyPair pair(prompt, {0.35, 0.25, 0.2, 0.2},
                                {0.3, 0.2, 0.3, 0.2});

  SUBCASE("zero at the current policy") {
    const DiscretePolicyPair same(prompt, {0.3, 0.2, 0.3, 0.2},
                                  {0.3, 0.2, 0.3, 0.2});
    CHECK(surrogate_loss(same, CleanVariant{0.0}) == 0.0);
    CHECK(surrogate_loss(same, NoisyVariant{NoiseSpec(0.2, 0.3), 0.0}) == 0.0);
    CHECK(surrogate_loss(same, GeneralizedVariant{0.7}) == 0.0);
  }
  SUBCASE("clean direct substitution") {
    CHECK(surrogate_loss(pair, CleanVariant{0.0}) ==
          doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("noisy frozen value") {
    // (1-0.2-0.3) * 0.1 / sqrt(0.45 * 0.55), independent evaluation
    CHECK(surrogate_loss(pair, NoisyVariant{NoiseSpec(0.2, 0.3), 0.0}) ==
          doctest::Approx(0.100503781526).epsilon(1e-12));
  }
  SUBCASE("generalized divides by M") {
    CHECK(surrogate_loss(pair, GeneralizedVariant{1.0}) ==
          doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("degenerate divisor at deterministic current policy") {
    const DiscretePolicyPair degenerate(prompt, {0.25, 0.25, 0.25, 0.25},
                                        {0.5, 0.5, 0.0, 0.0});
    CHECK_THROWS_AS(surrogate_loss(degenerate, CleanVariant{0.0}),
                    DegenerateDivisor);
    CHECK_NOTHROW(surrogate_loss(degenerate, CleanVariant{1e-6}));
    CHECK_THROWS_AS(surrogate_loss(pair, GeneralizedVariant{0.0}),
                    DegenerateDivisor);
  }
}

TEST_CASE("penalty_coefficient") {
  CHECK(penalty_coefficient(0.5, CleanVariant{0.0}) == doctest::Approx(1.0));
  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(penalty_coefficient(p, GeneralizedVariant{1.0}) == 0.0);
  }
  // frozen values at p = 0.99 with (0.2, 0.3): noisy stays bounded while the
  // clean coefficient explodes
  const double clean = penalty_coefficient(0.99, CleanVariant{0.0});
  const double noisy =
      penalty_coefficient(0.99, NoisyVariant{NoiseSpec(0.2, 0.3), 0.0});
  CHECK(clean == doctest::Approx(9.05037815259).epsilon(1e-11));
  CHECK(noisy == doctest::Approx(0.0859946414985).epsilon(1e-11));
  CHECK(noisy < clean);
  CHECK_THROWS_AS(penalty_coefficient(0.0, CleanVariant{0.0}),
                  DegenerateDivisor);

  SUBCASE("noise flattens the coefficient on the whole grid") {
    for (int i = 1; i < 100; ++i) {
      const double p = i / 100.0;
      CHECK(penalty_coefficient(p, NoisyVariant{NoiseSpec(0.2, 0.3), 0.0}) <=
            penalty_coefficient(p, CleanVariant{0.0}) + 1e-12);
    }
  }
}

TEST_CASE("attenuation: the noisy surrogate never beats the clean one in "
          "magnitude") {
  SequentialRng rng(17);
  for (int i = 0; i < 300; ++i) {
    const double rho_plus = rng.uniform(0.01, 0.6);
    const double rho_minus = rng.uniform(0.01, 0.9 - rho_plus);
    const NoiseSpec noise(rho_plus, rho_minus);
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    const int correct = static_cast<int>(rng.uniform_int(1, n - 1));
    std::vector<int> correct_set;
    for (int c = 0; c < correct; ++c) correct_set.push_back(c);
    const PromptSpec prompt(n, correct_set, noise);
    const DiscretePolicyPair pair(prompt, random_simplex(rng, n),
                                  random_simplex(rng, n));
    const double clean = surrogate_loss(pair, CleanVariant{0.0});
    const double noisy = surrogate_loss(pair, NoisyVariant{noise, 0.0});
    CHECK(std::abs(noisy) <= std::abs(clean) + 1e-12);
    CHECK(clean * noisy >= -1e-18);  // same sign (or zero)
  }
}

TEST_CASE("omega weights") {
  const OmegaWeights symmetric = omega_weights(0.5, 0.0);
  CHECK(symmetric.plus == doctest::Approx(1.0));
  CHECK(symmetric.minus == doctest::Approx(1.0));

  const OmegaWeights skewed = omega_weights(0.8, 0.0);
  CHECK(skewed.plus == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(skewed.minus == doctest::Approx(2.0).epsilon(1e-12));

  for (double p = 0.05; p < 1.0; p += 0.05) {
    const OmegaWeights w = omega_weights(p, 0.0);
    CHECK(w.plus * w.minus == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(omega_weights(1.0, 0.0), DegenerateDivisor);
  CHECK_NOTHROW(omega_weights(1.0, 1e-6));
}

TEST_CASE("closed_form_step") {
  SUBCASE("huge beta collapses to p_ref from above") {
    const RecursionConfig config(1e9, 0.0, 0.3);
    const double next = closed_form_step(0.6, config);
    CHECK(next > 0.3);
    CHECK(next == doctest::Approx(0.3).epsilon(1e-8));
  }
  SUBCASE("zero noise reproduces the clean map") {
    const RecursionConfig clean(0.7, 1e-6, 0.4);
    const RecursionConfig zero_noise(0.7, 1e-6, 0.4, NoiseSpec(0.0, 0.0));
    for (int i = 0; i <= 20; ++i) {
      const double p = i / 20.0;
      CHECK(closed_form_step(p, clean) == closed_form_step(p, zero_noise));
    }
  }
  SUBCASE("frozen value at the training-scale beta") {
    // p_ref = 0.5, beta = 0.01, eps = 1e-6, p = 0.5: the exponent is ~200 and
    // the map saturates to 1 in double precision.
    const RecursionConfig config(0.01, 1e-6, 0.5);
    CHECK(closed_form_step(0.5, config) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("frozen interior values at beta = 1") {
    const RecursionConfig clean(1.0, 1e-6, 0.25);
    CHECK(closed_form_step(0.5, clean) ==
          doctest::Approx(0.711233772710).epsilon(1e-12));
    const RecursionConfig noisy(1.0, 1e-6, 0.25, NoiseSpec(0.2, 0.3));
    CHECK(closed_form_step(0.5, noisy) ==
          doctest::Approx(0.476622930129).epsilon(1e-12));
    // p(1-p) symmetry of the clean exponent
    CHECK(closed_form_step(0.2, clean) == closed_form_step(0.8, clean));
    CHECK(closed_form_step(0.2, clean) ==
          doctest::Approx(0.802402766366).epsilon(1e-12));
  }
  SUBCASE("output stays in (p_ref, 1]") {
    const RecursionConfig config(0.5, 1e-6, 0.25, NoiseSpec(0.3, 0.4));
    for (int i = 0; i <= 10; ++i) {
      const double next = closed_form_step(i / 10.0, config);
      CHECK(next > 0.25);
      CHECK(next <= 1.0);
    }
  }
  SUBCASE("config validation") {
    CHECK_THROWS_AS(RecursionConfig(0.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(RecursionConfig(1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(RecursionConfig(1.0, 0.0, 0.5, NoiseSpec(0.6, 0.4)),
                    std::invalid_argument);
  }
}

TEST_CASE("iterate_recursion") {
  const RecursionConfig config(1.0, 1e-6, 0.25);
  SUBCASE("k_max = 0 returns only the start") {
    const std::vector<double> traj = iterate_recursion(config, 0.7, 0);
    REQUIRE(traj.size() == 1);
    CHECK(traj[0] == 0.7);
  }
  SUBCASE("all iterates beyond the start exceed p_ref") {
    for (double p0 : {0.0, 0.1, 0.9, 1.0}) {
      const std::vector<double> traj = iterate_recursion(config, p0, 40);
      for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj[k] > 0.25);
    }
  }
  SUBCASE("clean trajectory dominates the noisy one from k = 1") {
    const RecursionConfig noisy(1.0, 1e-6, 0.25, NoiseSpec(0.2, 0.3));
    const std::vector<double> clean_traj = iterate_recursion(config, 0.5, 30);
    const std::vector<double> noisy_traj = iterate_recursion(noisy, 0.5, 30);
    for (std::size_t k = 1; k < clean_traj.size(); ++k) {
      CHECK(clean_traj[k] > noisy_traj[k]);
    }
  }
}

TEST_CASE("dominance of the clean map on a 1001-point grid") {
  for (const NoiseSpec& noise :
       {NoiseSpec(0.05, 0.15), NoiseSpec(0.2, 0.3), NoiseSpec(0.4, 0.5)}) {
    const RecursionConfig clean(1.0, 1e-6, 0.25);
    const RecursionConfig noisy(1.0, 1e-6, 0.25, noise);
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      CHECK(closed_form_step(p, noisy) < closed_form_step(p, clean));
    }
  }
}

TEST_CASE("fixed_point") {
  SUBCASE("tiny beta drives the fixed point toward 1") {
    const RecursionConfig config(0.01, 1e-6, 0.25);
    CHECK(fixed_point(config) > 0.999);
  }
  SUBCASE("heavy but invertible noise still improves on the reference") {
    const RecursionConfig config(1.0, 1e-6, 0.25, NoiseSpec(0.4, 0.5));
    const double star = fixed_point(config);
    CHECK(star > 0.25);
    CHECK(std::abs(closed_form_step(star, config) - star) <= 1e-12);
  }
  SUBCASE("frozen fixed points for the synthetic noise grid at beta = 1") {
    // independent high-precision fixed points, p_ref = 0.25, eps = 1e-6
    const std::array<std::pair<NoiseSpec, double>, 5> expected = {
        std::pair{NoiseSpec(0.05, 0.15), 0.624655415994},
        std::pair{NoiseSpec(0.1, 0.2), 0.574784812228},
        std::pair{NoiseSpec(0.2, 0.3), 0.477266580702},
        std::pair{NoiseSpec(0.3, 0.4), 0.380002735563},
        std::pair{NoiseSpec(0.4, 0.5), 0.289757136111}};
    double previous = 1.0;
    for (const auto& [noise, star_expected] : expected) {
      const RecursionConfig config(1.0, 1e-6, 0.25, noise);
      const double star = fixed_point(config);
      CHECK(star == doctest::Approx(star_expected).epsilon(1e-9));
      CHECK(star < previous);  // decreasing in rho+ + rho-
      previous = star;
    }
    // all strictly below the clean fixed point
    CHECK(previous < fixed_point(RecursionConfig(1.0, 1e-6, 0.25)));
  }
}

TEST_CASE("closed_form_policy_update") {
  const PromptSpec prompt(2, {0});
  const std::vector<double> reference = {0.5, 0.5};

  SUBCASE("huge beta returns the reference unchanged") {
    const RecursionConfig config(1e12, 1e-6, 0.5);
    const std::vector<double> next =
        closed_form_policy_update(reference, reference, prompt, config);
    CHECK(next[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(next[1] == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("two-atom hand algebra: omega+ + omega- = 2 at p = 1/2") {
    const RecursionConfig config(1.0, 0.0, 0.5);
    const std::vector<double> next =
        closed_form_policy_update(reference, reference, prompt, config);
    // success probability = 1 / (1 + exp(-2/beta)); frozen for beta = 1
    CHECK(success_probability(next, prompt) ==
          doctest::Approx(0.880797077978).epsilon(1e-12));
    CHECK(success_probability(next, prompt) ==
          doctest::Approx(closed_form_step(0.5, config)).epsilon(1e-12));
  }
  SUBCASE("output is a distribution and pushes the recursion forward") {
    SequentialRng rng(1312);
    for (int i = 0; i < 1000; ++i) {
      const int n = static_cast<int>(rng.uniform_int(2, 6));
      const int correct = static_cast<int>(rng.uniform_int(1, n - 1));
      std::vector<int> correct_set;
      for (int c = 0; c < correct; ++c) correct_set.push_back(c);
      const bool noisy = rng.uniform() < 0.5;
      const NoiseSpec noise = noisy ? NoiseSpec(rng.uniform(0.0, 0.45),
                                                rng.uniform(0.0, 0.45))
                                    : NoiseSpec();
      const PromptSpec random_prompt(n, correct_set, noise);
      const std::vector<double> ref_vec = random_simplex(rng, n);
      const std::vector<double> cur_vec = random_simplex(rng, n);
      const RecursionConfig config(
          std::exp(rng.uniform(std::log(0.05), std::log(5.0))), 1e-6,
          success_probability(ref_vec, random_prompt),
          noisy ? std::optional<NoiseSpec>(noise) : std::nullopt);
      const std::vector<double> next =
          closed_form_policy_update(ref_vec, cur_vec, random_prompt, config);
      double sum = 0.0;
      for (double v : next) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(success_probability(next, random_prompt) ==
            doctest::Approx(closed_form_step(
                                success_probability(cur_vec, random_prompt),
                                config))
                .epsilon(1e-10));
    }
  }
  SUBCASE("tiny beta keeps the tilt finite via the log-space shift") {
    const RecursionConfig config(0.001, 1e-6, 0.5);
    const std::vector<double> next =
        closed_form_policy_update(reference, reference, prompt, config);
    CHECK(std::isfinite(next[0]));
    CHECK(next[0] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("improvement_bound_check") {
  const PromptSpec prompt(4, {0, 2});
  SUBCASE("pi = pi_k collapses both sides") {
    const std::vector<double> vec = {0.3, 0.25, 0.25, 0.2};
    const DiscretePolicyPair pair(prompt, vec, vec);
    const BoundCheck check =
        improvement_bound_check(pair, CleanVariant{0.0});
    CHECK(check.lhs == 0.0);
    CHECK(check.rhs <= 0.0);
    CHECK(check.holds);
  }
  SUBCASE("random instances hold for every variant") {
    SequentialRng rng(2024);
    for (int i = 0; i < 300; ++i) {
      const int n = static_cast<int>(rng.uniform_int(2, 6));
      const int correct = static_cast<int>(rng.uniform_int(1, n - 1));
      std::vector<int> correct_set;
      for (int c = 0; c < correct; ++c) correct_set.push_back(c);
      const double rho_plus = rng.uniform(0.01, 0.6);
      const double rho_minus = rng.uniform(0.01, 0.9 - rho_plus);
      const NoiseSpec noise(rho_plus, rho_minus);
      const PromptSpec p(n, correct_set, noise);
      const DiscretePolicyPair pair(p, random_simplex(rng, n),
                                    random_simplex(rng, n));
      CHECK(improvement_bound_check(pair, CleanVariant{0.0}).holds);
      CHECK(improvement_bound_check(pair, NoisyVariant{noise, 0.0}).holds);
      CHECK(improvement_bound_check(
                pair, GeneralizedVariant{rng.uniform(0.05, 2.0)})
                .holds);
    }
  }
  SUBCASE("generalized with M = sigma_k reproduces the clean bound") {
    SequentialRng rng(77);
    for (int i = 0; i < 100; ++i) {
      const DiscretePolicyPair pair(prompt, random_simplex(rng, 4),
                                    random_simplex(rng, 4));
      const double p_k = success_probability(pair.pi_k, prompt);
      const BoundCheck clean = improvement_bound_check(pair, CleanVariant{0.0});
      const BoundCheck gen = improvement_bound_check(
          pair, GeneralizedVariant{success_sigma(p_k)});
      CHECK(std::abs(clean.rhs - gen.rhs) < 1e-12);
    }
  }
  SUBCASE("weighted multi-prompt environment") {
    SequentialRng rng(5150);
    std::vector<DiscretePolicyPair> pairs;
    std::vector<LossVariant> variants;
    for (int q = 0; q < 3; ++q) {
      pairs.emplace_back(prompt, random_simplex(rng, 4),
                         random_simplex(rng, 4));
      variants.push_back(CleanVariant{0.0});
    }
    const std::vector<double> weights = {0.5, 0.3, 0.2};
    const BoundCheck check = improvement_bound_check(pairs, weights, variants);
    CHECK(check.holds);
    // lhs is the weighted success-probability gap
    double expected_lhs = 0.0;
    for (int q = 0; q < 3; ++q) {
      expected_lhs +=
          weights[q] * (success_probability(pairs[q].pi, prompt) -
                        success_probability(pairs[q].pi_k, prompt));
    }
    CHECK(check.lhs == doctest::Approx(expected_lhs).epsilon(1e-14));
  }
}

TEST_CASE("Pinsker inequality holds as a checked relation") {
  SequentialRng rng(404);
  for (int i = 0; i < 200; ++i) {
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    const std::vector<double> a = random_simplex(rng, n);
    const std::vector<double> b = random_simplex(rng, n);
    const double tv = total_variation(a, b);
    CHECK(tv * tv <= 0.5 * categorical_kl(a, b) + 1e-12);
  }
}
