#include <doctest.h>

#include <cmath>

#include "grpolab/prng.hpp"
#include "grpolab/reward_channel.hpp"

using namespace grpolab;

TEST_CASE("corruption matrix matches the channel layout") {
  SUBCASE("zero noise is the identity") {
    const auto m = corruption_matrix(NoiseSpec(0.0, 0.0));
    CHECK(m[0][0] == 1.0);
    CHECK(m[0][1] == 0.0);
    CHECK(m[1][0] == 0.0);
    CHECK(m[1][1] == 1.0);
  }
  SUBCASE("direct substitution") {
    const auto m = corruption_matrix(NoiseSpec(0.2, 0.3));
    CHECK(m[0][0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(m[0][1] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(m[1][0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m[1][1] == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("symmetric uninformative channel") {
    const auto m = corruption_matrix(NoiseSpec(0.5, 0.5));
    for (const auto& row : m) {
      for (double v : row) CHECK(v == 0.5);
    }
  }
  SUBCASE("rows sum to exactly 1 for random specs") {
    SequentialRng rng(3);
    for (int i = 0; i < 200; ++i) {
      const NoiseSpec noise(rng.uniform(), rng.uniform());
      const auto m = corruption_matrix(noise);
      CHECK(m[0][0] + m[0][1] == 1.0);
      CHECK(m[1][0] + m[1][1] == 1.0);
    }
  }
}

TEST_CASE("corrupt follows the indicator representation") {
  CHECK(corrupt(0, NoiseSpec(0.2, 0.0), 0.1) == 1);
  CHECK(corrupt(0, NoiseSpec(0.2, 0.0), 0.3) == 0);
  // zero false-negative rate passes true ones through for any xi < 1
  CHECK(corrupt(1, NoiseSpec(0.0, 0.0), 0.999) == 1);
  CHECK(corrupt(1, NoiseSpec(0.5, 0.3), 0.7) == 1);
  CHECK(corrupt(1, NoiseSpec(0.5, 0.3), 0.71) == 0);
}

TEST_CASE("corrupt empirical mean tracks the Bernoulli oracle") {
  // r_true = 1 through rho- = 0.3: mean over 1e6 seeded draws is 0.7 +- 0.002.
  const NoiseSpec noise(0.0, 0.3);
  const int n = 1000000;
  long ones = 0;
  for (int i = 0; i < n; ++i) {
    const double xi = key_uniform({11, StreamDomain::xi, 0, 0,
                                   static_cast<std::uint64_t>(i)});
    ones += corrupt(1, noise, xi);
  }
  CHECK(std::abs(static_cast<double>(ones) / n - 0.7) < 0.002);
}

TEST_CASE("channel consistency against noisy_mean on a grid") {
  const int n = 1000000;
  int grid_point = 0;
  for (const double p : {0.1, 0.5, 0.9}) {
    for (const NoiseSpec& noise :
         {NoiseSpec(0.0, 0.0), NoiseSpec(0.2, 0.3), NoiseSpec(0.45, 0.45)}) {
      ++grid_point;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const auto slot = static_cast<std::uint64_t>(i);
        const int r_true =
            key_uniform({77, StreamDomain::response,
                         static_cast<std::uint64_t>(grid_point), 0, slot}) < p
                ? 1
                : 0;
        const double xi = key_uniform(
            {77, StreamDomain::xi, static_cast<std::uint64_t>(grid_point), 0,
             slot});
        sum += corrupt(r_true, noise, xi);
      }
      const double mu = noisy_mean(p, noise);
      const double tolerance = 4.0 * std::sqrt(mu * (1.0 - mu) / n);
      CHECK(std::abs(sum / n - mu) < tolerance);
    }
  }
}

TEST_CASE("noisy_mean endpoints and interior value") {
  const NoiseSpec noise(0.2, 0.3);
  CHECK(noisy_mean(0.0, noise) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(noisy_mean(1.0, noise) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(noisy_mean(0.5, noise) == doctest::Approx(0.45).epsilon(1e-15));
  // output range is the interval between rho+ and 1 - rho-
  for (double p = 0.0; p <= 1.0; p += 0.125) {
    const double mu = noisy_mean(p, noise);
    CHECK(mu >= 0.2);
    CHECK(mu <= 0.7);
  }
}

TEST_CASE("noisy_std values and noise floor") {
  CHECK(noisy_std(0.0, NoiseSpec(0.0, 0.0)) == 0.0);
  // frozen: sqrt(0.45 * 0.55), independent high-precision evaluation
  CHECK(noisy_std(0.5, NoiseSpec(0.2, 0.3)) ==
        doctest::Approx(0.497493718553310).epsilon(1e-12));
  for (double p = 0.0; p <= 1.0; p += 0.25) {
    CHECK(noisy_std(p, NoiseSpec(0.5, 0.5)) == doctest::Approx(0.5));
  }

  // sigma-tilde never drops below its value at the p-extremes: the channel
  // keeps the observed reward away from determinism.
  for (const NoiseSpec& noise : {NoiseSpec(0.2, 0.3), NoiseSpec(0.05, 0.15)}) {
    const double floor =
        std::min(noisy_std(0.0, noise), noisy_std(1.0, noise));
    CHECK(floor > 0.0);
    for (int i = 0; i <= 100; ++i) {
      CHECK(noisy_std(i / 100.0, noise) >= floor - 1e-15);
    }
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(NoiseSpec(-0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSpec(0.0, 1.2), std::invalid_argument);
  // rho+ + rho- = 1 is representable; inversion failures happen at use sites
  CHECK_NOTHROW(NoiseSpec(0.5, 0.5));

  CHECK_THROWS_AS(PromptSpec(1, {0}), std::invalid_argument);
  CHECK_THROWS_AS(PromptSpec(4, {}), std::invalid_argument);
  CHECK_THROWS_AS(PromptSpec(4, {0, 1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(PromptSpec(4, {4}), std::invalid_argument);
  CHECK_NOTHROW(PromptSpec(4, {1, 3}));

  CHECK_THROWS_AS(Environment({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Environment({PromptSpec(4, {0})}, {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      Environment({PromptSpec(4, {0}), PromptSpec(4, {1})}, {0.7, 0.4}),
      std::invalid_argument);
  const Environment env({PromptSpec(4, {0}), PromptSpec(4, {1})});
  CHECK(env.prompt_weights[0] == 0.5);
}

TEST_CASE("draw_reward records the xi that decided the flip") {
  const NoiseSpec noise(0.3, 0.2);
  const StreamKey key{5, StreamDomain::xi, 2, 9, 4};
  const RewardDraw draw = draw_reward(1, noise, key);
  CHECK(draw.r_true == 1);
  CHECK(draw.xi == key_uniform(key));
  CHECK(draw.r_noisy == corrupt(1, noise, draw.xi));
}
