#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "grpolab/correction.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/prng.hpp"

using namespace grpolab;

TEST_CASE("debias atoms") {
  SUBCASE("identity channel") {
    const FlipRateEstimate rates(0.0, 0.0);
    CHECK(debias(1, rates).value == 1.0);
    CHECK(debias(0, rates).value == 0.0);
  }
  SUBCASE("direct substitution at (0.2, 0.3)") {
    const FlipRateEstimate rates(0.2, 0.3);
    CHECK(debias(1, rates).value == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(debias(0, rates).value == doctest::Approx(-0.4).epsilon(1e-14));
  }
  SUBCASE("atom ordering for random invertible rates") {
    SequentialRng rng(21);
    for (int i = 0; i < 200; ++i) {
      const double rho_plus = rng.uniform(0.0, 0.7);
      const double rho_minus = rng.uniform(0.0, 0.99 - rho_plus);
      const FlipRateEstimate rates(rho_plus, rho_minus);
      CHECK(debias(1, rates).value >= 1.0 - 1e-12);
      CHECK(debias(0, rates).value <= 1e-12);
      if (rho_minus > 0.0) CHECK(debias(1, rates).value > 1.0);
    }
  }
  SUBCASE("non-invertible rates are rejected at construction") {
    CHECK_THROWS_AS(FlipRateEstimate(0.5, 0.5), InversionError);
    CHECK_THROWS_AS(FlipRateEstimate(0.7, 0.4), InversionError);
    CHECK_THROWS_AS(FlipRateEstimate::exact(NoiseSpec(0.5, 0.5)),
                    InversionError);
  }
}

TEST_CASE("debias channel expectation recovers the true reward") {
  // Prop.-3 style enumeration on a small grid; the full grid runs in the
  // acceptance suite.
  for (const auto& [rho_plus, rho_minus] :
       std::array<std::pair<double, double>, 3>{
           {{0.0, 0.0}, {0.2, 0.3}, {0.45, 0.45}}}) {
    const FlipRateEstimate rates(rho_plus, rho_minus);
    // r* = 1: observed 1 w.p. 1-rho-, observed 0 w.p. rho-
    const double e1 = (1.0 - rho_minus) * debias(1, rates).value +
                      rho_minus * debias(0, rates).value;
    // r* = 0: observed 1 w.p. rho+, observed 0 w.p. 1-rho+
    const double e0 = rho_plus * debias(1, rates).value +
                      (1.0 - rho_plus) * debias(0, rates).value;
    CHECK(std::abs(e1 - 1.0) < 1e-12);
    CHECK(std::abs(e0) < 1e-12);
  }
}

TEST_CASE("variance_estimate_Z basics") {
  const FlipRateEstimate zero(0.0, 0.0);
  SUBCASE("all samples equal, zero rates") {
    const std::array<double, 4> samples = {1.0, 1.0, 1.0, 1.0};
    CHECK(variance_estimate_Z(samples, zero) == 0.0);
  }
  SUBCASE("two-point sample keeps the n-1 divisor") {
    const std::array<double, 2> samples = {1.0, 0.0};
    CHECK(variance_estimate_Z(samples, zero) == doctest::Approx(0.5));
  }
  SUBCASE("fewer than two samples is degenerate") {
    const std::array<double, 1> one = {1.0};
    CHECK_THROWS_AS(variance_estimate_Z(one, zero), DegenerateSample);
  }
}

TEST_CASE("variance_estimate_Z is unbiased: small-n enumeration") {
  const double p = 0.5;
  const FlipRateEstimate rates(0.2, 0.3);
  const double a = debias(1, rates).value;
  const double b = debias(0, rates).value;
  // Cell probabilities for one sample: (r*, r~) with r* ~ Bernoulli(p).
  const std::array<std::pair<double, double>, 4> cells = {
      std::pair{p * 0.7, a},      // r*=1 observed 1
      std::pair{p * 0.3, b},      // r*=1 observed 0
      std::pair{0.5 * 0.2, a},    // r*=0 observed 1
      std::pair{0.5 * 0.8, b}};   // r*=0 observed 0
  for (int n = 2; n <= 3; ++n) {
    double expected = 0.0;
    const int combos = n == 2 ? 16 : 64;
    for (int mask = 0; mask < combos; ++mask) {
      double prob = 1.0;
      std::vector<double> sample(n);
      int rest = mask;
      for (int i = 0; i < n; ++i) {
        const auto& cell = cells[rest % 4];
        rest /= 4;
        prob *= cell.first;
        sample[i] = cell.second;
      }
      expected += prob * variance_estimate_Z(sample, rates);
    }
    CHECK(std::abs(expected - p * (1.0 - p)) < 1e-10);
  }
}

TEST_CASE("variance_estimate_Z Monte Carlo at n = 64") {
  const NoiseSpec noise(0.2, 0.3);
  const FlipRateEstimate rates = FlipRateEstimate::exact(noise);
  SequentialRng rng(31337);
  const int groups = 10000;
  double mean_z = 0.0;
  std::vector<double> sample(64);
  for (int g = 0; g < groups; ++g) {
    for (double& value : sample) {
      const int r_true = rng.uniform() < 0.5 ? 1 : 0;
      value = debias(corrupt(r_true, noise, rng.uniform()), rates).value;
    }
    mean_z += variance_estimate_Z(sample, rates);
  }
  CHECK(std::abs(mean_z / groups - 0.25) < 0.01);
}

TEST_CASE("clip_Z") {
  CHECK(clip_Z(0.25, 1e-6) == doctest::Approx(0.5));
  CHECK(clip_Z(-0.1, 1e-6) == doctest::Approx(1e-3));
  CHECK(clip_Z(0.0, 0.0025) == doctest::Approx(0.05));
  CHECK_THROWS_AS(clip_Z(0.1, 0.0), std::invalid_argument);
  // monotone in z
  CHECK(clip_Z(0.3, 1e-6) > clip_Z(0.2, 1e-6));
}

namespace {

std::vector<HoldoutItem> make_items(int positives, int negatives) {
  std::vector<HoldoutItem> items;
  long id = 0;
  for (int i = 0; i < positives; ++i) items.push_back({id++, 0, 1});
  for (int i = 0; i < negatives; ++i) items.push_back({id++, 0, 0});
  return items;
}

int count_positives(const std::vector<HoldoutItem>& items) {
  int count = 0;
  for (const HoldoutItem& item : items) count += item.r_true;
  return count;
}

}  // namespace

TEST_CASE("balanced_corrupt_holdout") {
  SequentialRng rng(5);
  SUBCASE("already balanced stays unchanged") {
    const auto out = balanced_corrupt_holdout(make_items(10, 10), rng);
    CHECK(count_positives(out) == 10);
  }
  SUBCASE("all-positive holdout flips half") {
    const auto out = balanced_corrupt_holdout(make_items(20, 0), rng);
    CHECK(count_positives(out) == 10);
    CHECK(out.size() == 20);
  }
  SUBCASE("12 positives and 4 negatives flip to 8/8") {
    const auto out = balanced_corrupt_holdout(make_items(12, 4), rng);
    CHECK(count_positives(out) == 8);
  }
  SUBCASE("flips only touch positives and keep identities") {
    const auto in = make_items(15, 3);
    const auto out = balanced_corrupt_holdout(in, rng);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(out[i].prompt_id == in[i].prompt_id);
      if (in[i].r_true == 0) CHECK(out[i].r_true == 0);
    }
  }
  SUBCASE("odd imbalance lands within 1/n of the target") {
    const auto out = balanced_corrupt_holdout(make_items(13, 4), rng);
    const double fraction = count_positives(out) / 17.0;
    CHECK(std::abs(fraction - 0.5) <= 1.0 / 17.0);
  }
  SUBCASE("needs at least two positives") {
    CHECK_THROWS_AS(balanced_corrupt_holdout(make_items(1, 5), rng),
                    InsufficientData);
  }
}

TEST_CASE("estimate_flip_rates counting") {
  SUBCASE("perfect agreement") {
    std::vector<LabeledScore> rows;
    for (int i = 0; i < 6; ++i) rows.push_back({i, 0, i % 2, i % 2});
    const FlipRateEstimate est = estimate_flip_rates(rows);
    CHECK(est.rho_plus_hat == 0.0);
    CHECK(est.rho_minus_hat == 0.0);
    CHECK(est.sample_count == 6);
  }
  SUBCASE("direct counting example") {
    // 4 true negatives with 2 observed positive; 4 true positives with 1
    // observed negative -> (0.5, 0.25).
    std::vector<LabeledScore> rows = {
        {0, 0, 1, 0}, {1, 0, 1, 0}, {2, 0, 0, 0}, {3, 0, 0, 0},
        {4, 0, 0, 1}, {5, 0, 1, 1}, {6, 0, 1, 1}, {7, 0, 1, 1},
    };
    const FlipRateEstimate est = estimate_flip_rates(rows);
    CHECK(est.rho_plus_hat == doctest::Approx(0.5));
    CHECK(est.rho_minus_hat == doctest::Approx(0.25));
  }
  SUBCASE("missing class") {
    std::vector<LabeledScore> rows = {{0, 0, 1, 1}, {1, 0, 0, 1}};
    CHECK_THROWS_AS(estimate_flip_rates(rows), InsufficientData);
  }
  SUBCASE("fully flipped channel is not invertible") {
    std::vector<LabeledScore> rows = {{0, 0, 0, 1}, {1, 0, 1, 0}};
    CHECK_THROWS_AS(estimate_flip_rates(rows), InversionError);
  }
  SUBCASE("duplicating the set leaves the estimate unchanged") {
    SequentialRng rng(8);
    std::vector<LabeledScore> rows;
    for (int i = 0; i < 100; ++i) {
      const int r_true = rng.uniform() < 0.5 ? 1 : 0;
      const int r_obs = rng.uniform() < 0.25 ? 1 - r_true : r_true;
      rows.push_back({i, 0, r_obs, r_true});
    }
    std::vector<LabeledScore> doubled = rows;
    doubled.insert(doubled.end(), rows.begin(), rows.end());
    const FlipRateEstimate once = estimate_flip_rates(rows);
    const FlipRateEstimate twice = estimate_flip_rates(doubled);
    CHECK(once.rho_plus_hat == twice.rho_plus_hat);
    CHECK(once.rho_minus_hat == twice.rho_minus_hat);
  }
}

TEST_CASE("estimation recovers a synthetic channel") {
  const NoiseSpec noise(0.2, 0.3);
  SequentialRng rng(99);
  std::vector<LabeledScore> rows;
  for (int i = 0; i < 2000; ++i) {
    const int r_true = i < 1000 ? 1 : 0;  // balanced by construction
    rows.push_back({i, 0, corrupt(r_true, noise, rng.uniform()), r_true});
  }
  const FlipRateEstimate est = estimate_flip_rates(rows);
  CHECK(std::abs(est.rho_plus_hat - 0.2) < 0.04);
  CHECK(std::abs(est.rho_minus_hat - 0.3) < 0.04);
}

TEST_CASE("effective_M_scale") {
  const NoiseSpec truth(0.2, 0.3);
  CHECK(effective_M_scale(truth, FlipRateEstimate::exact(truth), 1.0) ==
        doctest::Approx(1.0));
  CHECK(effective_M_scale(truth, FlipRateEstimate(0.25, 0.35), 1.0) ==
        doctest::Approx(0.8));
  CHECK(effective_M_scale(NoiseSpec(0.0, 0.0), FlipRateEstimate(0.1, 0.1),
                          0.5) == doctest::Approx(0.4));
  CHECK_THROWS_AS(
      effective_M_scale(NoiseSpec(0.6, 0.4), FlipRateEstimate(0.1, 0.1), 1.0),
      InversionError);
}

TEST_CASE("labeled CSV round trip and diagnostics") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "grpolab_labeled_test.csv")
          .string();
  std::vector<LabeledScore> rows = {{0, 1, 1, 1}, {2, 3, 0, 1}, {4, 5, 1, 0}};
  write_labeled_csv(path, rows);
  const auto read = read_labeled_csv(path);
  REQUIRE(read.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(read[i].prompt_id == rows[i].prompt_id);
    CHECK(read[i].response_id == rows[i].response_id);
    CHECK(read[i].r_observed == rows[i].r_observed);
    CHECK(read[i].r_true == rows[i].r_true);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_labeled_csv("/nonexistent/file.csv"), IoError);
}
