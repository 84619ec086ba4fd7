#include "grpolab/correction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "grpolab/errors.hpp"

namespace grpolab {

FlipRateEstimate::FlipRateEstimate(double rho_plus_hat, double rho_minus_hat,
                                   long sample_count)
    : rho_plus_hat(rho_plus_hat),
      rho_minus_hat(rho_minus_hat),
      sample_count(sample_count) {
  if (!(rho_plus_hat >= 0.0 && rho_plus_hat <= 1.0) ||
      !(rho_minus_hat >= 0.0 && rho_minus_hat <= 1.0)) {
    throw std::invalid_argument("flip rates must lie in [0,1]");
  }
  if (rho_plus_hat + rho_minus_hat >= 1.0) {
    throw InversionError("rho+ + rho- = " +
                         std::to_string(rho_plus_hat + rho_minus_hat) +
                         " >= 1: channel not invertible");
  }
}

FlipRateEstimate FlipRateEstimate::exact(const NoiseSpec& noise) {
  if (!noise.invertible()) {
    throw InversionError("true rates sum to >= 1: channel not invertible");
  }
  return FlipRateEstimate(noise.rho_plus, noise.rho_minus, 0);
}

DebiasedReward debias(int r_noisy, const FlipRateEstimate& rates) {
  const double s = rates.signal();
  DebiasedReward out;
  out.source_bit = r_noisy != 0 ? 1 : 0;
  out.value = out.source_bit == 1 ? (1.0 - rates.rho_plus_hat) / s
                                  : -rates.rho_plus_hat / s;
  return out;
}

double variance_estimate_Z(std::span<const double> debiased,
                           const FlipRateEstimate& rates) {
  const std::size_t n = debiased.size();
  if (n < 2) {
    throw DegenerateSample("variance estimate needs n >= 2 samples, got " +
                           std::to_string(n));
  }
  double mean = 0.0;
  for (double x : debiased) mean += x;
  mean /= static_cast<double>(n);

  double ss = 0.0;
  for (double x : debiased) ss += (x - mean) * (x - mean);
  const double sample_var = ss / static_cast<double>(n - 1);

  const double s2 = rates.signal() * rates.signal();
  const double minus_term =
      rates.rho_minus_hat * (1.0 - rates.rho_minus_hat) / s2;
  const double plus_term = rates.rho_plus_hat * (1.0 - rates.rho_plus_hat) / s2;
  return sample_var - mean * minus_term - (1.0 - mean) * plus_term;
}

double clip_Z(double z, double floor) {
  if (!(floor > 0.0)) {
    throw std::invalid_argument("clip_Z floor must be positive");
  }
  return std::max(std::sqrt(std::max(z, 0.0)), std::sqrt(floor));
}

std::vector<HoldoutItem> balanced_corrupt_holdout(
    std::vector<HoldoutItem> items, SequentialRng& rng,
    double target_positive_fraction) {
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].r_true != 0) positives.push_back(i);
  }
  if (positives.size() < 2) {
    throw InsufficientData("holdout balancing needs at least 2 positives");
  }
  const double target = target_positive_fraction * items.size();
  const long flips = std::lround(static_cast<double>(positives.size()) - target);
  if (flips <= 0) return items;  // already at or below the target marginal

  // Fisher-Yates prefix: a uniformly chosen subset of `flips` positives gets
  // its ground truth relabeled to 0 (the corrupted-answer items).
  for (long k = 0; k < flips; ++k) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(k, static_cast<long>(positives.size()) - 1));
    std::swap(positives[k], positives[j]);
    items[positives[k]].r_true = 0;
  }
  return items;
}

FlipRateEstimate estimate_flip_rates(std::span<const LabeledScore> labeled) {
  long true_pos = 0, true_neg = 0, false_pos = 0, false_neg = 0;
  for (const LabeledScore& row : labeled) {
    if (row.r_true != 0) {
      ++true_pos;
      if (row.r_observed == 0) ++false_neg;
    } else {
      ++true_neg;
      if (row.r_observed != 0) ++false_pos;
    }
  }
  if (true_pos == 0 || true_neg == 0) {
    throw InsufficientData("estimation set needs both classes, got " +
                           std::to_string(true_pos) + " positives and " +
                           std::to_string(true_neg) + " negatives");
  }
  const double rho_plus = static_cast<double>(false_pos) / true_neg;
  const double rho_minus = static_cast<double>(false_neg) / true_pos;
  return FlipRateEstimate(rho_plus, rho_minus,
                          static_cast<long>(labeled.size()));
}

double effective_M_scale(const NoiseSpec& true_rates,
                         const FlipRateEstimate& est_rates, double m) {
  if (!true_rates.invertible()) {
    throw InversionError("true rates sum to >= 1: channel not invertible");
  }
  return m * est_rates.signal() / true_rates.signal();
}

std::vector<LabeledScore> read_labeled_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  if (line != "prompt_id,response_id,r_observed,r_true") {
    throw ConfigError(path + ":1: expected header "
                      "prompt_id,response_id,r_observed,r_true");
  }
  std::vector<LabeledScore> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    LabeledScore row;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(fields >> row.prompt_id >> c1 >> row.response_id >> c2 >>
          row.r_observed >> c3 >> row.r_true) ||
        c1 != ',' || c2 != ',' || c3 != ',' ||
        (row.r_observed != 0 && row.r_observed != 1) ||
        (row.r_true != 0 && row.r_true != 1)) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed row '" + line + "'");
    }
    rows.push_back(row);
  }
  return rows;
}

void write_labeled_csv(const std::string& path,
                       std::span<const LabeledScore> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "prompt_id,response_id,r_observed,r_true\n";
  for (const LabeledScore& row : rows) {
    out << row.prompt_id << ',' << row.response_id << ',' << row.r_observed
        << ',' << row.r_true << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace grpolab
