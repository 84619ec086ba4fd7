#include "grpolab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "grpolab/correction.hpp"
#include "grpolab/csv.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/svg.hpp"
#include "grpolab/verify.hpp"

namespace grpolab {

namespace {

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string joined;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) joined += ',';
    joined += std::to_string(seeds[i]);
  }
  return joined;
}

std::string noise_tag(const NoiseSpec& noise) {
  return "rp" + format_double(noise.rho_plus) + "_rm" +
         format_double(noise.rho_minus);
}

std::string mode_name(NormMode mode) {
  return mode == NormMode::grpo_z ? "grpo_Z" : "dr_grpo";
}

std::string correction_name(CorrectionMode correction) {
  return correction == CorrectionMode::natarajan ? "natarajan" : "off";
}

// Deterministic serialization of everything a run depends on; its hash is the
// manifest's config_hash.
std::string resolved_text(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "tool_version=" << kToolVersion << '\n';
  out << "out=" << config.out_dir << '\n';
  out << "seeds=" << join_seeds(config.seeds) << '\n';
  out << "env.prompts=" << config.env.prompt_count << '\n';
  out << "env.responses=" << config.env.response_count << '\n';
  out << "env.correct_min=" << config.env.correct_min << '\n';
  out << "env.correct_max=" << config.env.correct_max << '\n';
  out << "env.gen_seed=" << config.env.gen_seed << '\n';
  out << "noise.grid=";
  for (std::size_t i = 0; i < config.noise_grid.size(); ++i) {
    if (i > 0) out << ',';
    out << format_double(config.noise_grid[i].rho_plus) << ':'
        << format_double(config.noise_grid[i].rho_minus);
  }
  out << '\n';
  out << "train.group_size=" << config.trainer.group_size << '\n';
  out << "train.learning_rate=" << format_double(config.trainer.learning_rate)
      << '\n';
  out << "train.beta=" << format_double(config.trainer.beta) << '\n';
  out << "train.epochs=" << config.trainer.epochs << '\n';
  out << "train.batches_per_epoch=" << config.trainer.batches_per_epoch
      << '\n';
  out << "train.mode=" << mode_name(config.trainer.mode) << '\n';
  out << "train.z_floor=" << format_double(config.trainer.z_floor) << '\n';
  out << "train.arms=";
  for (std::size_t i = 0; i < config.arms.size(); ++i) {
    if (i > 0) out << ',';
    out << arm_name(config.arms[i]);
  }
  out << '\n';
  out << "train.estimate_rates=" << (config.estimate_rates ? "true" : "false")
      << '\n';
  out << "train.estimation_samples=" << config.estimation_samples << '\n';
  out << "recursion.beta=" << format_double(config.recursion.beta) << '\n';
  out << "recursion.epsilon=" << format_double(config.recursion.epsilon)
      << '\n';
  out << "recursion.p_ref=" << format_double(config.recursion.p_ref) << '\n';
  out << "recursion.p0=" << format_double(config.p0) << '\n';
  out << "recursion.k_max=" << config.k_max << '\n';
  out << "curves.points=" << config.curve_points << '\n';
  out << "curves.p_min=" << format_double(config.curve_p_min) << '\n';
  out << "curves.p_max=" << format_double(config.curve_p_max) << '\n';
  out << "curves.rho_plus=" << format_double(config.curve_noise.rho_plus)
      << '\n';
  out << "curves.rho_minus=" << format_double(config.curve_noise.rho_minus)
      << '\n';
  out << "curves.m=" << format_double(config.curve_m) << '\n';
  out << "verify.instances=" << config.verify_instances << '\n';
  out << "verify.seed=" << config.verify_seed << '\n';
  return out.str();
}

NoiseSpec parse_noise_pair(const std::string& item) {
  const std::size_t colon = item.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("noise pair '" + item + "': expected rho_plus:rho_minus");
  }
  try {
    return NoiseSpec(std::stod(item.substr(0, colon)),
                     std::stod(item.substr(colon + 1)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("noise pair '" + item + "': " + e.what());
  }
}

std::string train_report_csv(const TrainReport& report,
                             const TrainerConfig& trainer,
                             const NoiseSpec& noise) {
  std::string csv =
      "iter,clean_acc,noisy_reward_mean,mode,correction,rho_plus,rho_minus,"
      "seed\n";
  for (const IterationStats& stats : report.iterations) {
    csv += std::to_string(stats.iteration);
    csv += ',';
    csv += format_double(stats.clean_accuracy);
    csv += ',';
    csv += format_double(stats.mean_noisy_reward);
    csv += ',';
    csv += mode_name(trainer.mode);
    csv += ',';
    csv += correction_name(trainer.correction);
    csv += ',';
    csv += format_double(noise.rho_plus);
    csv += ',';
    csv += format_double(noise.rho_minus);
    csv += ',';
    csv += std::to_string(trainer.seed);
    csv += '\n';
  }
  return csv;
}

std::string policy_snapshot(const TabularPolicy& policy) {
  std::string text = "# prompt_id followed by one logit per response\n";
  for (std::size_t q = 0; q < policy.logits.size(); ++q) {
    text += std::to_string(q);
    for (double logit : policy.logits[q]) {
      text += ' ';
      text += format_double(logit);
    }
    text += '\n';
  }
  return text;
}

}  // namespace

std::string arm_name(ArmKind arm) {
  switch (arm) {
    case ArmKind::clean:
      return "clean";
    case ArmKind::uncorrected:
      return "uncorrected";
    case ArmKind::corrected:
      return "corrected";
  }
  return "unknown";
}

Environment build_environment(const EnvSpec& spec, const NoiseSpec& noise) {
  if (spec.prompt_count < 1 || spec.response_count < 2 ||
      spec.correct_min < 1 || spec.correct_max < spec.correct_min ||
      spec.correct_max >= spec.response_count) {
    throw ConfigError("invalid environment spec");
  }
  SequentialRng rng(mix64(spec.gen_seed ^ 0xe47a11ULL));
  std::vector<PromptSpec> prompts;
  prompts.reserve(spec.prompt_count);
  for (int q = 0; q < spec.prompt_count; ++q) {
    const int correct = static_cast<int>(
        rng.uniform_int(spec.correct_min, spec.correct_max));
    std::vector<int> order(spec.response_count);
    for (int i = 0; i < spec.response_count; ++i) order[i] = i;
    for (int i = 0; i < correct; ++i) {
      std::swap(order[i], order[rng.uniform_int(i, spec.response_count - 1)]);
    }
    prompts.emplace_back(spec.response_count,
                         std::vector<int>(order.begin(), order.begin() + correct),
                         noise);
  }
  return Environment(std::move(prompts));
}

ExperimentConfig load_experiment(const KeyValueConfig& raw) {
  ExperimentConfig config;
  config.raw = raw;
  config.out_dir = raw.get_string("out", config.out_dir);

  std::vector<std::string> seed_items =
      raw.get_list("seeds", {"1", "2", "3", "4", "5"});
  if (seed_items.empty()) throw ConfigError("seeds must be nonempty");
  config.seeds.clear();
  for (const std::string& item : seed_items) {
    try {
      config.seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("seed '" + item + "' is not an integer");
    }
  }

  config.env.prompt_count =
      static_cast<int>(raw.get_long("env.prompts", config.env.prompt_count));
  config.env.response_count = static_cast<int>(
      raw.get_long("env.responses", config.env.response_count));
  const long correct = raw.get_long("env.correct", 2);
  config.env.correct_min =
      static_cast<int>(raw.get_long("env.correct_min", correct));
  config.env.correct_max =
      static_cast<int>(raw.get_long("env.correct_max", correct));
  config.env.gen_seed = static_cast<std::uint64_t>(
      raw.get_long("env.gen_seed", static_cast<long>(config.env.gen_seed)));

  if (raw.has("noise.grid")) {
    config.noise_grid.clear();
    for (const std::string& item : raw.get_list("noise.grid", {})) {
      config.noise_grid.push_back(parse_noise_pair(item));
    }
  }

  config.trainer.group_size = static_cast<int>(
      raw.get_long("train.group_size", config.trainer.group_size));
  config.trainer.learning_rate =
      raw.get_double("train.learning_rate", config.trainer.learning_rate);
  config.trainer.beta = raw.get_double("train.beta", config.trainer.beta);
  config.trainer.epochs =
      static_cast<int>(raw.get_long("train.epochs", config.trainer.epochs));
  config.trainer.batches_per_epoch = static_cast<int>(raw.get_long(
      "train.batches_per_epoch", config.trainer.batches_per_epoch));
  config.trainer.z_floor =
      raw.get_double("train.z_floor", config.trainer.z_floor);
  const std::string mode = raw.get_string("train.mode", "dr_grpo");
  if (mode == "dr_grpo") {
    config.trainer.mode = NormMode::dr_grpo;
  } else if (mode == "grpo_z") {
    config.trainer.mode = NormMode::grpo_z;
  } else {
    throw ConfigError("train.mode must be dr_grpo or grpo_z, got '" + mode +
                      "'");
  }

  if (raw.has("train.arms")) {
    config.arms.clear();
    for (const std::string& item : raw.get_list("train.arms", {})) {
      if (item == "clean") {
        config.arms.push_back(ArmKind::clean);
      } else if (item == "uncorrected") {
        config.arms.push_back(ArmKind::uncorrected);
      } else if (item == "corrected") {
        config.arms.push_back(ArmKind::corrected);
      } else {
        throw ConfigError("unknown arm '" + item + "'");
      }
    }
    if (config.arms.empty()) throw ConfigError("train.arms must be nonempty");
  }
  config.estimate_rates =
      raw.get_bool("train.estimate_rates", config.estimate_rates);
  config.estimation_samples =
      raw.get_long("train.estimation_samples", config.estimation_samples);

  config.recursion = RecursionConfig(
      raw.get_double("recursion.beta", config.recursion.beta),
      raw.get_double("recursion.epsilon", config.recursion.epsilon),
      raw.get_double("recursion.p_ref", config.recursion.p_ref));
  config.p0 = raw.get_double("recursion.p0", config.p0);
  config.k_max = static_cast<int>(raw.get_long("recursion.k_max", config.k_max));

  config.curve_points =
      static_cast<int>(raw.get_long("curves.points", config.curve_points));
  config.curve_p_min = raw.get_double("curves.p_min", config.curve_p_min);
  config.curve_p_max = raw.get_double("curves.p_max", config.curve_p_max);
  config.curve_noise =
      NoiseSpec(raw.get_double("curves.rho_plus", config.curve_noise.rho_plus),
                raw.get_double("curves.rho_minus", config.curve_noise.rho_minus));
  config.curve_m = raw.get_double("curves.m", config.curve_m);

  config.verify_instances = static_cast<int>(
      raw.get_long("verify.instances", config.verify_instances));
  config.verify_seed = static_cast<std::uint64_t>(
      raw.get_long("verify.seed", static_cast<long>(config.verify_seed)));
  return config;
}

OutputDir::OutputDir(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory " + dir_);
}

void OutputDir::write(const std::string& name, const std::string& content) {
  write_text_file(dir_ + "/" + name, content);
  files_.emplace_back(name, to_hex(fnv1a(content)));
}

void OutputDir::write_manifest(const ExperimentConfig& config) {
  std::sort(files_.begin(), files_.end());
  std::string text;
  text += "tool_version=" + std::string(kToolVersion) + "\n";
  text += "config_hash=" + to_hex(fnv1a(resolved_text(config))) + "\n";
  text += "seeds=" + join_seeds(config.seeds) + "\n";
  for (const auto& [name, hash] : files_) {
    text += "file=" + name + " " + hash + "\n";
  }
  write_text_file(dir_ + "/manifest.txt", text);
}

FlipRateEstimate run_stage1_estimation(const NoiseSpec& channel,
                                       long holdout_size, std::uint64_t seed,
                                       std::vector<LabeledScore>* out) {
  if (holdout_size < 2) {
    throw InsufficientData("estimation holdout needs at least 2 items");
  }
  // The holdout mirrors the verified-correct protocol: every item starts as a
  // true positive, then half are relabeled for balance.
  std::vector<HoldoutItem> items;
  items.reserve(holdout_size);
  for (long i = 0; i < holdout_size; ++i) {
    items.push_back({i, 0, 1});
  }
  SequentialRng shuffle_rng(
      key_bits({seed, StreamDomain::shuffle, 0, 0, 0}));
  items = balanced_corrupt_holdout(std::move(items), shuffle_rng);

  std::vector<LabeledScore> rows;
  rows.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    // Iteration 0 is reserved for estimation; training iterations start at 1.
    const double xi = key_uniform({seed, StreamDomain::xi,
                                   static_cast<std::uint64_t>(items[i].prompt_id),
                                   0, 0});
    rows.push_back({items[i].prompt_id, items[i].response_id,
                    corrupt(items[i].r_true, channel, xi), items[i].r_true});
  }
  const FlipRateEstimate estimate = estimate_flip_rates(rows);
  if (out) *out = std::move(rows);
  return estimate;
}

void cmd_recursion(const ExperimentConfig& config) {
  OutputDir out(config.out_dir);

  const RecursionConfig clean(config.recursion.beta, config.recursion.epsilon,
                              config.recursion.p_ref);
  const std::vector<double> clean_traj =
      iterate_recursion(clean, config.p0, config.k_max);

  if (config.noise_grid.empty()) {
    std::string csv = "k,p_clean\n";
    for (std::size_t k = 0; k < clean_traj.size(); ++k) {
      csv += std::to_string(k) + "," + format_double(clean_traj[k]) + "\n";
    }
    if (config.k_max == 0) csv = "k,p_clean\n";
    out.write("trajectory.csv", csv);
  }

  std::string summary = "rho_plus,rho_minus,p_star_noisy,p_star_clean\n";
  const double clean_star =
      config.noise_grid.empty() ? 0.0 : fixed_point(clean);
  for (const NoiseSpec& noise : config.noise_grid) {
    const RecursionConfig noisy(config.recursion.beta,
                                config.recursion.epsilon,
                                config.recursion.p_ref, noise);
    const std::vector<double> noisy_traj =
        iterate_recursion(noisy, config.p0, config.k_max);
    std::string csv = "k,p_clean,p_noisy\n";
    if (config.k_max > 0) {
      for (std::size_t k = 0; k < clean_traj.size(); ++k) {
        csv += std::to_string(k) + "," + format_double(clean_traj[k]) + "," +
               format_double(noisy_traj[k]) + "\n";
      }
    }
    out.write("trajectory_" + noise_tag(noise) + ".csv", csv);
    summary += format_double(noise.rho_plus) + "," +
               format_double(noise.rho_minus) + "," +
               format_double(fixed_point(noisy)) + "," +
               format_double(clean_star) + "\n";
  }
  out.write("fixed_points.csv", summary);
  out.write_manifest(config);
}

void cmd_train(const ExperimentConfig& config) {
  OutputDir out(config.out_dir);
  std::vector<std::string> arm_errors;

  struct ArmRun {
    bool ran = false;
    double mean_final = 0.0;
  };
  // clean is noise-independent; computed once and reused across grid rows.
  ArmRun clean_run;
  std::map<std::size_t, ArmRun> uncorrected_runs;
  std::map<std::size_t, ArmRun> corrected_runs;

  const auto run_arm = [&](ArmKind arm, const NoiseSpec& noise,
                           const std::string& tag) -> ArmRun {
    ArmRun result;
    double total = 0.0;
    for (const std::uint64_t seed : config.seeds) {
      TrainerConfig trainer = config.trainer;
      trainer.seed = seed;
      trainer.correction = arm == ArmKind::corrected
                               ? CorrectionMode::natarajan
                               : CorrectionMode::off;
      const NoiseSpec arm_noise =
          arm == ArmKind::clean ? NoiseSpec() : noise;
      if (arm == ArmKind::corrected) {
        if (config.estimate_rates) {
          std::vector<LabeledScore> estimation_rows;
          trainer.rates = run_stage1_estimation(
              arm_noise, config.estimation_samples, seed, &estimation_rows);
          std::string csv = "prompt_id,response_id,r_observed,r_true\n";
          for (const LabeledScore& row : estimation_rows) {
            csv += std::to_string(row.prompt_id) + "," +
                   std::to_string(row.response_id) + "," +
                   std::to_string(row.r_observed) + "," +
                   std::to_string(row.r_true) + "\n";
          }
          out.write("estimation_" + tag + "_s" + std::to_string(seed) + ".csv",
                    csv);
        } else {
          trainer.rates = FlipRateEstimate::exact(arm_noise);
        }
      }
      const Environment env = build_environment(config.env, arm_noise);
      const TrainReport report = train(env, trainer);
      out.write("train_" + tag + "_s" + std::to_string(seed) + ".csv",
                train_report_csv(report, trainer, arm_noise));
      out.write("policy_" + tag + "_s" + std::to_string(seed) + ".txt",
                policy_snapshot(report.final_policy));
      total += report.final_accuracy();
    }
    result.ran = true;
    result.mean_final = total / static_cast<double>(config.seeds.size());
    return result;
  };

  const auto wants = [&](ArmKind arm) {
    return std::find(config.arms.begin(), config.arms.end(), arm) !=
           config.arms.end();
  };

  if (wants(ArmKind::clean)) {
    try {
      clean_run = run_arm(ArmKind::clean, NoiseSpec(), "clean");
    } catch (const Error& e) {
      arm_errors.push_back(std::string("clean: ") + e.what());
    }
  }
  for (std::size_t n = 0; n < config.noise_grid.size(); ++n) {
    const NoiseSpec& noise = config.noise_grid[n];
    if (wants(ArmKind::uncorrected)) {
      try {
        uncorrected_runs[n] = run_arm(ArmKind::uncorrected, noise,
                                      "uncorrected_" + noise_tag(noise));
      } catch (const Error& e) {
        arm_errors.push_back("uncorrected " + noise_tag(noise) + ": " +
                             e.what());
      }
    }
    if (wants(ArmKind::corrected)) {
      try {
        corrected_runs[n] = run_arm(ArmKind::corrected, noise,
                                    "corrected_" + noise_tag(noise));
      } catch (const Error& e) {
        arm_errors.push_back("corrected " + noise_tag(noise) + ": " +
                             e.what());
      }
    }
  }

  std::string summary =
      "rho_plus,rho_minus,acc_clean,acc_uncorrected,acc_corrected\n";
  for (std::size_t n = 0; n < config.noise_grid.size(); ++n) {
    const NoiseSpec& noise = config.noise_grid[n];
    summary += format_double(noise.rho_plus) + "," +
               format_double(noise.rho_minus) + ",";
    summary += clean_run.ran ? format_double(clean_run.mean_final) : "";
    summary += ",";
    summary += uncorrected_runs.count(n) && uncorrected_runs[n].ran
                   ? format_double(uncorrected_runs[n].mean_final)
                   : "";
    summary += ",";
    summary += corrected_runs.count(n) && corrected_runs[n].ran
                   ? format_double(corrected_runs[n].mean_final)
                   : "";
    summary += "\n";
  }
  out.write("summary.csv", summary);
  out.write_manifest(config);

  for (const std::string& message : arm_errors) {
    std::cerr << "arm failed: " << message << "\n";
  }
  if (!arm_errors.empty()) {
    throw Error("one or more training arms failed");
  }
}

void cmd_penalty_curves(const ExperimentConfig& config, bool emit_svg) {
  if (config.curve_points < 1 || !(config.curve_p_min > 0.0) ||
      !(config.curve_p_max < 1.0) ||
      !(config.curve_p_min <= config.curve_p_max)) {
    throw ConfigError("invalid penalty-curve grid");
  }
  OutputDir out(config.out_dir);
  std::vector<double> grid(config.curve_points);
  for (int i = 0; i < config.curve_points; ++i) {
    grid[i] = config.curve_points == 1
                  ? config.curve_p_min
                  : config.curve_p_min +
                        (config.curve_p_max - config.curve_p_min) * i /
                            (config.curve_points - 1);
  }
  std::vector<double> clean(grid.size()), noisy(grid.size()), flat(grid.size());
  std::string csv = "p,coef_clean,coef_noisy,coef_M1\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    clean[i] = penalty_coefficient(grid[i], CleanVariant{0.0});
    noisy[i] =
        penalty_coefficient(grid[i], NoisyVariant{config.curve_noise, 0.0});
    flat[i] = penalty_coefficient(grid[i], GeneralizedVariant{config.curve_m});
    csv += format_double(grid[i]) + "," + format_double(clean[i]) + "," +
           format_double(noisy[i]) + "," + format_double(flat[i]) + "\n";
  }
  out.write("penalty_curves.csv", csv);
  if (emit_svg) {
    out.write("penalty_curves.svg",
              svg_line_chart("Penalty coefficient vs success probability",
                             grid,
                             {{"clean", "#1f77b4", clean},
                              {"noisy", "#d62728", noisy},
                              {"M=" + format_double(config.curve_m), "#2ca02c",
                               flat}}));
  }
  out.write_manifest(config);
}

std::string cmd_estimate(const std::string& csv_path) {
  const std::vector<LabeledScore> rows = read_labeled_csv(csv_path);
  const FlipRateEstimate estimate = estimate_flip_rates(rows);
  long true_pos = 0, true_neg = 0;
  for (const LabeledScore& row : rows) {
    if (row.r_true != 0) {
      ++true_pos;
    } else {
      ++true_neg;
    }
  }
  nlohmann::json record;
  record["rho_plus_hat"] = estimate.rho_plus_hat;
  record["rho_minus_hat"] = estimate.rho_minus_hat;
  record["sample_count"] = estimate.sample_count;
  record["true_positive_count"] = true_pos;
  record["true_negative_count"] = true_neg;
  record["rho_plus_stderr"] = std::sqrt(
      estimate.rho_plus_hat * (1.0 - estimate.rho_plus_hat) / true_neg);
  record["rho_minus_stderr"] = std::sqrt(
      estimate.rho_minus_hat * (1.0 - estimate.rho_minus_hat) / true_pos);
  return record.dump(2);
}

int cmd_verify(const ExperimentConfig& config, const std::string& suite) {
  OutputDir out(config.out_dir);
  std::vector<BoundsRow> bounds_rows;
  const std::vector<CheckResult> results = run_verify_suite(
      suite, config.verify_seed, config.verify_instances, &bounds_rows);

  std::string margins = "suite,check,margin,pass\n";
  bool all_pass = true;
  for (const CheckResult& result : results) {
    margins += result.suite + "," + result.name + "," +
               format_double(result.margin) + "," +
               (result.pass ? "1" : "0") + "\n";
    std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << result.suite << "/"
              << result.name << " margin=" << format_double(result.margin)
              << "\n";
    all_pass = all_pass && result.pass;
  }
  out.write("verify_margins.csv", margins);

  if (!bounds_rows.empty()) {
    std::string csv = "variant,seed,lhs,rhs,holds\n";
    for (const BoundsRow& row : bounds_rows) {
      csv += row.variant + "," + std::to_string(row.seed) + "," +
             format_double(row.lhs) + "," + format_double(row.rhs) + "," +
             (row.holds ? "1" : "0") + "\n";
    }
    out.write("verify_bounds.csv", csv);
  }
  out.write_manifest(config);
  return all_pass ? 0 : 1;
}

}  // namespace grpolab
