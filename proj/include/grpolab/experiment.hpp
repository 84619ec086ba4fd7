#ifndef GRPOLAB_EXPERIMENT_HPP_
#define GRPOLAB_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "grpolab/config.hpp"
#include "grpolab/dynamics.hpp"
#include "grpolab/reward_channel.hpp"
#include "grpolab/trainer.hpp"

namespace grpolab {

inline constexpr const char* kToolVersion = "0.1.0";

// Synthetic environment geometry: prompts with a fixed response count and a
// seeded random correct subset whose size is drawn from [correct_min,
// correct_max]. Uniform prompt weights.
struct EnvSpec {
  int prompt_count = 50;
  int response_count = 8;
  int correct_min = 2;
  int correct_max = 2;
  std::uint64_t gen_seed = 1;
};

Environment build_environment(const EnvSpec& spec, const NoiseSpec& noise);

enum class ArmKind { clean, uncorrected, corrected };
std::string arm_name(ArmKind arm);

// Everything a run needs, resolved from a key = value file plus environment
// overrides. Defaults follow the training setup the experiments use
// (beta = 0.01, G = 5, 10 epochs); the learning rate is retuned for the
// tabular scale and the recursion preset uses beta = 1 where fixed points
// are resolvable in double precision.
struct ExperimentConfig {
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  EnvSpec env;
  std::vector<NoiseSpec> noise_grid = {NoiseSpec(0.2, 0.3)};

  TrainerConfig trainer;
  std::vector<ArmKind> arms = {ArmKind::clean, ArmKind::uncorrected,
                               ArmKind::corrected};
  bool estimate_rates = false;     // run Stage 1 per seed instead of using
                                   // the true channel rates
  long estimation_samples = 2000;  // holdout size before balancing

  RecursionConfig recursion;  // noise filled per grid pair
  double p0 = 0.5;
  int k_max = 25;

  int curve_points = 99;
  double curve_p_min = 0.01;
  double curve_p_max = 0.99;
  NoiseSpec curve_noise{0.2, 0.3};
  double curve_m = 1.0;

  int verify_instances = 1000;
  std::uint64_t verify_seed = 1;

  KeyValueConfig raw;  // resolved source, hashed into the manifest
};

ExperimentConfig load_experiment(const KeyValueConfig& config);

// Collects output files and their content hashes; re-running with the same
// manifest reproduces byte-identical artifacts.
class OutputDir {
 public:
  explicit OutputDir(std::string dir);

  void write(const std::string& name, const std::string& content);
  const std::string& dir() const { return dir_; }

  void write_manifest(const ExperimentConfig& config);

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;  // name, fnv hex
};

// Stage 1 of the two-stage protocol on a synthetic channel: a holdout of
// verified-correct items, half of them corrupted for balance, scored through
// the channel, rates read off as conditional frequencies. Writes the
// estimation set when `out` is non-null.
FlipRateEstimate run_stage1_estimation(const NoiseSpec& channel,
                                       long holdout_size, std::uint64_t seed,
                                       std::vector<LabeledScore>* out = nullptr);

// Subcommand bodies. Each writes CSV artifacts plus a manifest into
// config.out_dir and throws ConfigError / IoError on misuse.
void cmd_recursion(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
void cmd_penalty_curves(const ExperimentConfig& config, bool emit_svg);

// Prints the estimate as a JSON record to `out`. Throws on parse /
// insufficient data / inversion failures.
std::string cmd_estimate(const std::string& csv_path);

// Runs a verification suite ("bounds", "unbiasedness", "recursion",
// "gradient" or "all"); returns 0 when every check passes, 1 otherwise.
int cmd_verify(const ExperimentConfig& config, const std::string& suite);

}  // namespace grpolab

#endif  // GRPOLAB_EXPERIMENT_HPP_
