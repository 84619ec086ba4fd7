// grpolab: noise-corrected GRPO / Dr.GRPO laboratory on tabular environments.
//
// Subcommands:
//   recursion       closed-form success-probability trajectories + fixed points
//   train           group-sampling trainer arms (clean / uncorrected / corrected)
//   estimate        flip-rate estimation from a labeled CSV
//   verify          theorem-backed property suites (exit 1 on any failure)
//   penalty-curves  penalty-coefficient curves over a success-probability grid
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 I/O error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "grpolab/config.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<long> seed;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "key = value config file");
  cmd->add_option("--out", flags->out_dir, "output directory");
  cmd->add_option("--seed", flags->seed,
                  "replace the configured seed list with this single seed");
}

grpolab::ExperimentConfig resolve_config(const CommonFlags& flags) {
  grpolab::KeyValueConfig raw;
  if (!flags.config_path.empty()) {
    raw = grpolab::KeyValueConfig::parse_file(flags.config_path);
  }
  if (!flags.out_dir.empty()) raw.set_override("out", flags.out_dir);
  if (flags.seed) {
    raw.set_override("seeds", std::to_string(*flags.seed));
    raw.set_override("verify.seed", std::to_string(*flags.seed));
  }
  return grpolab::load_experiment(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-corrected GRPO laboratory"};
  app.require_subcommand(1);

  CommonFlags recursion_flags;
  CLI::App* recursion =
      app.add_subcommand("recursion", "closed-form recursion trajectories");
  add_common_flags(recursion, &recursion_flags);

  CommonFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "group-sampling trainer arms");
  add_common_flags(train, &train_flags);

  std::string estimate_path;
  CLI::App* estimate =
      app.add_subcommand("estimate", "flip-rate estimation from labeled CSV");
  estimate->add_option("input", estimate_path, "labeled CSV path")->required();

  CommonFlags verify_flags;
  std::string suite = "all";
  CLI::App* verify = app.add_subcommand("verify", "theorem property suites");
  verify->add_option("suite", suite,
                     "bounds | unbiasedness | recursion | gradient | all");
  add_common_flags(verify, &verify_flags);

  CommonFlags curves_flags;
  bool emit_svg = false;
  CLI::App* curves =
      app.add_subcommand("penalty-curves", "penalty coefficient curves");
  curves->add_flag("--svg", emit_svg, "also emit an SVG line chart");
  add_common_flags(curves, &curves_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (recursion->parsed()) {
      grpolab::cmd_recursion(resolve_config(recursion_flags));
    } else if (train->parsed()) {
      grpolab::cmd_train(resolve_config(train_flags));
    } else if (estimate->parsed()) {
      std::cout << grpolab::cmd_estimate(estimate_path) << "\n";
    } else if (verify->parsed()) {
      return grpolab::cmd_verify(resolve_config(verify_flags), suite);
    } else if (curves->parsed()) {
      grpolab::cmd_penalty_curves(resolve_config(curves_flags), emit_svg);
    }
  } catch (const grpolab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const grpolab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const grpolab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
