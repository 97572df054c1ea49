#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parasgd/experiment.hpp"

namespace parasgd {

/// Command-line front end. Exit codes: 0 success, 1 runtime failure,
/// 2 configuration or usage error.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"desk-scale harness for parallel SGD schemes: serial, naive minibatch "
               "splitting, and local SGD with periodic model averaging"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string sweep_kind;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool svg = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_dir, "output directory (default: config out.dir, "
                                      "then $PARASGD_OUT, then .)");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--threads", threads, "worker pool size (0 = hardware concurrency)");
    cmd->add_flag("--svg", svg, "also render SVG figures");
  };

  CLI::App* train = app.add_subcommand("train", "run one training scheme and emit its trace");
  add_common(train);
  CLI::App* sweep = app.add_subcommand("sweep", "run a heatmap, overhead, or tau sweep");
  add_common(sweep);
  sweep->add_option("--kind", sweep_kind, "heatmap | overhead | tau (overrides sweep.kind)");
  CLI::App* generate = app.add_subcommand("generate-data", "materialize the synthetic dataset");
  add_common(generate);

  try {
    // CLI11 wants argv-style reversed input for parse(vector).
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (svg) cfg.svg = true;
    if (!sweep_kind.empty()) {
      if (sweep_kind == "heatmap") {
        cfg.sweep_kind = SweepKind::Heatmap;
      } else if (sweep_kind == "overhead") {
        cfg.sweep_kind = SweepKind::Overhead;
      } else if (sweep_kind == "tau") {
        cfg.sweep_kind = SweepKind::Tau;
      } else {
        throw ConfigError("--kind", "unknown sweep '" + sweep_kind +
                                        "'; valid sweeps: heatmap, overhead, tau");
      }
    }

    if (train->parsed()) return cmd_train(cfg, out);
    if (sweep->parsed()) return cmd_sweep(cfg, out);
    return cmd_generate_data(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace parasgd
