#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "parasgd/analysis.hpp"
#include "parasgd/config.hpp"
#include "parasgd/csv.hpp"
#include "parasgd/data.hpp"
#include "parasgd/svg.hpp"

namespace parasgd {

/// Inline layer-list grammar: layers separated by `|` or `;`, each
/// `kind(args)` with comma-separated arguments. The data and label layers
/// are implied (named "data" and "label") and the loss layer's label input
/// is always "label". Kinds:
///   conv(name,input,kh,kw,filters)
///   pool(name,input,kh,kw,sh,sw)
///   linear(name,input,outputs)
///   relu(name,input)
///   softmax(name,logits)
inline NetSpec parse_layer_list(const std::string& text, std::size_t batch, std::size_t channels,
                                std::size_t height, std::size_t width) {
  NetSpec net;
  net.layers.push_back(data_layer("data", batch, channels, height, width));
  net.layers.push_back(label_layer("label", batch));

  std::string buffer = text;
  for (char& ch : buffer) {
    if (ch == ';') ch = '|';
  }
  std::stringstream in(buffer);
  std::string item;
  auto fail = [](const std::string& msg) { throw ConfigError("net.spec", msg); };
  while (std::getline(in, item, '|')) {
    const std::size_t open = item.find('(');
    const std::size_t close = item.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      fail("expected kind(args), got '" + item + "'");
    }
    auto strip = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t");
      const std::size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string kind = strip(item.substr(0, open));
    std::vector<std::string> args;
    std::stringstream arg_in(item.substr(open + 1, close - open - 1));
    std::string arg;
    while (std::getline(arg_in, arg, ',')) args.push_back(strip(arg));
    auto num = [&](std::size_t i) {
      try {
        return std::stoi(args.at(i));
      } catch (const std::exception&) {
        fail("bad numeric argument in '" + item + "'");
        return 0;
      }
    };
    if (kind == "conv" && args.size() == 5) {
      net.layers.push_back(conv_layer(args[0], args[1], num(2), num(3), num(4)));
    } else if (kind == "pool" && args.size() == 6) {
      net.layers.push_back(pool_layer(args[0], args[1], num(2), num(3), num(4), num(5)));
    } else if (kind == "linear" && args.size() == 3) {
      net.layers.push_back(linear_layer(args[0], args[1], num(2)));
    } else if (kind == "relu" && args.size() == 2) {
      net.layers.push_back(relu_layer(args[0], args[1]));
    } else if (kind == "softmax" && args.size() == 2) {
      net.layers.push_back(softmax_loss_layer(args[0], args[1], "label"));
    } else {
      fail("unknown layer '" + kind + "' or wrong argument count in '" + item + "'");
    }
  }
  try {
    net.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return net;
}

struct ExperimentData {
  Dataset train;
  Dataset test;
};

inline ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  switch (cfg.source) {
    case DataSource::Synthetic: {
      ExperimentData d{
          generate_synthetic(cfg.classes, cfg.channels, cfg.height, cfg.width, cfg.per_class,
                             cfg.separation, cfg.data_seed, 0),
          generate_synthetic(cfg.classes, cfg.channels, cfg.height, cfg.width, cfg.val_per_class,
                             cfg.separation, cfg.data_seed, 1),
      };
      return d;
    }
    case DataSource::Idx: {
      ExperimentData d{load_idx(cfg.train_images, cfg.train_labels),
                       load_idx(cfg.test_images, cfg.test_labels)};
      const int classes = std::max(d.train.num_classes, d.test.num_classes);
      d.train.num_classes = classes;
      d.test.num_classes = classes;
      if (d.train.images.shape()[1] != d.test.images.shape()[1] ||
          d.train.images.shape()[2] != d.test.images.shape()[2] ||
          d.train.images.shape()[3] != d.test.images.shape()[3]) {
        throw ConfigError("data.test_images", "train and test image shapes differ");
      }
      return d;
    }
    case DataSource::Csv:
      return {load_csv(cfg.train_csv, cfg.channels, cfg.height, cfg.width, cfg.classes),
              load_csv(cfg.test_csv, cfg.channels, cfg.height, cfg.width, cfg.classes)};
  }
  throw std::logic_error("unreachable data source");
}

inline NetSpec materialize_net(const ExperimentConfig& cfg, const Dataset& train) {
  const std::size_t c = train.channels(), h = train.height(), w = train.width();
  if (!cfg.net_inline.empty()) return parse_layer_list(cfg.net_inline, cfg.batch, c, h, w);
  if (cfg.net_preset == "lenet-small") {
    return make_lenet_small(cfg.batch, c, h, w, train.num_classes);
  }
  return make_mlp(cfg.batch, c, h, w, train.num_classes, cfg.hidden);
}

inline SchemeContext make_scheme_context(const ExperimentConfig& cfg, const ExperimentData& data,
                                         const NetSpec& net) {
  SchemeContext ctx;
  ctx.net = net;
  ctx.train_data = &data.train;
  ctx.eval_data = &data.test;
  ctx.batch = cfg.batch;
  ctx.sgd = {cfg.learning_rate, cfg.momentum};
  ctx.seed = cfg.seed;
  ctx.cost = cfg.cost;
  ctx.target_accuracy = cfg.target_accuracy.value_or(2.0);
  ctx.eval_steps = cfg.eval_steps;
  return ctx;
}

inline std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg) {
  std::string dir = cfg.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("PARASGD_OUT")) dir = env;
  }
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  return dir;
}

inline int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline long sparknet_round_budget(const ExperimentConfig& cfg, int tau) {
  if (cfg.budget_rounds) return *cfg.budget_rounds;
  const long parallel = cfg.budget_parallel_iters.value_or(cfg.budget_iters);
  return (parallel + tau - 1) / tau;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline std::vector<std::uint64_t> sweep_seeds(const ExperimentConfig& cfg) {
  return cfg.sweep_seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.sweep_seeds;
}

}  // namespace detail

/// `train`: one run of the selected scheme; writes trace.csv and reports the
/// iterations or rounds the target took.
inline int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.scheme) {
    throw ConfigError("scheme", "required for the train command (serial, naive, sparknet)");
  }
  const ExperimentData data = load_experiment_data(cfg);
  const NetSpec net = materialize_net(cfg, data.train);
  const SchemeContext ctx = make_scheme_context(cfg, data, net);

  RunTrace trace;
  switch (*cfg.scheme) {
    case SchemeKind::Serial:
      trace = run_serial(ctx, cfg.budget_iters, cfg.eval_every);
      break;
    case SchemeKind::Naive:
      trace = run_naive(ctx, cfg.workers, cfg.budget_iters, cfg.eval_every);
      break;
    case SchemeKind::Sparknet:
      trace = run_sparknet(ctx, cfg.workers, cfg.tau, detail::sparknet_round_budget(cfg, cfg.tau),
                           cfg.warm_start, resolve_threads(cfg));
      break;
  }

  const std::filesystem::path dir = resolve_out_dir(cfg);
  std::ostringstream body;
  csv::write_trace(body, trace);
  detail::write_text_file(dir / "trace.csv", body.str());
  log << "wrote " << (dir / "trace.csv").string() << "\n";

  if (!cfg.target_accuracy) {
    log << "no accuracy target set; ran to the budget ("
        << (trace.records.empty() ? 0 : trace.records.back().serial_iters +
                                            trace.records.back().parallel_iters)
        << " iterations)\n";
  } else if (trace.reached()) {
    const EvalRecord& r = trace.records.back();
    if (*cfg.scheme == SchemeKind::Sparknet) {
      log << "M_a = " << r.rounds << " rounds (tau = " << cfg.tau << ", accuracy " << r.accuracy
          << " >= " << *cfg.target_accuracy << " at simulated time " << r.sim_time << ")\n";
    } else {
      log << "N_a = " << r.serial_iters << " iterations (accuracy " << r.accuracy
          << " >= " << *cfg.target_accuracy << " at simulated time " << r.sim_time << ")\n";
    }
  } else {
    log << "target accuracy " << *cfg.target_accuracy << " not reached within the budget\n";
  }
  return 0;
}

/// `sweep`: heatmap (K x tau grid), overhead (speedup-vs-S curves), or tau
/// (accuracy-vs-time overlay). Emits CSV and optional SVG into the output
/// directory.
inline int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.sweep_kind) {
    throw ConfigError("sweep.kind", "required for the sweep command (heatmap, overhead, tau)");
  }
  const ExperimentData data = load_experiment_data(cfg);
  const NetSpec net = materialize_net(cfg, data.train);
  const SchemeContext base = make_scheme_context(cfg, data, net);
  const std::filesystem::path dir = resolve_out_dir(cfg);

  // The measured quantities are cost-free (iterations and rounds); the cost
  // model enters through the emitted speedup formulas.
  static const std::vector<int> kDefaultTaus{1, 2, 5, 10, 25, 100, 500, 1000, 2500};

  switch (*cfg.sweep_kind) {
    case SweepKind::Heatmap: {
      if (cfg.sweep_workers.empty()) throw ConfigError("sweep.workers", "required for heatmap");
      if (cfg.sweep_taus.empty()) throw ConfigError("sweep.taus", "required for heatmap");
      if (!cfg.target_accuracy && !cfg.target_serial_iters) {
        throw ConfigError("target.accuracy",
                          "heatmap needs target.accuracy or target.serial_iters");
      }
      HeatmapSpec spec;
      spec.workers = cfg.sweep_workers;
      spec.taus = cfg.sweep_taus;
      spec.seeds = detail::sweep_seeds(cfg);
      spec.serial_iter_budget = cfg.budget_iters;
      spec.serial_eval_every = cfg.eval_every;
      spec.max_parallel_iters = cfg.budget_parallel_iters.value_or(cfg.budget_iters);
      spec.warm_start_iters = cfg.warm_start;
      spec.target_accuracy = cfg.target_accuracy;
      spec.target_at_serial_iters = cfg.target_serial_iters;
      spec.threads = resolve_threads(cfg);
      const HeatmapResult res = sweep_heatmap(base, spec);

      std::ostringstream body;
      csv::write_heatmap(body, res.grid);
      detail::write_text_file(dir / "heatmap.csv", body.str());
      std::ostringstream runs;
      csv::write_heatmap_runs(runs, res.grid);
      detail::write_text_file(dir / "heatmap_runs.csv", runs.str());
      if (cfg.svg) {
        detail::write_text_file(dir / "heatmap.svg",
                                svg::render_heatmap(res.grid, "zero-overhead speedup"));
      }
      log << "target accuracy " << res.target << "\n";
      for (const auto& [seed, n_a] : res.baselines) {
        log << "seed " << seed << ": N_a = " << n_a << "\n";
      }
      log << "wrote " << (dir / "heatmap.csv").string() << "\n";
      return 0;
    }
    case SweepKind::Overhead: {
      if (cfg.sweep_sync.empty()) throw ConfigError("sweep.sync", "required for overhead");
      if (!cfg.target_accuracy && !cfg.target_serial_iters) {
        throw ConfigError("target.accuracy",
                          "overhead needs target.accuracy or target.serial_iters");
      }
      OverheadSpec spec;
      spec.sync_values = cfg.sweep_sync;
      spec.workers = cfg.workers;
      spec.taus = cfg.sweep_taus.empty() ? kDefaultTaus : cfg.sweep_taus;
      spec.seed = cfg.seed;
      spec.serial_iter_budget = cfg.budget_iters;
      spec.serial_eval_every = cfg.eval_every;
      spec.max_parallel_iters = cfg.budget_parallel_iters.value_or(cfg.budget_iters);
      spec.warm_start_iters = cfg.warm_start;
      spec.target_accuracy = cfg.target_accuracy;
      spec.target_at_serial_iters = cfg.target_serial_iters;
      spec.threads = resolve_threads(cfg);
      const OverheadResult res = sweep_overhead(base, spec);

      std::ostringstream body;
      csv::write_overhead(body, res.points);
      detail::write_text_file(dir / "overhead.csv", body.str());
      if (cfg.svg) {
        detail::write_text_file(
            dir / "overhead.svg",
            svg::render_overhead(res.points, "speedup vs synchronization overhead (K = " +
                                                 std::to_string(cfg.workers) + ")"));
      }
      log << "target accuracy " << res.target << ", N_a = " << res.serial_iters_to_target << "\n";
      for (const TauMeasurement& m : res.measurements) {
        log << "tau " << m.tau << ": "
            << (m.reached ? "M_a = " + std::to_string(m.rounds_to_target) : "target not reached")
            << "\n";
      }
      log << "wrote " << (dir / "overhead.csv").string() << "\n";
      return 0;
    }
    case SweepKind::Tau: {
      if (cfg.sweep_taus.empty()) throw ConfigError("sweep.taus", "required for the tau sweep");
      TauSweepSpec spec;
      spec.taus = cfg.sweep_taus;
      spec.workers = cfg.workers;
      spec.seed = cfg.seed;
      spec.max_parallel_iters = cfg.budget_parallel_iters.value_or(cfg.budget_iters);
      spec.warm_start_iters = cfg.warm_start;
      spec.target_accuracy = cfg.target_accuracy.value_or(2.0);
      spec.threads = resolve_threads(cfg);
      const std::vector<RunTrace> traces = sweep_tau(base, spec);

      std::ostringstream body;
      csv::write_trace(body, traces);
      detail::write_text_file(dir / "tau.csv", body.str());
      if (cfg.svg) {
        detail::write_text_file(
            dir / "tau.svg",
            svg::render_tau_traces(traces, "accuracy vs simulated time (K = " +
                                               std::to_string(cfg.workers) + ")"));
      }
      for (const RunTrace& t : traces) {
        log << "tau " << t.tau << ": "
            << (t.reached() ? "target reached in " + std::to_string(t.records.back().rounds) +
                                  " rounds"
                            : "ran to the budget")
            << "\n";
      }
      log << "wrote " << (dir / "tau.csv").string() << "\n";
      return 0;
    }
  }
  throw std::logic_error("unreachable sweep kind");
}

/// `generate-data`: materializes the configured synthetic dataset as CSV
/// files plus a manifest recording the exact generator inputs. Values are
/// stored scaled by 255 so the CSV loader's fixed p/255 rescale recovers
/// them (to within one rounding).
inline int cmd_generate_data(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.source != DataSource::Synthetic) {
    throw ConfigError("data.source", "generate-data requires data.source = synthetic");
  }
  const ExperimentData data = load_experiment_data(cfg);
  const std::filesystem::path dir = resolve_out_dir(cfg);

  auto dataset_csv = [](const Dataset& ds) {
    std::ostringstream out;
    const std::size_t dim = ds.channels() * ds.height() * ds.width();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      out << ds.labels[i];
      for (std::size_t d = 0; d < dim; ++d) {
        out << ',' << csv::format_double(ds.images[i * dim + d] * 255.0);
      }
      out << '\n';
    }
    return out.str();
  };
  detail::write_text_file(dir / "train.csv", dataset_csv(data.train));
  detail::write_text_file(dir / "test.csv", dataset_csv(data.test));

  std::ostringstream manifest;
  manifest << "data.source = csv\n";
  manifest << "data.train_csv = " << (dir / "train.csv").string() << "\n";
  manifest << "data.test_csv = " << (dir / "test.csv").string() << "\n";
  manifest << "data.classes = " << cfg.classes << "\n";
  manifest << "data.channels = " << cfg.channels << "\n";
  manifest << "data.height = " << cfg.height << "\n";
  manifest << "data.width = " << cfg.width << "\n";
  manifest << "# generator inputs\n";
  manifest << "# data.per_class = " << cfg.per_class << "\n";
  manifest << "# data.val_per_class = " << cfg.val_per_class << "\n";
  manifest << "# data.separation = " << csv::format_double(cfg.separation) << "\n";
  manifest << "# data.seed = " << cfg.data_seed << "\n";
  manifest << "# pixel scale = 255\n";
  detail::write_text_file(dir / "manifest.cfg", manifest.str());

  log << "wrote " << data.train.size() << " train rows and " << data.test.size()
      << " test rows under " << dir.string() << "\n";
  return 0;
}

}  // namespace parasgd
