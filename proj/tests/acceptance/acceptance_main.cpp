// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. The experiment criteria (5, 6, 8) share one desk-scale
// problem; runtime is dominated by those and is tens of minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "parasgd/analysis.hpp"
#include "parasgd/cli.hpp"
#include "parasgd/csv.hpp"
#include "parasgd/data.hpp"
#include "parasgd/experiment.hpp"
#include "parasgd/model.hpp"
#include "parasgd/rng.hpp"
#include "parasgd/schemes.hpp"

using namespace parasgd;

namespace {

struct Harness {
  int failures = 0;
  std::set<std::string> only;

  bool enabled(const std::string& id) const { return only.empty() || only.contains(id); }

  void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %-3s %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }

  void note(const std::string& line) {
    std::printf("       %s\n", line.c_str());
    std::fflush(stdout);
  }
};

double max_tensor_deviation(const WeightCollection& got, const WeightCollection& want) {
  double worst = 0.0;
  for (std::size_t e = 0; e < want.size(); ++e) {
    for (std::size_t t = 0; t < want.entry(e).second.size(); ++t) {
      const NDArray& a = got.entry(e).second[t];
      const NDArray& b = want.entry(e).second[t];
      double scale = 1e-12;
      for (double v : b.values()) scale = std::max(scale, std::abs(v));
      for (std::size_t i = 0; i < b.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
      }
    }
  }
  return worst;
}

// Shared equivalence fixture: an easy two-class problem and a small mlp.
struct EquivalenceFixture {
  Dataset train = generate_synthetic(2, 1, 1, 16, 300, 6.0, 9001, 0);
  Dataset eval = generate_synthetic(2, 1, 1, 16, 60, 6.0, 9001, 1);

  SchemeContext ctx(std::uint64_t seed, std::size_t batch) const {
    SchemeContext c;
    c.net = make_mlp(batch, 1, 1, 16, 2, 8);
    c.train_data = &train;
    c.eval_data = &eval;
    c.batch = batch;
    c.sgd = {0.05, 0.0};
    c.seed = seed;
    c.cost = {1.0, 0.0, 1.0};
    c.target_accuracy = 2.0;
    c.eval_steps = 4;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Criterion 1a: naive(K) matches the serial trajectory step for step.
void criterion_1a(Harness& h) {
  EquivalenceFixture f;
  double worst = 0.0;
  for (int workers : {2, 4}) {
    for (std::uint64_t seed : {11ULL, 12ULL}) {
      std::vector<WeightCollection> serial_w, naive_w;
      SchemeObserver so, no;
      so.on_step = [&](long, const Net& n) { serial_w.push_back(n.get_weights()); };
      no.on_step = [&](long, const Net& n) { naive_w.push_back(n.get_weights()); };
      run_serial(f.ctx(seed, 8), 200, 200, &so);
      run_naive(f.ctx(seed, 8), workers, 200, 200, &no);
      for (std::size_t i = 0; i < 200; ++i) {
        worst = std::max(worst, max_tensor_deviation(naive_w[i], serial_w[i]));
      }
    }
  }
  h.report("1a", worst < 1e-10,
           "naive(K in {2,4}) vs serial, 200 steps, b=8: max relative deviation = " +
               csv::format_double(worst) + " (< 1e-10)");
}

// Criterion 1b: averaging with tau=1 equals serial big-batch SGD on the
// concatenated worker batches.
void criterion_1b(Harness& h) {
  EquivalenceFixture f;
  double worst = 0.0;
  for (int workers : {2, 4}) {
    const std::size_t batch = 8;
    SchemeContext ctx = f.ctx(21, batch);
    std::vector<WeightCollection> rounds;
    SchemeObserver sp;
    sp.on_round = [&](long, const WeightCollection& w) { rounds.push_back(w); };
    run_sparknet(ctx, workers, 1, 100, 0, 1, &sp);

    Net oracle(ctx.net, ctx.seed);
    oracle.set_sgd(ctx.sgd);
    const std::vector<Shard> shards = shard(f.train, workers, ctx.seed);
    std::vector<std::shared_ptr<BatchIterator>> streams;
    for (int k = 0; k < workers; ++k) {
      streams.push_back(make_worker_iterator(shards, k, batch, ctx.seed));
    }
    for (int r = 0; r < 100; ++r) {
      std::vector<double> pixels;
      std::vector<int> labels;
      for (int k = 0; k < workers; ++k) {
        const Batch b = streams[static_cast<std::size_t>(k)]->next();
        pixels.insert(pixels.end(), b.images.values().begin(), b.images.values().end());
        labels.insert(labels.end(), b.labels.begin(), b.labels.end());
      }
      const Batch big{NDArray({batch * static_cast<std::size_t>(workers), 1, 1, 16}, pixels),
                      labels};
      oracle.apply_update(oracle.backward(big));
      worst = std::max(
          worst, max_tensor_deviation(rounds[static_cast<std::size_t>(r)], oracle.get_weights()));
    }
  }
  h.report("1b", worst < 1e-10,
           "averaging(tau=1, K in {2,4}) vs big-batch serial, 100 rounds: max relative "
           "deviation = " +
               csv::format_double(worst) + " (< 1e-10)");
}

// Criterion 1c: K=1 averaging is bit-identical to serial for any tau.
void criterion_1c(Harness& h) {
  EquivalenceFixture f;
  bool identical = true;
  for (const auto& [tau, warm] :
       std::vector<std::pair<int, long>>{{1, 0}, {7, 0}, {50, 0}, {5, 50}}) {
    std::map<long, WeightCollection> serial_at;
    SchemeObserver so;
    so.on_step = [&](long iter, const Net& n) { serial_at.emplace(iter, n.get_weights()); };
    const long rounds = 20;
    run_serial(f.ctx(31, 8), warm + tau * rounds, warm + tau * rounds, &so);

    std::vector<WeightCollection> averaged;
    SchemeObserver sp;
    sp.on_round = [&](long, const WeightCollection& w) { averaged.push_back(w); };
    run_sparknet(f.ctx(31, 8), 1, tau, rounds, warm, 1, &sp);
    for (long r = 1; r <= rounds; ++r) {
      if (!(averaged[static_cast<std::size_t>(r - 1)] == serial_at.at(warm + tau * r))) {
        identical = false;
      }
    }
  }
  h.report("1c", identical,
           "averaging(K=1, tau in {1,7,50}, warm in {0,50}) vs serial: trajectories "
           "bit-identical");
}

// ---------------------------------------------------------------------------
// Criterion 2: reported simulated time equals the closed forms bitwise.
void criterion_2(Harness& h) {
  const Dataset train = generate_synthetic(2, 1, 1, 4, 40, 3.0, 77, 0);
  const Dataset eval = generate_synthetic(2, 1, 1, 4, 12, 3.0, 77, 1);
  Rng rng(4242);
  bool exact = true;
  long checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double c_b = rng.uniform(0.1, 10.0);
    const double s = rng.uniform(0.0, 30.0);
    const int tau = static_cast<int>(1 + rng.below(20));
    const int workers = static_cast<int>(1 + rng.below(4));
    const long iters = static_cast<long>(1 + rng.below(30));
    const long warm = static_cast<long>(rng.below(10));
    const double gamma = trial % 3 == 0 ? rng.uniform(0.3, 1.0) : 1.0;

    SchemeContext ctx;
    ctx.net = make_mlp(4, 1, 1, 4, 2, 3);
    ctx.train_data = &train;
    ctx.eval_data = &eval;
    ctx.batch = 4;
    ctx.sgd = {0.05, 0.0};
    ctx.seed = static_cast<std::uint64_t>(trial);
    ctx.cost = {c_b, s, gamma};
    ctx.target_accuracy = 2.0;
    ctx.eval_steps = 2;

    const RunTrace serial = run_serial(ctx, iters, 7);
    for (const EvalRecord& r : serial.records) {
      exact &= r.sim_time == static_cast<double>(r.serial_iters) * c_b;
      ++checked;
    }
    const RunTrace naive = run_naive(ctx, workers, iters, 7);
    const double part = gamma == 1.0
                            ? c_b / static_cast<double>(workers)
                            : c_b * std::pow(1.0 / static_cast<double>(workers), gamma);
    for (const EvalRecord& r : naive.records) {
      exact &= r.sim_time == static_cast<double>(r.serial_iters) * (part + s);
      ++checked;
    }
    const long rounds = static_cast<long>(1 + rng.below(6));
    const RunTrace avg = run_sparknet(ctx, workers, tau, rounds, warm);
    for (const EvalRecord& r : avg.records) {
      exact &= r.sim_time ==
               static_cast<double>(warm) * c_b +
                   static_cast<double>(r.rounds) * (static_cast<double>(tau) * c_b + s);
      ++checked;
    }
  }
  h.report("2", exact && checked > 500,
           "randomized cost models: " + std::to_string(checked) +
               " evaluation records match the closed-form clock bitwise");
}

// Criterion 3: formula values with the published cluster constants.
void criterion_3(Harness& h) {
  const double measured = naive_speedup(2.0, 5, 20.0);
  const double expected = 0.098039215686274508;
  bool ok = std::abs(measured - expected) <= 1e-9;

  Rng rng(515);
  for (int trial = 0; trial < 500; ++trial) {
    const double c_b = rng.uniform(0.1, 10.0);
    const int workers = static_cast<int>(1 + rng.below(64));
    const double s = c_b * rng.uniform(1.0, 10.0);  // S >= C(b)
    ok &= naive_speedup(c_b, workers, s) < 1.0;
    ok &= naive_speedup(c_b, workers, s) <= c_b / s + 1e-15;
  }
  h.report("3", ok,
           "naive_speedup(C=2, K=5, S=20) = " + csv::format_double(measured) +
               " (reference 0.0980392...; +-1e-9); below 1 whenever S >= C(b) over 500 draws");
}

// ---------------------------------------------------------------------------
// Criterion 4: finite-difference gradient checks across layer kinds.
void criterion_4(Harness& h) {
  Rng rng(616);
  double worst = 0.0;
  int instances = 0;

  auto check = [&](const NetSpec& spec, std::uint64_t seed, std::size_t n, std::size_t c,
                   std::size_t hh, std::size_t w, int classes) {
    Net net(spec, seed);
    NDArray images({n, c, hh, w});
    for (double& v : images.values()) v = rng.uniform(-1.0, 1.0);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    const Batch batch{std::move(images), std::move(labels)};

    const WeightCollection analytic = net.backward(batch);
    const WeightCollection original = net.get_weights();
    const double step = 1e-5;
    for (std::size_t e = 0; e < original.size(); ++e) {
      for (std::size_t t = 0; t < original.entry(e).second.size(); ++t) {
        for (std::size_t i = 0; i < original.entry(e).second[t].size(); ++i) {
          WeightCollection probe = original;
          probe.entry(e).second[t][i] += step;
          net.set_weights(probe);
          const double up = net.forward(batch).loss;
          probe.entry(e).second[t][i] -= 2.0 * step;
          net.set_weights(probe);
          const double down = net.forward(batch).loss;
          const double fd = (up - down) / (2.0 * step);
          const double g = analytic.entry(e).second[t][i];
          const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-5});
          worst = std::max(worst, rel);
        }
      }
    }
    net.set_weights(original);
    ++instances;
  };

  for (std::uint64_t s = 0; s < 7; ++s) {
    NetSpec conv_relu;
    conv_relu.layers = {data_layer("data", 2, 2, 6, 6),    label_layer("label", 2),
                        conv_layer("c1", "data", 3, 3, 2), relu_layer("r1", "c1"),
                        linear_layer("fc", "r1", 3),
                        softmax_loss_layer("loss", "fc", "label")};
    conv_relu.validate();
    check(conv_relu, 100 + s, 2, 2, 6, 6, 3);

    NetSpec conv_pool;
    conv_pool.layers = {data_layer("data", 2, 1, 8, 8),    label_layer("label", 2),
                        conv_layer("c1", "data", 3, 3, 2), pool_layer("p1", "c1", 2, 2, 2, 2),
                        conv_layer("c2", "p1", 2, 2, 3),   linear_layer("fc", "c2", 2),
                        softmax_loss_layer("loss", "fc", "label")};
    conv_pool.validate();
    check(conv_pool, 200 + s, 2, 1, 8, 8, 2);

    check(make_mlp(3, 1, 1, 10, 4, 6), 300 + s, 3, 1, 1, 10, 4);
  }

  h.report("4", worst < 1e-5 && instances >= 20,
           std::to_string(instances) +
               " random micro-instances covering conv, pool, relu, linear and the loss: max "
               "relative error vs central differences = " +
               csv::format_double(worst) + " (< 1e-5)");
}

// ---------------------------------------------------------------------------
// Shared desk-scale experiment for criteria 5, 6 and 8.
struct DeskScale {
  // 10 classes x 550 train examples (5500 >= 5000), fixed dataset across
  // run seeds; lenet-small at b=50.
  Dataset train = generate_synthetic(10, 1, 16, 16, 550, 2.0, 12345, 0);
  Dataset eval = generate_synthetic(10, 1, 16, 16, 100, 2.0, 12345, 1);
  std::vector<std::uint64_t> seeds{1, 2, 3};
  long serial_budget = 4000;
  long serial_eval_every = 25;
  long derive_at = 2000;
  long cell_budget = 12000;  // parallel iterations per cell
  long warm = 50;
  double lr = 0.05;

  SchemeContext base() const {
    SchemeContext c;
    c.net = make_lenet_small(50, 1, 16, 16, 10);
    c.train_data = &train;
    c.eval_data = &eval;
    c.batch = 50;
    c.sgd = {lr, 0.0};
    c.seed = seeds[0];
    c.cost = {1.0, 0.0, 1.0};
    c.target_accuracy = 2.0;
    c.eval_steps = 20;
    return c;
  }

  HeatmapSpec grid_spec(std::vector<int> workers, std::vector<int> taus) const {
    HeatmapSpec spec;
    spec.workers = std::move(workers);
    spec.taus = std::move(taus);
    spec.seeds = seeds;
    spec.serial_iter_budget = serial_budget;
    spec.serial_eval_every = serial_eval_every;
    spec.max_parallel_iters = cell_budget;
    spec.warm_start_iters = warm;
    spec.target_at_serial_iters = derive_at;
    spec.threads = 1;
    return spec;
  }
};

// Criterion 5: heatmap trend reproduction.
std::optional<HeatmapResult> criterion_5(Harness& h, const DeskScale& desk) {
  std::optional<HeatmapResult> result;
  try {
    result = sweep_heatmap(desk.base(), desk.grid_spec({1, 2, 4}, {1, 10, 50, 100}));
  } catch (const std::exception& e) {
    h.report("5", false, std::string("heatmap sweep aborted: ") + e.what());
    return std::nullopt;
  }
  const SweepGrid& grid = result->grid;
  h.note("derived target accuracy " + csv::format_double(result->target) +
         " (median serial accuracy at iteration " + std::to_string(desk.derive_at) + ")");
  for (const auto& [seed, n_a] : result->baselines) {
    h.note("seed " + std::to_string(seed) + ": N_a = " + std::to_string(n_a));
  }
  for (std::size_t ki = 0; ki < grid.workers.size(); ++ki) {
    std::string row = "K=" + std::to_string(grid.workers[ki]) + ":";
    for (std::size_t ti = 0; ti < grid.taus.size(); ++ti) {
      const SpeedupPoint& p = grid.cell(ki, ti);
      row += "  tau=" + std::to_string(p.tau) + " " +
             (p.reached ? csv::format_double(p.speedup) : std::string("n/a"));
    }
    h.note(row);
  }

  bool k1_row_ok = true;
  for (std::size_t ti = 0; ti < grid.taus.size(); ++ti) {
    const SpeedupPoint& p = grid.cell(0, ti);
    k1_row_ok &= p.reached && p.speedup >= 0.7 && p.speedup <= 1.3;
  }
  const SpeedupPoint& k1_tau10 = grid.cell(0, 1);
  const SpeedupPoint& k4_tau10 = grid.cell(2, 1);
  const bool scaling_ok =
      k1_tau10.reached && k4_tau10.reached && k4_tau10.speedup >= 1.3 * k1_tau10.speedup;
  bool k4_all_reached = true;
  for (std::size_t ti = 0; ti < grid.taus.size(); ++ti) {
    k4_all_reached &= grid.cell(2, ti).reached;
  }

  std::ostringstream detail;
  detail << "(i) K=1 row in [0.7,1.3]: " << (k1_row_ok ? "yes" : "NO")
         << "; (ii) K=4 vs K=1 at tau=10: " << csv::format_double(k4_tau10.speedup) << " vs "
         << csv::format_double(k1_tau10.speedup) << " (ratio "
         << csv::format_double(k1_tau10.speedup > 0 ? k4_tau10.speedup / k1_tau10.speedup : 0.0)
         << " >= 1.3): " << (scaling_ok ? "yes" : "NO")
         << "; (iii) K=4 row all reached: " << (k4_all_reached ? "yes" : "NO");
  h.report("5", k1_row_ok && scaling_ok && k4_all_reached, detail.str());
  return result;
}

// Criterion 6: overhead curves from the K=4 measurements over the published
// tau set. Curve uses the median N_a across seeds and per-tau median M_a
// over the seeds that reached the target (>= 2 of 3 seeds).
void criterion_6(Harness& h, const DeskScale& desk, const HeatmapResult& c5) {
  std::optional<HeatmapResult> extra;
  try {
    extra = sweep_heatmap(desk.base(), desk.grid_spec({4}, {2, 5, 25, 500, 1000, 2500}));
  } catch (const std::exception& e) {
    h.report("6", false, std::string("extra tau runs aborted: ") + e.what());
    return;
  }

  std::vector<long> n_as;
  for (const auto& [seed, n_a] : c5.baselines) n_as.push_back(n_a);
  std::sort(n_as.begin(), n_as.end());
  const long n_a = n_as[(n_as.size() - 1) / 2];

  auto tau_median = [](const SweepGrid& grid, int workers_value) {
    std::map<int, std::vector<long>> by_tau;
    for (const SpeedupPoint& p : grid.runs) {
      if (p.workers == workers_value && p.reached) by_tau[p.tau].push_back(p.rounds_to_target);
    }
    std::vector<TauMeasurement> out;
    for (auto& [tau, rounds] : by_tau) {
      if (rounds.size() < 2) continue;
      std::sort(rounds.begin(), rounds.end());
      out.push_back({tau, rounds[(rounds.size() - 1) / 2], true});
    }
    return out;
  };

  std::vector<TauMeasurement> measurements = tau_median(c5.grid, 4);
  for (const TauMeasurement& m : tau_median(extra->grid, 4)) measurements.push_back(m);
  std::sort(measurements.begin(), measurements.end(),
            [](const TauMeasurement& a, const TauMeasurement& b) { return a.tau < b.tau; });
  for (const TauMeasurement& m : measurements) {
    h.note("tau=" + std::to_string(m.tau) + ": M_a = " + std::to_string(m.rounds_to_target) +
           " (median)");
  }
  if (measurements.empty()) {
    h.report("6", false, "no tau measurement reached the target");
    return;
  }

  const std::vector<double> sync_values{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  const std::vector<OverheadPoint> curve =
      compute_overhead_curves(n_a, measurements, 4, sync_values);

  auto at = [&](double s) {
    for (const OverheadPoint& p : curve) {
      if (p.sync_seconds == s) return p;
    }
    return OverheadPoint{};
  };
  const OverheadPoint p1 = at(1.0), p10 = at(10.0), p100 = at(100.0);
  const bool naive_dies = p10.naive < 0.5;
  const bool averaging_survives = p10.sparknet >= 1.0;
  const bool retains_half = p100.sparknet >= 0.5 * p1.sparknet;

  std::ostringstream detail;
  detail << "N_a=" << n_a << "; naive(S=10C)=" << csv::format_double(p10.naive)
         << " (< 0.5): " << (naive_dies ? "yes" : "NO")
         << "; best-tau averaging(S=10C)=" << csv::format_double(p10.sparknet)
         << " (>= 1.0): " << (averaging_survives ? "yes" : "NO") << "; S=100C retains "
         << csv::format_double(p100.sparknet) << "/" << csv::format_double(p1.sparknet) << " = "
         << csv::format_double(p1.sparknet > 0 ? p100.sparknet / p1.sparknet : 0.0)
         << " (>= 0.5): " << (retains_half ? "yes" : "NO");
  h.report("6", naive_dies && averaging_survives && retains_half, detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 7: CLI commands are byte-deterministic given a config.
void criterion_7(Harness& h) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "parasgd_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  bool ok = true;
  std::string detail;
  for (const std::string mode : {"train", "generate-data"}) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (mode + std::to_string(rep));
      const fs::path cfg_path = root / (mode + ".cfg");
      std::ofstream cfg(cfg_path);
      cfg << "data.source = synthetic\ndata.classes = 2\ndata.height = 1\ndata.width = 16\n"
             "data.per_class = 120\ndata.val_per_class = 30\ndata.separation = 6\n"
             "data.seed = 5\nnet.preset = mlp\nnet.hidden = 4\nsgd.batch = 10\n"
             "sgd.learning_rate = 0.1\nsgd.warm_start = 0\nseed = 2\neval.every = 5\n"
             "eval.steps = 6\nscheme = sparknet\nscheme.workers = 2\nscheme.tau = 5\n"
             "budget.parallel_iters = 200\ntarget.accuracy = 0.9\nout.dir = "
          << dir.string() << "\n";
      cfg.close();
      std::ostringstream log, err;
      const int code = run_cli({mode, "--config", cfg_path.string()}, log, err);
      if (code != 0) {
        ok = false;
        detail = mode + " exited with " + std::to_string(code) + ": " + err.str();
      }
      const fs::path artifact = dir / (mode == "train" ? "trace.csv" : "train.csv");
      outputs.push_back(slurp(artifact));
    }
    if (outputs[0] != outputs[1] || outputs[0].empty()) {
      ok = false;
      detail = mode + " outputs differ between identical runs";
    }
  }
  fs::remove_all(root);
  h.report("7", ok, ok ? "train and generate-data rerun byte-identically" : detail);
}

// Criterion 8: the absolute large-scale wall-clock benchmarks are out of
// scope at desk scale (see the README scope note); the asserted property is
// that infrequent synchronization still reaches the target: tau in
// {10,50,100} at K=5 all train to the criterion-5 target.
void criterion_8(Harness& h, const DeskScale& desk, const HeatmapResult& c5) {
  SchemeContext ctx = desk.base();
  ctx.target_accuracy = c5.target;
  TauSweepSpec spec;
  spec.taus = {10, 50, 100};
  spec.workers = 5;
  spec.seed = desk.seeds[0];
  spec.max_parallel_iters = desk.cell_budget;
  spec.warm_start_iters = desk.warm;
  spec.target_accuracy = c5.target;
  spec.threads = 1;

  std::vector<RunTrace> traces;
  try {
    traces = sweep_tau(ctx, spec);
  } catch (const std::exception& e) {
    h.report("8", false, std::string("tau sweep aborted: ") + e.what());
    return;
  }
  bool all = true;
  std::ostringstream detail;
  detail << "K=5, target " << csv::format_double(c5.target) << ":";
  for (const RunTrace& t : traces) {
    all &= t.reached();
    detail << " tau=" << t.tau << " "
           << (t.reached() ? "reached in " + std::to_string(t.records.back().rounds) + " rounds"
                           : "NOT reached")
           << ";";
  }
  detail << " absolute large-scale wall-clock numbers are excluded by design";
  h.report("8", all, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  Harness h;
  for (int i = 1; i < argc; ++i) h.only.insert(argv[i]);

  const auto t0 = std::chrono::steady_clock::now();
  if (h.enabled("1a")) criterion_1a(h);
  if (h.enabled("1b")) criterion_1b(h);
  if (h.enabled("1c")) criterion_1c(h);
  if (h.enabled("2")) criterion_2(h);
  if (h.enabled("3")) criterion_3(h);
  if (h.enabled("4")) criterion_4(h);

  const bool need_desk = h.enabled("5") || h.enabled("6") || h.enabled("8");
  if (need_desk) {
    DeskScale desk;
    const std::optional<HeatmapResult> c5 = criterion_5(h, desk);
    if (c5) {
      if (h.enabled("6")) criterion_6(h, desk, *c5);
      if (h.enabled("8")) criterion_8(h, desk, *c5);
    } else {
      if (h.enabled("6")) h.report("6", false, "skipped: criterion 5 measurements unavailable");
      if (h.enabled("8")) h.report("8", false, "skipped: criterion 5 measurements unavailable");
    }
  }
  if (h.enabled("7")) criterion_7(h);

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s (%d failure%s, %.0f s)\n", h.failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
              h.failures, h.failures == 1 ? "" : "s", secs);
  return h.failures == 0 ? 0 : 1;
}
