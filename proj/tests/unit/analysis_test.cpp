#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "parasgd/analysis.hpp"
#include "parasgd/data.hpp"
#include "test_helpers.hpp"

using namespace parasgd;

namespace {

SchemeContext quick_ctx(const Dataset& train, const Dataset& eval) {
  SchemeContext c;
  c.net = make_mlp(10, 1, 1, 16, 2, 4);
  c.train_data = &train;
  c.eval_data = &eval;
  c.batch = 10;
  c.sgd = {0.1, 0.0};
  c.seed = 1;
  c.cost = {1.0, 0.0, 1.0};
  c.target_accuracy = 2.0;
  c.eval_steps = 4;
  return c;
}

}  // namespace

TEST_CASE("naive speedup formula", "[analysis]") {
  REQUIRE(naive_speedup(1.0, 5, 0.0) == 5.0);
  REQUIRE(naive_speedup(2.0, 5, 20.0) == Approx(2.0 / 20.4).epsilon(1e-12));

  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const double c = rng.uniform(0.1, 10.0);
    const int k = static_cast<int>(1 + rng.below(16));
    const double s = rng.uniform(0.0, 10.0);
    const double v = naive_speedup(c, k, s);
    REQUIRE(v > 0.0);
    if (s > 0.0) REQUIRE(v <= c / s);
    if (s >= c) REQUIRE(v < 1.0 + 1e-12);
    // Strictly decreasing in S, strictly increasing in K.
    REQUIRE(v > naive_speedup(c, k, s + 0.5));
    REQUIRE(naive_speedup(c, k + 1, s) > v);
  }
  REQUIRE_THROWS_AS(naive_speedup(0.0, 2, 1.0), std::invalid_argument);
}

TEST_CASE("averaging-scheme speedup formula", "[analysis]") {
  REQUIRE(sparknet_speedup(10000, 1.0, 50, 20.0, 40) == Approx(10000.0 / (70.0 * 40.0)).epsilon(1e-12));

  // S=0 reduces to the zero-overhead ratio N_a / (tau * M_a).
  REQUIRE(sparknet_speedup(1200, 2.0, 10, 0.0, 30) == Approx(1200.0 / 300.0).epsilon(1e-12));

  // With tau*M_a = N_a (the single-worker identity) the speedup is
  // tau*C / (tau*C + S) <= 1.
  const double v = sparknet_speedup(500, 2.0, 50, 20.0, 10);
  REQUIRE(v == Approx(50.0 * 2.0 / (50.0 * 2.0 + 20.0)).epsilon(1e-12));
  REQUIRE(v <= 1.0);

  Rng rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const double n = rng.uniform(100.0, 10000.0);
    const double m = rng.uniform(1.0, 100.0);
    const double tau = rng.uniform(1.0, 100.0);
    const double s = rng.uniform(0.0, 50.0);
    REQUIRE(sparknet_speedup(n, 1.0, tau, s, m) >
            sparknet_speedup(n, 1.0, tau, s + 1.0, m));  // decreasing in S
  }
}

TEST_CASE("best tau maximization", "[analysis]") {
  SECTION("single record") {
    const std::vector<TauMeasurement> one{{50, 40, true}};
    const BestTau best = best_tau_speedup(one, 10000, 1.0, 20.0);
    REQUIRE(best.tau == 50);
    REQUIRE(best.speedup == Approx(10000.0 / (70.0 * 40.0)));
  }
  SECTION("ties prefer the smaller tau") {
    // With S=8: tau=1,M=10 gives N/((1+8)*10) = N/90; tau=2,M=9 gives N/90.
    const std::vector<TauMeasurement> tied{{2, 9, true}, {1, 10, true}};
    const BestTau best = best_tau_speedup(tied, 900, 1.0, 8.0);
    REQUIRE(best.speedup == Approx(10.0));
    REQUIRE(best.tau == 1);
  }
  SECTION("a superset never loses") {
    Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<TauMeasurement> all;
      for (int t : {1, 2, 5, 10, 25, 100, 500, 1000, 2500}) {
        all.push_back({t, static_cast<long>(1 + rng.below(200)), true});
      }
      const std::vector<TauMeasurement> sub(all.begin(), all.begin() + 4);
      const double s = rng.uniform(0.0, 100.0);
      REQUIRE(best_tau_speedup(all, 5000, 1.0, s).speedup >=
              best_tau_speedup(sub, 5000, 1.0, s).speedup);
    }
  }
  SECTION("unreached measurements are skipped") {
    const std::vector<TauMeasurement> mixed{{1, 0, false}, {5, 10, true}};
    REQUIRE(best_tau_speedup(mixed, 100, 1.0, 0.0).tau == 5);
    const std::vector<TauMeasurement> none{{1, 0, false}};
    REQUIRE(best_tau_speedup(none, 100, 1.0, 0.0).tau == -1);
  }
}

TEST_CASE("overhead curves", "[analysis]") {
  const std::vector<TauMeasurement> ms{{1, 100, true}, {10, 12, true}, {100, 2, true}};
  const std::vector<double> sync{0.0, 1.0, 10.0, 100.0};
  const std::vector<OverheadPoint> pts = compute_overhead_curves(1000, ms, 5, sync);
  REQUIRE(pts.size() == 4);
  REQUIRE(pts[0].naive == 5.0);  // S=0 -> exactly K
  REQUIRE(pts[1].naive < 1.0);   // S=C(b) -> below one
  for (std::size_t i = 1; i < pts.size(); ++i) {
    REQUIRE(pts[i].naive < pts[i - 1].naive);
    REQUIRE(pts[i].sparknet <= pts[i - 1].sparknet);
  }
  // Every sparknet point is reproducible from its chosen tau's measurement.
  for (const OverheadPoint& p : pts) {
    for (const TauMeasurement& m : ms) {
      if (m.tau == p.best_tau) {
        REQUIRE(p.sparknet == Approx(sparknet_speedup(1000, 1.0, m.tau, p.sync_seconds,
                                                      static_cast<double>(m.rounds_to_target))));
      }
    }
  }
}

TEST_CASE("heatmap sweep on a tiny problem", "[analysis]") {
  const Dataset train = generate_synthetic(2, 1, 1, 16, 150, 6.0, 301);
  const Dataset eval = generate_synthetic(2, 1, 1, 16, 20, 6.0, 301, 1);
  const SchemeContext base = quick_ctx(train, eval);

  SECTION("single-cell grid has speedup near one and reproducible values") {
    HeatmapSpec spec;
    spec.workers = {1};
    spec.taus = {1, 5};
    spec.seeds = {3, 4, 5};
    spec.serial_iter_budget = 400;
    spec.serial_eval_every = 5;
    spec.max_parallel_iters = 800;
    spec.warm_start_iters = 0;
    spec.target_accuracy = 0.9;
    const HeatmapResult res = sweep_heatmap(base, spec);
    REQUIRE(res.grid.cells.size() == 2);
    REQUIRE(res.grid.runs.size() == 6);
    for (const SpeedupPoint& cell : res.grid.cells) {
      REQUIRE(cell.reached);
      REQUIRE(cell.speedup == static_cast<double>(cell.serial_iters_to_target) /
                                  (static_cast<double>(cell.tau) *
                                   static_cast<double>(cell.rounds_to_target)));
      REQUIRE(cell.speedup > 0.5);
      REQUIRE(cell.speedup < 2.0);
    }
    for (const auto& [seed, n_a] : res.baselines) REQUIRE(n_a >= 1);
  }

  SECTION("derived target comes from the baseline curve") {
    HeatmapSpec spec;
    spec.workers = {1};
    spec.taus = {1};
    spec.seeds = {3};
    spec.serial_iter_budget = 400;
    spec.serial_eval_every = 5;
    spec.max_parallel_iters = 800;
    spec.warm_start_iters = 0;
    spec.target_at_serial_iters = 100;
    const HeatmapResult res = sweep_heatmap(base, spec);
    REQUIRE(res.target > 0.5);
    REQUIRE(res.target <= 1.0);
  }

  SECTION("an unreachable baseline target aborts with a diagnostic") {
    const Dataset flat_train = generate_synthetic(2, 1, 1, 16, 150, 0.0, 301);
    const Dataset flat_eval = generate_synthetic(2, 1, 1, 16, 20, 0.0, 301, 1);
    SchemeContext hopeless = quick_ctx(flat_train, flat_eval);
    HeatmapSpec spec;
    spec.workers = {1};
    spec.taus = {1};
    spec.seeds = {3};
    spec.serial_iter_budget = 20;
    spec.serial_eval_every = 5;
    spec.max_parallel_iters = 40;
    spec.target_accuracy = 0.999999;
    REQUIRE_THROWS_AS(sweep_heatmap(hopeless, spec), std::runtime_error);
  }
}

TEST_CASE("overhead sweep on a tiny problem", "[analysis]") {
  const Dataset train = generate_synthetic(2, 1, 1, 16, 150, 6.0, 303);
  const Dataset eval = generate_synthetic(2, 1, 1, 16, 20, 6.0, 303, 1);
  OverheadSpec spec;
  spec.sync_values = {0.0, 1.0, 4.0};
  spec.workers = 2;
  spec.taus = {1, 5};
  spec.seed = 6;
  spec.serial_iter_budget = 400;
  spec.serial_eval_every = 5;
  spec.max_parallel_iters = 800;
  spec.warm_start_iters = 0;
  spec.target_accuracy = 0.9;
  const OverheadResult res = sweep_overhead(quick_ctx(train, eval), spec);
  REQUIRE(res.points.size() == 3);
  REQUIRE(res.points[0].naive == 2.0);
  REQUIRE(res.measurements.size() == 2);
  for (const TauMeasurement& m : res.measurements) REQUIRE(m.reached);
}

TEST_CASE("tau sweep shares the warm start across taus", "[analysis]") {
  const Dataset train = generate_synthetic(2, 1, 1, 16, 150, 6.0, 305);
  const Dataset eval = generate_synthetic(2, 1, 1, 16, 20, 6.0, 305, 1);
  TauSweepSpec spec;
  spec.taus = {1, 5, 10};
  spec.workers = 2;
  spec.seed = 8;
  spec.max_parallel_iters = 100;
  spec.warm_start_iters = 10;
  const std::vector<RunTrace> traces = sweep_tau(quick_ctx(train, eval), spec);
  REQUIRE(traces.size() == 3);
  for (const RunTrace& t : traces) {
    REQUIRE(t.warm_digest == traces[0].warm_digest);
    double prev = 0.0;
    for (const EvalRecord& r : t.records) {
      REQUIRE(r.sim_time > prev);
      prev = r.sim_time;
    }
  }
}

TEST_CASE("first reach extraction", "[analysis]") {
  RunTrace t;
  t.records = {{10, 0, 0, 10.0, 0.2}, {20, 0, 0, 20.0, 0.5}, {30, 0, 0, 30.0, 0.4}};
  REQUIRE(first_reach(t, 0.5)->serial_iters == 20);
  REQUIRE(first_reach(t, 0.45)->serial_iters == 20);
  REQUIRE_FALSE(first_reach(t, 0.9).has_value());
}
