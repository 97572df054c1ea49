#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/schemes.hpp"
#include "parasgd/threadpool.hpp"

namespace parasgd {

/// Speedup of splitting every minibatch across K machines when one batch
/// costs C(b) and one synchronization costs S: C(b) / (C(b)/K + S). Bounded
/// above by C(b)/S, and below 1 whenever S >= C(b).
inline double naive_speedup(double compute_seconds, int workers, double sync_seconds) {
  if (!(compute_seconds > 0.0)) throw std::invalid_argument("naive_speedup: C(b) must be > 0");
  if (workers < 1) throw std::invalid_argument("naive_speedup: K must be >= 1");
  if (sync_seconds < 0.0) throw std::invalid_argument("naive_speedup: S must be >= 0");
  return compute_seconds / (compute_seconds / static_cast<double>(workers) + sync_seconds);
}

/// Speedup of the averaging scheme relative to serial training:
/// N_a * C(b) / ((tau * C(b) + S) * M_a). At S=0 this reduces to the
/// zero-overhead ratio N_a / (tau * M_a).
inline double sparknet_speedup(double serial_iters_to_target, double compute_seconds, double tau,
                               double sync_seconds, double rounds_to_target) {
  if (!(serial_iters_to_target > 0.0) || !(compute_seconds > 0.0) || !(tau > 0.0) ||
      !(rounds_to_target > 0.0) || sync_seconds < 0.0) {
    throw std::invalid_argument("sparknet_speedup: inputs must be positive (S may be zero)");
  }
  return serial_iters_to_target * compute_seconds /
         ((tau * compute_seconds + sync_seconds) * rounds_to_target);
}

/// One measured (tau, rounds-to-target) pair.
struct TauMeasurement {
  int tau = 0;
  long rounds_to_target = 0;  // M_a; meaningful when reached
  bool reached = true;
};

struct BestTau {
  int tau = -1;
  double speedup = 0.0;
};

/// Maximizes sparknet_speedup over the provided measurements; ties prefer
/// the smaller tau. Unreached measurements are skipped; if nothing reached
/// the result keeps tau = -1 and speedup 0.
inline BestTau best_tau_speedup(std::span<const TauMeasurement> measurements,
                                long serial_iters_to_target, double compute_seconds,
                                double sync_seconds) {
  if (measurements.empty()) throw std::invalid_argument("best_tau_speedup: no measurements");
  BestTau best;
  for (const TauMeasurement& m : measurements) {
    if (!m.reached) continue;
    const double s =
        sparknet_speedup(static_cast<double>(serial_iters_to_target), compute_seconds,
                         static_cast<double>(m.tau), sync_seconds,
                         static_cast<double>(m.rounds_to_target));
    if (s > best.speedup || (s == best.speedup && best.tau != -1 && m.tau < best.tau)) {
      best = {m.tau, s};
    }
  }
  return best;
}

inline std::optional<EvalRecord> first_reach(const RunTrace& trace, double accuracy) {
  for (const EvalRecord& r : trace.records) {
    if (r.accuracy >= accuracy) return r;
  }
  return std::nullopt;
}

/// One grid cell (or one per-seed run) of a sweep, carrying every raw
/// quantity its speedup was computed from.
struct SpeedupPoint {
  int workers = 1;
  int tau = 1;
  double sync_seconds = 0.0;
  double compute_seconds = 1.0;
  std::uint64_t seed = 0;
  long serial_iters_to_target = 0;  // N_a for this seed
  long rounds_to_target = -1;       // M_a; -1 when never reached
  bool reached = false;
  double speedup = 0.0;  // N_a / (tau * M_a); 0 when not reached
};

/// Complete K x tau grid: `cells` holds one aggregated point per grid square
/// (workers-major), `runs` every underlying per-seed run.
struct SweepGrid {
  std::vector<int> workers;
  std::vector<int> taus;
  double target = 0.0;
  std::vector<SpeedupPoint> cells;
  std::vector<SpeedupPoint> runs;

  const SpeedupPoint& cell(std::size_t worker_index, std::size_t tau_index) const {
    return cells.at(worker_index * taus.size() + tau_index);
  }
};

struct HeatmapSpec {
  std::vector<int> workers;
  std::vector<int> taus;
  std::vector<std::uint64_t> seeds;
  long serial_iter_budget = 0;
  long serial_eval_every = 10;
  long max_parallel_iters = 0;  // per-cell budget; rounds = ceil(of this / tau)
  long warm_start_iters = 0;
  std::optional<double> target_accuracy;       // fixed target, or
  std::optional<long> target_at_serial_iters;  // derived from the baselines
  int threads = 1;
};

struct HeatmapResult {
  SweepGrid grid;
  double target = 0.0;
  std::vector<std::pair<std::uint64_t, long>> baselines;  // seed -> N_a
  std::vector<RunTrace> serial_traces;
};

namespace detail {

// Lower median: with an odd count this is the true median and is always an
// actually observed value.
template <class T>
T lower_median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline long rounds_budget(long max_parallel_iters, int tau) {
  return (max_parallel_iters + tau - 1) / tau;
}

// Serial baselines run with early stopping disabled so both the target
// derivation and N_a can be read off the full curve.
inline RunTrace baseline_trace(const SchemeContext& base, std::uint64_t seed, long budget,
                               long eval_every) {
  SchemeContext ctx = base;
  ctx.seed = seed;
  ctx.target_accuracy = 2.0;
  return run_serial(ctx, budget, eval_every);
}

// Robust read of "the accuracy reached around iteration X": the median
// accuracy over the evaluations within +-10% of X. A single evaluation
// there would make the derived target hostage to one noisy draw.
inline double accuracy_at_iters(const RunTrace& trace, long iters) {
  const long window = iters / 10;
  std::vector<double> near;
  bool past = false;
  for (const EvalRecord& r : trace.records) {
    if (r.serial_iters >= iters - window && r.serial_iters <= iters + window) {
      near.push_back(r.accuracy);
    }
    past |= r.serial_iters >= iters;
  }
  if (!past || near.empty()) {
    throw std::runtime_error("sweep: serial budget smaller than the target-derivation point");
  }
  return lower_median(near);
}

}  // namespace detail

/// Grid of averaging-scheme runs over (K, tau) at a fixed batch size and
/// target accuracy, with one serial baseline per seed. Each cell's value is
/// the zero-overhead speedup N_a / (tau * M_a); cells that never reach the
/// target are marked rather than zeroed. With several seeds a cell reports
/// the run with the median speedup, so its stored raw values always
/// reproduce its stored speedup.
inline HeatmapResult sweep_heatmap(const SchemeContext& base, const HeatmapSpec& spec) {
  if (spec.workers.empty() || spec.taus.empty() || spec.seeds.empty()) {
    throw std::invalid_argument("heatmap: worker, tau and seed axes must be nonempty");
  }
  if (spec.serial_iter_budget < 1 || spec.max_parallel_iters < 1) {
    throw std::invalid_argument("heatmap: budgets must be >= 1");
  }
  if (!spec.target_accuracy && !spec.target_at_serial_iters) {
    throw std::invalid_argument("heatmap: no target accuracy and no derivation point");
  }

  HeatmapResult result;
  ThreadPool pool(spec.threads);

  // Per-seed serial baselines.
  result.serial_traces.resize(spec.seeds.size());
  {
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
      jobs.emplace_back([&, i] {
        result.serial_traces[i] = detail::baseline_trace(base, spec.seeds[i],
                                                         spec.serial_iter_budget,
                                                         spec.serial_eval_every);
      });
    }
    pool.run_all(std::move(jobs));
  }

  double target = 0.0;
  if (spec.target_accuracy) {
    target = *spec.target_accuracy;
  } else {
    std::vector<double> at;
    at.reserve(spec.seeds.size());
    for (const RunTrace& t : result.serial_traces) {
      at.push_back(detail::accuracy_at_iters(t, *spec.target_at_serial_iters));
    }
    target = detail::lower_median(at);
  }
  result.target = target;

  for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
    const std::optional<EvalRecord> hit = first_reach(result.serial_traces[i], target);
    if (!hit) {
      throw std::runtime_error("heatmap: serial baseline for seed " +
                               std::to_string(spec.seeds[i]) + " did not reach target " +
                               std::to_string(target) + " within " +
                               std::to_string(spec.serial_iter_budget) + " iterations");
    }
    result.baselines.emplace_back(spec.seeds[i], hit->serial_iters);
  }

  SweepGrid& grid = result.grid;
  grid.workers = spec.workers;
  grid.taus = spec.taus;
  grid.target = target;
  grid.runs.resize(spec.seeds.size() * spec.workers.size() * spec.taus.size());

  std::vector<std::function<void()>> jobs;
  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    for (std::size_t ki = 0; ki < spec.workers.size(); ++ki) {
      for (std::size_t ti = 0; ti < spec.taus.size(); ++ti) {
        const std::size_t slot = (si * spec.workers.size() + ki) * spec.taus.size() + ti;
        jobs.emplace_back([&, si, ki, ti, slot] {
          SchemeContext ctx = base;
          ctx.seed = spec.seeds[si];
          ctx.target_accuracy = target;
          const int tau = spec.taus[ti];
          const RunTrace trace =
              run_sparknet(ctx, spec.workers[ki], tau,
                           detail::rounds_budget(spec.max_parallel_iters, tau),
                           spec.warm_start_iters);
          SpeedupPoint p;
          p.workers = spec.workers[ki];
          p.tau = tau;
          p.sync_seconds = base.cost.sync_seconds;
          p.compute_seconds = base.cost.compute_seconds;
          p.seed = spec.seeds[si];
          p.serial_iters_to_target = result.baselines[si].second;
          const std::optional<EvalRecord> hit = first_reach(trace, target);
          if (hit) {
            p.reached = true;
            p.rounds_to_target = hit->rounds;
            p.speedup = static_cast<double>(p.serial_iters_to_target) /
                        (static_cast<double>(tau) * static_cast<double>(p.rounds_to_target));
          }
          grid.runs[slot] = p;
        });
      }
    }
  }
  pool.run_all(std::move(jobs));

  // Aggregate: cell = the per-seed run with the median speedup (lower median
  // for even counts). Unreached runs carry speedup 0 and sort first.
  grid.cells.resize(spec.workers.size() * spec.taus.size());
  for (std::size_t ki = 0; ki < spec.workers.size(); ++ki) {
    for (std::size_t ti = 0; ti < spec.taus.size(); ++ti) {
      std::vector<SpeedupPoint> runs;
      for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
        runs.push_back(grid.runs[(si * spec.workers.size() + ki) * spec.taus.size() + ti]);
      }
      std::stable_sort(runs.begin(), runs.end(),
                       [](const SpeedupPoint& a, const SpeedupPoint& b) {
                         return a.speedup < b.speedup;
                       });
      grid.cells[ki * spec.taus.size() + ti] = runs[(runs.size() - 1) / 2];
    }
  }
  return result;
}

struct OverheadPoint {
  double sync_seconds = 0.0;
  double naive = 0.0;
  double sparknet = 0.0;
  int best_tau = -1;
};

/// Pure curve computation with C(b) normalized to 1: for each S the naive
/// point is C/(C/K+S) and the averaging-scheme point is the best
/// sparknet_speedup over the measured taus.
inline std::vector<OverheadPoint> compute_overhead_curves(
    long serial_iters_to_target, std::span<const TauMeasurement> measurements, int workers,
    std::span<const double> sync_values) {
  std::vector<OverheadPoint> points;
  points.reserve(sync_values.size());
  for (double s : sync_values) {
    OverheadPoint p;
    p.sync_seconds = s;
    p.naive = naive_speedup(1.0, workers, s);
    const BestTau best = best_tau_speedup(measurements, serial_iters_to_target, 1.0, s);
    p.sparknet = best.speedup;
    p.best_tau = best.tau;
    points.push_back(p);
  }
  return points;
}

struct OverheadSpec {
  std::vector<double> sync_values;
  int workers = 1;
  std::vector<int> taus;
  std::uint64_t seed = 0;
  long serial_iter_budget = 0;
  long serial_eval_every = 10;
  long max_parallel_iters = 0;
  long warm_start_iters = 0;
  std::optional<double> target_accuracy;
  std::optional<long> target_at_serial_iters;
  int threads = 1;
};

struct OverheadResult {
  double target = 0.0;
  long serial_iters_to_target = 0;
  std::vector<TauMeasurement> measurements;
  std::vector<OverheadPoint> points;
};

/// Measures M_a once per tau at a fixed worker count (training is
/// independent of the cost model), then evaluates both speedup curves over
/// the requested synchronization overheads with C(b) normalized to 1.
inline OverheadResult sweep_overhead(const SchemeContext& base, const OverheadSpec& spec) {
  if (spec.sync_values.empty() || spec.taus.empty()) {
    throw std::invalid_argument("overhead: sync and tau axes must be nonempty");
  }
  if (spec.workers < 1) throw std::invalid_argument("overhead: need at least one worker");
  if (!spec.target_accuracy && !spec.target_at_serial_iters) {
    throw std::invalid_argument("overhead: no target accuracy and no derivation point");
  }

  OverheadResult result;
  const RunTrace baseline =
      detail::baseline_trace(base, spec.seed, spec.serial_iter_budget, spec.serial_eval_every);
  result.target = spec.target_accuracy ? *spec.target_accuracy
                                       : detail::accuracy_at_iters(baseline,
                                                                   *spec.target_at_serial_iters);
  const std::optional<EvalRecord> hit = first_reach(baseline, result.target);
  if (!hit) {
    throw std::runtime_error("overhead: serial baseline did not reach target " +
                             std::to_string(result.target));
  }
  result.serial_iters_to_target = hit->serial_iters;

  result.measurements.resize(spec.taus.size());
  ThreadPool pool(spec.threads);
  std::vector<std::function<void()>> jobs;
  for (std::size_t ti = 0; ti < spec.taus.size(); ++ti) {
    jobs.emplace_back([&, ti] {
      SchemeContext ctx = base;
      ctx.seed = spec.seed;
      ctx.target_accuracy = result.target;
      const int tau = spec.taus[ti];
      const RunTrace trace = run_sparknet(ctx, spec.workers, tau,
                                          detail::rounds_budget(spec.max_parallel_iters, tau),
                                          spec.warm_start_iters);
      const std::optional<EvalRecord> cell_hit = first_reach(trace, result.target);
      result.measurements[ti] =
          cell_hit ? TauMeasurement{tau, cell_hit->rounds, true} : TauMeasurement{tau, 0, false};
    });
  }
  pool.run_all(std::move(jobs));

  result.points = compute_overhead_curves(result.serial_iters_to_target, result.measurements,
                                          spec.workers, spec.sync_values);
  return result;
}

struct TauSweepSpec {
  std::vector<int> taus;
  int workers = 5;
  std::uint64_t seed = 0;
  long max_parallel_iters = 0;
  long warm_start_iters = 0;
  double target_accuracy = 2.0;  // > 1 keeps full curves
  int threads = 1;
};

/// One full averaging-scheme trace per tau at a fixed worker count; traces
/// share the seed (and therefore the warm-started weights) and are aligned
/// on simulated time for overlay plots.
inline std::vector<RunTrace> sweep_tau(const SchemeContext& base, const TauSweepSpec& spec) {
  if (spec.taus.empty()) throw std::invalid_argument("tau sweep: tau axis must be nonempty");
  std::vector<RunTrace> traces(spec.taus.size());
  ThreadPool pool(spec.threads);
  std::vector<std::function<void()>> jobs;
  for (std::size_t ti = 0; ti < spec.taus.size(); ++ti) {
    jobs.emplace_back([&, ti] {
      SchemeContext ctx = base;
      ctx.seed = spec.seed;
      ctx.target_accuracy = spec.target_accuracy;
      const int tau = spec.taus[ti];
      traces[ti] = run_sparknet(ctx, spec.workers, tau,
                                detail::rounds_budget(spec.max_parallel_iters, tau),
                                spec.warm_start_iters);
    });
  }
  pool.run_all(std::move(jobs));
  return traces;
}

}  // namespace parasgd
