#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "parasgd/data.hpp"
#include "parasgd/model.hpp"
#include "parasgd/threadpool.hpp"

namespace parasgd {

/// Simulated cost parameters: `compute_seconds` is the time of one gradient
/// step at the configured batch size on one machine (C(b)); `sync_seconds`
/// is one broadcast-plus-collect (S). `sublinearity` models the per-part
/// cost of splitting a batch K ways as C(b) * K^(-sublinearity); the default
/// of 1 is the ideal C(b)/K case.
struct CostModel {
  double compute_seconds = 1.0;
  double sync_seconds = 0.0;
  double sublinearity = 1.0;

  void validate() const {
    if (!(compute_seconds > 0.0)) throw std::invalid_argument("cost: compute time must be > 0");
    if (sync_seconds < 0.0) throw std::invalid_argument("cost: sync time must be >= 0");
    if (!(sublinearity > 0.0) || sublinearity > 1.0) {
      throw std::invalid_argument("cost: sublinearity must be in (0,1]");
    }
  }
};

/// Simulated wall clock. Only scheme drivers advance it, and they always set
/// it from the closed-form expressions below so the reported time matches
/// the analytical model bit for bit.
class SimClock {
 public:
  double elapsed() const noexcept { return elapsed_; }

  void advance_to(double t) {
    if (t < elapsed_) throw std::logic_error("sim clock: time moved backwards");
    elapsed_ = t;
  }

 private:
  double elapsed_ = 0.0;
};

// Closed-form clock values.
inline double serial_sim_time(long iters, const CostModel& c) {
  return static_cast<double>(iters) * c.compute_seconds;
}

inline double naive_step_seconds(const CostModel& c, int workers) {
  const double part = c.sublinearity == 1.0
                          ? c.compute_seconds / static_cast<double>(workers)
                          : c.compute_seconds *
                                std::pow(1.0 / static_cast<double>(workers), c.sublinearity);
  return part + c.sync_seconds;
}

inline double naive_sim_time(long iters, const CostModel& c, int workers) {
  return static_cast<double>(iters) * naive_step_seconds(c, workers);
}

inline double sparknet_sim_time(long rounds, int tau, long warm_start_iters, const CostModel& c) {
  return static_cast<double>(warm_start_iters) * c.compute_seconds +
         static_cast<double>(rounds) *
             (static_cast<double>(tau) * c.compute_seconds + c.sync_seconds);
}

/// One evaluation point along a run.
struct EvalRecord {
  long serial_iters = 0;    // SGD updates applied on the master outside rounds
  long parallel_iters = 0;  // per-worker SGD updates inside rounds
  long rounds = 0;          // synchronizations so far
  double sim_time = 0.0;
  double accuracy = 0.0;
};

enum class RunOutcome { TargetReached, BudgetExhausted };

/// Everything an experiment records about one training run.
struct RunTrace {
  std::string scheme;
  int workers = 1;
  int tau = 0;
  int batch = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  double target_accuracy = 0.0;
  CostModel cost;
  long warm_start_iters = 0;
  std::uint64_t warm_digest = 0;  // fingerprint of the weights entering round 1
  std::vector<EvalRecord> records;
  RunOutcome outcome = RunOutcome::BudgetExhausted;

  bool reached() const noexcept { return outcome == RunOutcome::TargetReached; }
};

/// Test hooks; both callbacks default to disabled.
struct SchemeObserver {
  std::function<void(long iter, const Net&)> on_step;  // serial/naive, after each update
  std::function<void(long round, const WeightCollection&)> on_round;  // after averaging
};

/// Shared inputs of every scheme driver.
struct SchemeContext {
  NetSpec net;
  const Dataset* train_data = nullptr;
  const Dataset* eval_data = nullptr;
  std::size_t batch = 1;  // b
  SgdOptions sgd;
  std::uint64_t seed = 0;
  CostModel cost;
  double target_accuracy = 1.0;  // values > 1 disable early stopping
  long eval_steps = 1;

  void validate() const {
    if (train_data == nullptr || eval_data == nullptr) {
      throw std::invalid_argument("scheme: missing dataset");
    }
    if (batch < 1) throw std::invalid_argument("scheme: batch must be >= 1");
    if (eval_steps < 1) throw std::invalid_argument("scheme: eval steps must be >= 1");
    cost.validate();
  }
};

namespace detail {

inline double evaluate(Net& net, const SchemeContext& ctx) {
  // Evaluation is free in simulated time and always scores the same fixed
  // examples: a fresh sequential pass over the evaluation set.
  net.set_validation_data(std::make_shared<SequentialBatchIterator>(*ctx.eval_data, ctx.batch));
  return net.test(ctx.eval_steps);
}

inline Net make_serial_net(const SchemeContext& ctx) {
  Net net(ctx.net, ctx.seed);
  net.set_sgd(ctx.sgd);
  const std::vector<Shard> shards = shard(*ctx.train_data, 1, ctx.seed);
  net.set_training_data(make_worker_iterator(shards, 0, ctx.batch, ctx.seed));
  return net;
}

}  // namespace detail

/// Serial SGD under the simulated clock: after t iterations the clock reads
/// exactly t * C(b). Evaluates every `eval_every` steps; evaluation costs no
/// simulated time. Exhausting the budget is an outcome, not an error.
inline RunTrace run_serial(const SchemeContext& ctx, long iter_budget, long eval_every,
                           const SchemeObserver* observer = nullptr) {
  ctx.validate();
  if (eval_every < 1) throw std::invalid_argument("run_serial: eval_every must be >= 1");
  if (iter_budget < 0) throw std::invalid_argument("run_serial: negative budget");

  Net net = detail::make_serial_net(ctx);
  RunTrace trace;
  trace.scheme = "serial";
  trace.workers = 1;
  trace.tau = 0;
  trace.batch = static_cast<int>(ctx.batch);
  trace.learning_rate = ctx.sgd.learning_rate;
  trace.seed = ctx.seed;
  trace.target_accuracy = ctx.target_accuracy;
  trace.cost = ctx.cost;

  SimClock clock;
  long iters = 0;
  while (iters < iter_budget) {
    const long chunk = std::min(eval_every, iter_budget - iters);
    if (observer != nullptr && observer->on_step) {
      for (long s = 0; s < chunk; ++s) {
        net.train(1);
        observer->on_step(iters + s + 1, net);
      }
    } else {
      net.train(chunk);
    }
    iters += chunk;
    clock.advance_to(serial_sim_time(iters, ctx.cost));
    const double acc = detail::evaluate(net, ctx);
    trace.records.push_back({iters, 0, 0, clock.elapsed(), acc});
    if (acc >= ctx.target_accuracy) {
      trace.outcome = RunOutcome::TargetReached;
      return trace;
    }
  }
  trace.outcome = RunOutcome::BudgetExhausted;
  return trace;
}

/// Minibatch-splitting baseline: each size-b batch is divided across K
/// workers, per-part gradients are combined as their size-weighted mean
/// (which equals the full-batch-mean gradient), and one SGD update is
/// applied. Algorithmically identical to run_serial on the same batch
/// stream; only the clock differs, at C(b)*K^(-sublinearity) + S per step.
inline RunTrace run_naive(const SchemeContext& ctx, int workers, long iter_budget, long eval_every,
                          const SchemeObserver* observer = nullptr) {
  ctx.validate();
  if (workers < 1) throw std::invalid_argument("run_naive: need at least one worker");
  if (ctx.batch % static_cast<std::size_t>(workers) != 0) {
    throw std::invalid_argument("run_naive: worker count must divide the batch size");
  }
  if (eval_every < 1) throw std::invalid_argument("run_naive: eval_every must be >= 1");
  if (iter_budget < 0) throw std::invalid_argument("run_naive: negative budget");

  Net net = detail::make_serial_net(ctx);
  const std::vector<Shard> shards = shard(*ctx.train_data, 1, ctx.seed);
  std::shared_ptr<BatchIterator> stream = make_worker_iterator(shards, 0, ctx.batch, ctx.seed);

  RunTrace trace;
  trace.scheme = "naive";
  trace.workers = workers;
  trace.tau = 0;
  trace.batch = static_cast<int>(ctx.batch);
  trace.learning_rate = ctx.sgd.learning_rate;
  trace.seed = ctx.seed;
  trace.target_accuracy = ctx.target_accuracy;
  trace.cost = ctx.cost;

  const std::size_t part = ctx.batch / static_cast<std::size_t>(workers);
  const std::size_t dim =
      ctx.train_data->channels() * ctx.train_data->height() * ctx.train_data->width();

  SimClock clock;
  long iters = 0;
  while (iters < iter_budget) {
    const long chunk = std::min(eval_every, iter_budget - iters);
    for (long s = 0; s < chunk; ++s) {
      const Batch full = stream->next();
      std::vector<WeightCollection> part_grads;
      part_grads.reserve(static_cast<std::size_t>(workers));
      for (int k = 0; k < workers; ++k) {
        NDArray images({part, ctx.train_data->channels(), ctx.train_data->height(),
                        ctx.train_data->width()});
        std::vector<int> labels(part);
        const double* src = full.images.data() + static_cast<std::size_t>(k) * part * dim;
        for (std::size_t i = 0; i < part * dim; ++i) images.data()[i] = src[i];
        for (std::size_t i = 0; i < part; ++i) {
          labels[i] = full.labels[static_cast<std::size_t>(k) * part + i];
        }
        part_grads.push_back(net.backward(Batch{std::move(images), std::move(labels)}));
      }
      net.apply_update(weights_mean(part_grads));
      ++iters;
      if (observer != nullptr && observer->on_step) observer->on_step(iters, net);
    }
    clock.advance_to(naive_sim_time(iters, ctx.cost, workers));
    const double acc = detail::evaluate(net, ctx);
    trace.records.push_back({iters, 0, iters, clock.elapsed(), acc});
    if (acc >= ctx.target_accuracy) {
      trace.outcome = RunOutcome::TargetReached;
      return trace;
    }
  }
  trace.outcome = RunOutcome::BudgetExhausted;
  return trace;
}

/// Round-based training with periodic model averaging: broadcast the current
/// weights, let every worker run tau local SGD steps on its own shard, then
/// collect and average. The clock advances by tau*C(b) + S per round because
/// workers run concurrently in simulated time. An optional warm start runs
/// `warm_start_iters` serial steps on the master (consuming worker 0's
/// stream) before round 1 and costs warm_start_iters * C(b).
///
/// Worker computations within a round share nothing; with `threads` > 1 they
/// run on real threads and the trace is bit-identical to the sequential one
/// because averaging always accumulates in ascending worker order.
inline RunTrace run_sparknet(const SchemeContext& ctx, int workers, int tau, long round_budget,
                             long warm_start_iters, int threads = 1,
                             const SchemeObserver* observer = nullptr) {
  ctx.validate();
  if (workers < 1) throw std::invalid_argument("run_sparknet: need at least one worker");
  if (tau < 1) throw std::invalid_argument("run_sparknet: tau must be >= 1");
  if (round_budget < 0) throw std::invalid_argument("run_sparknet: negative budget");
  if (warm_start_iters < 0) throw std::invalid_argument("run_sparknet: negative warm start");

  const std::vector<Shard> shards = shard(*ctx.train_data, workers, ctx.seed);
  for (const Shard& s : shards) {
    if (s.size() < ctx.batch) {
      throw std::invalid_argument("run_sparknet: shard smaller than the batch size");
    }
  }

  Net master(ctx.net, ctx.seed);
  master.set_sgd(ctx.sgd);
  std::vector<std::unique_ptr<Net>> worker_nets;
  std::vector<std::shared_ptr<BatchIterator>> worker_streams;
  for (int k = 0; k < workers; ++k) {
    worker_nets.push_back(std::make_unique<Net>(ctx.net, ctx.seed));
    worker_nets.back()->set_sgd(ctx.sgd);
    worker_streams.push_back(make_worker_iterator(shards, k, ctx.batch, ctx.seed));
    worker_nets.back()->set_training_data(worker_streams.back());
  }

  RunTrace trace;
  trace.scheme = "sparknet";
  trace.workers = workers;
  trace.tau = tau;
  trace.batch = static_cast<int>(ctx.batch);
  trace.learning_rate = ctx.sgd.learning_rate;
  trace.seed = ctx.seed;
  trace.target_accuracy = ctx.target_accuracy;
  trace.cost = ctx.cost;
  trace.warm_start_iters = warm_start_iters;

  // Warm start shares worker 0's stream, so with K=1 the whole run consumes
  // exactly the serial batch sequence regardless of the warm length.
  master.set_training_data(worker_streams[0]);
  master.train(warm_start_iters);
  WeightCollection current = master.get_weights();
  trace.warm_digest = current.digest();

  SimClock clock;
  ThreadPool pool(threads);
  std::vector<WeightCollection> collected(static_cast<std::size_t>(workers));
  for (long round = 1; round <= round_budget; ++round) {
    std::vector<std::function<void()>> jobs;
    jobs.reserve(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) {
      Net* net = worker_nets[static_cast<std::size_t>(k)].get();
      WeightCollection* slot = &collected[static_cast<std::size_t>(k)];
      const WeightCollection* bcast = &current;
      jobs.emplace_back([net, slot, bcast, tau] {
        net->set_weights(*bcast);
        net->train(tau);
        *slot = net->get_weights();
      });
    }
    pool.run_all(std::move(jobs));
    current = weights_mean(collected);

    master.set_weights(current);
    clock.advance_to(sparknet_sim_time(round, tau, warm_start_iters, ctx.cost));
    const double acc = detail::evaluate(master, ctx);
    trace.records.push_back(
        {warm_start_iters, static_cast<long>(tau) * round, round, clock.elapsed(), acc});
    if (observer != nullptr && observer->on_round) observer->on_round(round, current);
    if (acc >= ctx.target_accuracy) {
      trace.outcome = RunOutcome::TargetReached;
      return trace;
    }
  }
  trace.outcome = RunOutcome::BudgetExhausted;
  return trace;
}

}  // namespace parasgd
