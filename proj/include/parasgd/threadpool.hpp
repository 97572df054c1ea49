#pragma once

#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace parasgd {

/// Minimal fork-join pool. Jobs are independent; completion order is
/// irrelevant to callers because results are keyed by index. With one
/// context the jobs run inline on the caller.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) : threads_(threads < 1 ? 1 : threads) {
    for (int i = 1; i < threads_; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (std::thread& t : workers_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const noexcept { return threads_; }

  /// Runs every job and returns once all have finished. The first exception
  /// thrown by any job is rethrown on the caller.
  void run_all(std::vector<std::function<void()>> jobs) {
    if (jobs.empty()) return;
    if (threads_ == 1) {
      for (auto& j : jobs) j();
      return;
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      pending_ = std::move(jobs);
      next_ = 0;
      in_flight_ = pending_.size();
      error_ = nullptr;
    }
    cv_.notify_all();
    help_and_wait();
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return stop_ || next_ < pending_.size(); });
        if (stop_) return;
        job = std::move(pending_[next_++]);
      }
      run_one(job);
    }
  }

  void help_and_wait() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        if (next_ < pending_.size()) {
          job = std::move(pending_[next_++]);
        } else {
          done_cv_.wait(lock, [this] { return in_flight_ == 0; });
          pending_.clear();
          return;
        }
      }
      run_one(job);
    }
  }

  void run_one(std::function<void()>& job) {
    try {
      job();
    } catch (...) {
      std::unique_lock<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    std::unique_lock<std::mutex> lock(mutex_);
    if (--in_flight_ == 0) done_cv_.notify_all();
  }

  int threads_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::function<void()>> pending_;
  std::size_t next_ = 0;
  std::size_t in_flight_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace parasgd
