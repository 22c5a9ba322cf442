// Copyright 2026 the trajsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajsim/util/parallel.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trajsim {

namespace {

thread_local bool t_in_worker = false;

class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void set_threads(int n) {
    stop_workers();
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    n_threads_ = n;
    start_workers();
  }

  int threads() const { return n_threads_; }

  void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    // Nested calls from a worker run inline; the pool is not reentrant.
    if (n_threads_ == 1 || n <= 1 || t_in_worker) {
      if (n > 0) fn(0, n);
      return;
    }
    {
      std::unique_lock lock(mutex_);
      fn_ = &fn;
      n_items_ = n;
      pending_ = n_threads_ - 1;
      first_error_ = nullptr;
      ++generation_;
      cv_start_.notify_all();
    }
    t_in_worker = true;  // the inline chunk must not re-enter the pool
    run_chunk(0, fn);
    t_in_worker = false;
    {
      std::unique_lock lock(mutex_);
      cv_done_.wait(lock, [&] { return pending_ == 0; });
      if (first_error_) std::rethrow_exception(first_error_);
    }
  }

 private:
  Pool() { set_threads(0); }
  ~Pool() { stop_workers(); }

  void run_chunk(int id, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t chunk = (n_items_ + n_threads_ - 1) / n_threads_;
    const std::size_t begin = std::min(n_items_, chunk * static_cast<std::size_t>(id));
    const std::size_t end = std::min(n_items_, begin + chunk);
    if (begin < end) fn(begin, end);
  }

  void worker(int id) {
    t_in_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t)>* fn;
      {
        std::unique_lock lock(mutex_);
        cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        fn = fn_;
      }
      try {
        run_chunk(id, *fn);
      } catch (...) {
        std::unique_lock lock(mutex_);
        if (!first_error_) first_error_ = std::current_exception();
      }
      std::unique_lock lock(mutex_);
      if (--pending_ == 0) cv_done_.notify_one();
    }
  }

  void start_workers() {
    stop_ = false;
    for (int id = 1; id < n_threads_; ++id) workers_.emplace_back([this, id] { worker(id); });
  }

  void stop_workers() {
    {
      std::unique_lock lock(mutex_);
      stop_ = true;
      cv_start_.notify_all();
    }
    for (auto& t : workers_) t.join();
    workers_.clear();
  }

  std::mutex mutex_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  std::vector<std::thread> workers_;
  const std::function<void(std::size_t, std::size_t)>* fn_ = nullptr;
  std::size_t n_items_ = 0;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  int n_threads_ = 1;
  bool stop_ = false;
  std::exception_ptr first_error_;
};

}  // namespace

void set_threads(int n) { Pool::instance().set_threads(n); }

int thread_count() { return Pool::instance().threads(); }

void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  Pool::instance().run(n, fn);
}

}  // namespace trajsim
