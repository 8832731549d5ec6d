#include "parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace lapseg {
namespace {

int resolve_worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("LAPSEG_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// One heap object per parallel_for call. Workers that wake late operate on
// the job they captured, whose part counter is already exhausted, so they can
// never claim work belonging to a newer job.
struct Job {
  const std::function<void(size_t, size_t)>* fn = nullptr;
  size_t n = 0;
  size_t parts = 0;
  size_t chunk = 0;
  std::atomic<size_t> next{0};
  std::atomic<int> pending{0};
};

class Pool {
 public:
  Pool() : nthreads_(resolve_worker_threads()) {
    for (int i = 1; i < nthreads_; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return nthreads_; }

  void run(size_t n, const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    size_t parts = std::min<size_t>(static_cast<size_t>(nthreads_), n);
    if (parts <= 1) {
      fn(0, n);
      return;
    }
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->n = n;
    job->parts = parts;
    job->chunk = (n + parts - 1) / parts;
    job->pending.store(static_cast<int>(parts), std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lk(mu_);
      current_ = job;
      ++generation_;
    }
    cv_.notify_all();

    help(*job);

    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [&] { return job->pending.load(std::memory_order_acquire) == 0; });
    if (current_ == job) current_.reset();
  }

 private:
  void help(Job& job) {
    for (;;) {
      size_t p = job.next.fetch_add(1, std::memory_order_relaxed);
      if (p >= job.parts) break;
      size_t b = p * job.chunk;
      size_t e = std::min(job.n, b + job.chunk);
      if (b < e) (*job.fn)(b, e);
      if (job.pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lk(mu_);
        done_cv_.notify_all();
      }
    }
  }

  void worker_loop() {
    uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = current_;
      }
      if (job) help(*job);
    }
  }

  int nthreads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  bool stop_ = false;
  uint64_t generation_ = 0;
  std::shared_ptr<Job> current_;
};

Pool& pool() {
  static Pool p;
  return p;
}

}  // namespace

int worker_threads() { return pool().size(); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn) {
  pool().run(n, fn);
}

}  // namespace lapseg
