#pragma once

// Campaign execution: a serial reference executor and a bounded worker
// pool that commits results in index order, so both produce identical
// record files for deterministic work.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace valsim {

class CancelToken {
 public:
  void request() noexcept { flag_.store(true, std::memory_order_relaxed); }
  bool requested() const noexcept { return flag_.load(std::memory_order_relaxed); }
  void reset() noexcept { flag_.store(false, std::memory_order_relaxed); }

 private:
  std::atomic<bool> flag_{false};
  static_assert(std::atomic<bool>::is_always_lock_free);
};

// Token set by SIGINT / SIGTERM once install_signal_handlers() has run.
CancelToken& process_cancel_token();
void install_signal_handlers();

struct ExecStats {
  std::size_t committed = 0;
  bool cancelled = false;
};

// produce(i) for i in [0, n), each followed immediately by commit(i, result).
template <typename Produce, typename Commit>
ExecStats run_serial(std::size_t n, Produce&& produce, Commit&& commit, const CancelToken* cancel = nullptr) {
  ExecStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    if (cancel && cancel->requested()) {
      stats.cancelled = true;
      break;
    }
    commit(i, produce(i));
    ++stats.committed;
  }
  return stats;
}

// produce(i) runs on up to `workers` threads; commit(i, result) runs on the
// calling thread in increasing i. At most 2 * workers results wait for
// commit at any time. On cancellation no new work starts; finished results
// are still committed (in order, skipping gaps). An exception from produce
// cancels the rest and is rethrown after the workers have joined.
template <typename Produce, typename Commit>
ExecStats run_ordered(std::size_t n, unsigned workers, Produce&& produce, Commit&& commit,
                      const CancelToken* cancel = nullptr) {
  using Result = std::invoke_result_t<Produce&, std::size_t>;
  if (workers <= 1 || n <= 1) return run_serial(n, produce, commit, cancel);

  const std::size_t window = 2 * static_cast<std::size_t>(workers);
  std::mutex mu;
  std::condition_variable ready;      // a result arrived or a worker exited
  std::condition_variable has_room;   // the commit frontier advanced
  std::map<std::size_t, Result> done;
  std::size_t next_claim = 0;
  std::size_t frontier = 0;  // next index to commit
  std::size_t active = workers;
  bool stop = false;
  std::exception_ptr failure;

  auto stopping = [&] { return stop || (cancel && cancel->requested()); };

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mu);
        has_room.wait(lock, [&] { return stopping() || next_claim >= n || next_claim < frontier + window; });
        if (stopping() || next_claim >= n) break;
        i = next_claim++;
      }
      try {
        Result r = produce(i);
        std::lock_guard lock(mu);
        done.emplace(i, std::move(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
      ready.notify_one();
      has_room.notify_all();
    }
    {
      std::lock_guard lock(mu);
      --active;
    }
    ready.notify_one();
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker);

  ExecStats stats;
  std::unique_lock lock(mu);
  while (frontier < n) {
    ready.wait(lock, [&] { return done.count(frontier) || active == 0; });
    auto it = done.find(frontier);
    if (it == done.end()) break;  // workers exited without producing this index
    Result r = std::move(it->second);
    done.erase(it);
    const std::size_t i = frontier++;
    lock.unlock();
    has_room.notify_all();
    try {
      commit(i, std::move(r));
    } catch (...) {
      lock.lock();
      if (!failure) failure = std::current_exception();
      stop = true;
      lock.unlock();
      has_room.notify_all();
      for (auto& t : threads) t.join();
      std::rethrow_exception(failure);
    }
    ++stats.committed;
    lock.lock();
  }
  lock.unlock();
  has_room.notify_all();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  // Cancelled: persist whatever finished beyond the first gap.
  for (auto& [i, r] : done) {
    commit(i, std::move(r));
    ++stats.committed;
  }
  stats.cancelled = stats.committed < n;
  return stats;
}

}  // namespace valsim
