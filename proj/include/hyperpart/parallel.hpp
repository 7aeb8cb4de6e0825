#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "hyperpart/assertions.hpp"

namespace hyperpart {

// Test-and-test-and-set lock; yields after a fixed number of failed spins so
// oversubscribed runs (more threads than cores) cannot livelock.
class SpinLock {
 public:
  static constexpr int kSpinsBeforeYield = 64;

  void lock() {
    int spins = 0;
    while (_locked.exchange(true, std::memory_order_acquire)) {
      while (_locked.load(std::memory_order_relaxed)) {
        if (++spins >= kSpinsBeforeYield) {
          std::this_thread::yield();
          spins = 0;
        }
      }
    }
  }

  void unlock() { _locked.store(false, std::memory_order_release); }

 private:
  std::atomic<bool> _locked{false};
};

// std::atomic in a vector: copies and moves are plain loads/stores and must
// only happen while no other thread touches the container.
template <typename T>
class AtomicWrapper {
 public:
  AtomicWrapper(T value = T()) noexcept : _value(value) {}
  AtomicWrapper(const AtomicWrapper& other) noexcept
      : _value(other.load(std::memory_order_relaxed)) {}
  AtomicWrapper& operator=(const AtomicWrapper& other) noexcept {
    store(other.load(std::memory_order_relaxed), std::memory_order_relaxed);
    return *this;
  }

  T load(std::memory_order order = std::memory_order_seq_cst) const {
    return _value.load(order);
  }
  void store(T value, std::memory_order order = std::memory_order_seq_cst) {
    _value.store(value, order);
  }
  T exchange(T value, std::memory_order order = std::memory_order_seq_cst) {
    return _value.exchange(value, order);
  }
  T fetch_add(T arg, std::memory_order order = std::memory_order_seq_cst) {
    return _value.fetch_add(arg, order);
  }
  T fetch_sub(T arg, std::memory_order order = std::memory_order_seq_cst) {
    return _value.fetch_sub(arg, order);
  }
  bool compare_exchange_strong(T& expected, T desired,
                               std::memory_order order = std::memory_order_seq_cst) {
    return _value.compare_exchange_strong(expected, desired, order);
  }
  bool compare_exchange_weak(T& expected, T desired,
                             std::memory_order order = std::memory_order_seq_cst) {
    return _value.compare_exchange_weak(expected, desired, order);
  }

  // Monotone CAS updates used by the concurrent min/max registers.
  void fetchMax(T value) {
    T cur = load(std::memory_order_relaxed);
    while (cur < value &&
           !_value.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
    }
  }
  void fetchMin(T value) {
    T cur = load(std::memory_order_relaxed);
    while (cur > value &&
           !_value.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
    }
  }

 private:
  std::atomic<T> _value;
};

// One work-stealing pool per partitioner run. The global_control lifts TBB's
// worker cap above the hardware concurrency so requested thread counts are
// honored even when oversubscribed; the arena pins the pool size.
class TaskPool {
 public:
  explicit TaskPool(int num_threads)
      : _num_threads(num_threads > 0 ? num_threads : 1),
        _control(tbb::global_control::max_allowed_parallelism,
                 static_cast<size_t>(std::max(
                     _num_threads,
                     static_cast<int>(std::thread::hardware_concurrency())))),
        _arena(_num_threads) {}

  TaskPool(const TaskPool&) = delete;
  TaskPool& operator=(const TaskPool&) = delete;

  int numThreads() const { return _num_threads; }

  template <typename F>
  auto execute(F&& f) {
    return _arena.execute(std::forward<F>(f));
  }

  // Index of the calling worker inside this pool, in [0, numThreads()).
  static int currentThread() {
    const int idx = tbb::this_task_arena::current_thread_index();
    return idx == tbb::task_arena::not_initialized ? 0 : idx;
  }

 private:
  int _num_threads;
  tbb::global_control _control;
  tbb::task_arena _arena;
};

// Exclusive prefix sum in place; returns the total.
template <typename T>
T exclusivePrefixSum(std::vector<T>& values) {
  T sum = T(0);
  for (auto& v : values) {
    T next = sum + v;
    v = sum;
    sum = next;
  }
  return sum;
}

template <typename F>
void parallelFor(size_t begin, size_t end, F&& f, size_t grain = 1024) {
  tbb::parallel_for(tbb::blocked_range<size_t>(begin, end, grain),
                    [&](const tbb::blocked_range<size_t>& range) {
                      for (size_t i = range.begin(); i != range.end(); ++i) {
                        f(i);
                      }
                    });
}

}  // namespace hyperpart
