#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cscn {

// Worker count: CSCN_THREADS env var if set, else hardware concurrency.
unsigned default_thread_count();

// Splits [0, n) into `slots` contiguous near-equal ranges and calls
// fn(slot, begin, end) for each, using up to `threads` workers. The partition
// depends only on (n, slots), so per-slot accumulators reduced in slot order
// give results independent of the thread count.
template <typename Fn>
void for_each_slot(std::size_t n, std::size_t slots, unsigned threads, Fn&& fn) {
  if (n == 0) return;
  if (slots == 0) slots = 1;
  if (slots > n) slots = n;
  auto range = [n, slots](std::size_t s) {
    return std::pair{s * n / slots, (s + 1) * n / slots};
  };

  if (threads <= 1 || slots == 1) {
    for (std::size_t s = 0; s < slots; ++s) {
      auto [b, e] = range(s);
      fn(s, b, e);
    }
    return;
  }

  if (threads > slots) threads = static_cast<unsigned>(slots);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= slots) return;
      try {
        auto [b, e] = range(s);
        fn(s, b, e);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cscn
