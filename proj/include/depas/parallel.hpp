#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace depas {
namespace detail {

// Worker budget for internal sweeps. DEPAS_TUNE_THREADS caps it; unset means
// one worker per hardware thread.
inline unsigned thread_budget() {
  static const unsigned cached = [] {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("DEPAS_TUNE_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) return std::min<unsigned>(hw, unsigned(std::min<long>(v, 1024)));
    }
    return hw;
  }();
  return cached;
}

// Runs fn(begin, end) over a partition of [0, total). Results must be reduced
// in an order-independent way by the caller; exceptions are re-thrown here.
template <typename Fn>
void parallel_chunks(std::size_t total, Fn&& fn) {
  const unsigned budget = thread_budget();
  if (budget <= 1 || total < 2 * std::size_t(budget)) {
    fn(std::size_t(0), total);
    return;
  }
  const unsigned workers = unsigned(std::min<std::size_t>(budget, total));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = total * w / workers;
    const std::size_t end = total * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail
}  // namespace depas
