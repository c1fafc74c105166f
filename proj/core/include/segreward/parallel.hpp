#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace segreward {

/// Worker cap: ENGINE_THREADS when set (minimum 1), else 1. Parallel loops
/// must stay deterministic, so each index does seed-independent work and
/// writes only its own slot.
inline int engine_threads() {
  const char* env = std::getenv("ENGINE_THREADS");
  if (env == nullptr) return 1;
  int v = std::atoi(env);
  if (v < 1) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw > 0 && v > static_cast<int>(hw)) v = static_cast<int>(hw);
  return v;
}

inline void parallel_for_indexed(std::size_t count, const std::function<void(std::size_t)>& fn) {
  int workers = engine_threads();
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = static_cast<std::size_t>(w); i < count;
           i += static_cast<std::size_t>(workers))
        fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace segreward
