#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace radialplan {

// Worker cap: hardware concurrency, overridable by RADIALPLAN_THREADS.
inline int thread_budget() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("RADIALPLAN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = static_cast<int>(v);
  }
  return n;
}

// Static block partition of [0, n) across workers.  fn(worker, begin, end)
// must not touch other workers' state; callers merge afterwards, so results
// cannot depend on scheduling.
inline void parallel_for(std::int64_t n,
                         const std::function<void(int, std::int64_t,
                                                  std::int64_t)>& fn) {
  const int workers = static_cast<int>(
      std::min<std::int64_t>(thread_budget(), n > 0 ? n : 1));
  if (workers <= 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t b = w * chunk;
    const std::int64_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace radialplan
