#include "lig/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace lig {

int worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  const int available = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("LIG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return std::min(n, available);
    } catch (const std::exception&) {
      // Unparsable values fall through to the hardware default.
    }
  }
  return available;
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, int)>& body) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i, 0);
    return;
  }
  const int spawn = static_cast<int>(std::min<std::size_t>(count, workers));
  std::atomic<std::size_t> next{0};
  auto run = [&](int worker) {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      body(i, worker);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(spawn - 1);
  for (int w = 1; w < spawn; ++w) pool.emplace_back(run, w);
  run(0);
}

}  // namespace lig
