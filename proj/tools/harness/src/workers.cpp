#include "feasplan/harness/workers.hpp"

#include "feasplan/common/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace feasplan::harness {

int default_workers() {
  const char* env = std::getenv("FEASPLAN_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used == std::string(env).size() && n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw InvalidArgument(std::string("FEASPLAN_WORKERS must be a positive integer, got '") + env + "'");
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw InvalidArgument("parallel_for: workers must be >= 1");
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(run);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace feasplan::harness
