#pragma once

#include <cstddef>
#include <functional>

namespace feasplan::harness {

// Worker count from FEASPLAN_WORKERS, else 1.
int default_workers();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is claimed in
// index order; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace feasplan::harness
