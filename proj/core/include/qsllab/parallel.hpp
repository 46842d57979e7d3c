#pragma once

#include <cstddef>
#include <functional>

namespace qsllab {

// Worker count from QSL_LAB_WORKERS, or 1 when unset or malformed.
std::size_t default_worker_count();

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
// processed exactly once; if any calls throw, the exception from the lowest
// failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace qsllab
