#pragma once

#include <cstddef>
#include <functional>

namespace ufpgd {

// Worker count: UFPGD_THREADS when set to a positive integer, else
// std::thread::hardware_concurrency().
int default_thread_count();

// Runs body(0) .. body(n - 1) on a transient worker pool. Iterations
// must not depend on each other; callers keep determinism by writing
// into per-index slots and reducing in index order afterwards. The
// first exception thrown by any iteration is rethrown on the calling
// thread. threads <= 0 picks default_thread_count().
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int threads = 0);

}  // namespace ufpgd
