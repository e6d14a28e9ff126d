#pragma once

#include <cstddef>
#include <functional>

namespace lightcone {

/// Worker count used when none is given: set_default_threads, else the
/// LIGHTCONE_THREADS environment variable, else 1.
unsigned default_threads();
void set_default_threads(unsigned threads);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Each index runs exactly once; the first exception thrown is rethrown.
/// Calls made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace lightcone
