#pragma once

#include <cstddef>
#include <functional>

namespace s3t {

/// Worker cap used when a call passes threads = 0. Defaults to the hardware
/// concurrency; the CLI sets it from --threads.
void set_default_threads(unsigned n);
unsigned default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Items are claimed dynamically; callers write results to slot i so the
/// outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace s3t
