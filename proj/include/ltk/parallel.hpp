#pragma once

#include <cstddef>
#include <functional>

namespace ltk {

/// Upper bound on worker threads used by library routines. Defaults to the
/// LTK_THREADS environment variable when set, else the hardware concurrency.
std::size_t thread_limit();
void set_thread_limit(std::size_t threads);

/// Runs body(i) for i in [0, count). Each index is processed exactly once;
/// callers write results to disjoint slots, so output does not depend on
/// the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ltk
