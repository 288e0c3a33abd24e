#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace mfsim {

/// Number of worker threads used by the parallel loops (OpenMP).
void set_threads(int n);
int threads();

/// Runs body(i) for i in [0, n) across the worker pool. If any call throws,
/// the exception from the smallest index is rethrown after the loop, so the
/// reported error does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mfsim
