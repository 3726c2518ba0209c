#pragma once

#include <cstddef>
#include <functional>

namespace pdds {

/// Number of worker threads used by per-particle loops. 0 means the
/// OpenMP default. Has no effect when built without OpenMP.
void set_num_threads(int threads);
int num_threads();

/// Runs body(i) for i in [0, n). Iterations must be independent; results
/// must not depend on which thread executes an iteration.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pdds
