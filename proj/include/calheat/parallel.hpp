#pragma once

#include <functional>

namespace calheat {

/// Worker count used by assembly loops; 1 runs everything on the caller.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [begin, end), split into contiguous chunks across
/// the configured workers. Each index is processed exactly once, so results
/// are independent of the worker count.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace calheat
