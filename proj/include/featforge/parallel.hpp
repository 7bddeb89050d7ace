#pragma once

#include <cstddef>
#include <functional>

namespace featforge {

// Runs fn(0..count-1) on a bounded pool; results land in caller-owned slots
// keyed by index, so output order never depends on scheduling.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

} // namespace featforge
