#pragma once

#include <cstddef>
#include <functional>

namespace cmcm {

/// Upper bound on worker threads used by parallel_for; 1 means serial.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot, so results do not depend on the thread count. The first exception
/// thrown by any body is rethrown after all workers join. Nested calls from
/// inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cmcm
