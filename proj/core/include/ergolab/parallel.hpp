#pragma once

#include <cstddef>
#include <functional>

namespace ergolab {

/// Worker count: ERGOLAB_THREADS if set and positive, else hardware concurrency.
std::size_t thread_budget();

/// Calls body(i) for i in [0, count). Each index writes only its own result
/// slot, so outcomes do not depend on scheduling. Exceptions are rethrown
/// after all workers join; the lowest failing index wins.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ergolab
