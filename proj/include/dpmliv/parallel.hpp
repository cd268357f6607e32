#pragma once

#include <cstddef>
#include <functional>

namespace dpmliv {

/// Runs task(i) for i in [0, n) on at most `workers` threads (0 means the
/// number of hardware threads). Every task runs even if another throws; the
/// exception of the lowest failing index is rethrown afterwards.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

std::size_t default_workers();

}  // namespace dpmliv
