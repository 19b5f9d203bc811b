#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace fcid {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous chunks; results must be written by index so output order never
/// depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace fcid
