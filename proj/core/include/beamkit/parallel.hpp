#pragma once

#include <cstddef>
#include <functional>

namespace beamkit {

/// Upper bound on worker threads used by the library; 1 forces sequential execution.
/// Defaults to std::thread::hardware_concurrency().
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs fn(i) for i in [0, n). Work items must not share mutable state; results are
/// independent of scheduling because each index writes only its own outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace beamkit
