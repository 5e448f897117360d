#include "beamkit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace beamkit {

namespace {
std::atomic<std::size_t>& thread_limit() {
    static std::atomic<std::size_t> n{std::max<std::size_t>(1, std::thread::hardware_concurrency())};
    return n;
}
}  // namespace

void set_max_threads(std::size_t n) { thread_limit() = std::max<std::size_t>(1, n); }

std::size_t max_threads() { return thread_limit(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::size_t first_index = n;
    std::mutex error_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                // Report the lowest failing index so errors do not depend on scheduling.
                std::lock_guard lock(error_mutex);
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
        body();
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace beamkit
