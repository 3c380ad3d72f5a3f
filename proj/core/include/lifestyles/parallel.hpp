#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace lifestyles {

// Thread count: LIFESTYLES_THREADS env var if set, else hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("LIFESTYLES_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs f(begin, end) over a partition of [0, n). Each index must be written
// by at most one call, so results are identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    unsigned threads = thread_count();
    if (n == 0) return;
    if (threads <= 1 || n < 2) {
        f(std::size_t{0}, n);
        return;
    }
    std::size_t chunks = std::min<std::size_t>(threads, n);
    std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t b = c * per;
        std::size_t e = std::min(n, b + per);
        if (b >= e) break;
        pool.emplace_back([&f, b, e] { f(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace lifestyles
