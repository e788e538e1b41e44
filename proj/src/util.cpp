#include "jindex/util.hpp"

#include <algorithm>
#include <thread>

namespace jindex::util {

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            for (int i = t; i < n; i += n_threads) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace jindex::util
