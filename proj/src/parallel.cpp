#include "defreg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace defreg::parallel {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) {
    g_threads.store(std::max(1, n));
}

int threads() {
    return g_threads.load();
}

void for_each_slice(int nz, const std::function<void(int)>& fn) {
    const int workers = std::min(threads(), nz);
    if (workers <= 1) {
        for (int z = 0; z < nz; ++z) fn(z);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([=, &fn] {
            for (int z = w; z < nz; z += workers) fn(z);
        });
    }
    for (auto& t : pool) t.join();
}

double sum_slices(int nz, const std::function<double(int)>& fn) {
    std::vector<double> partial(static_cast<size_t>(std::max(nz, 0)), 0.0);
    for_each_slice(nz, [&](int z) { partial[static_cast<size_t>(z)] = fn(z); });
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

} // namespace defreg::parallel
