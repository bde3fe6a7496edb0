#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace fsde {

/// Worker cap: FSDE_THREADS if set (>= 1), else hardware concurrency.
/// Affects speed only; every parallel loop writes disjoint slots and all
/// reductions run over fixed-order trees, so results are worker-count
/// independent.
inline int worker_count() {
    if (const char* env = std::getenv("FSDE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n) across workers; fn must only touch slot i state.
inline void parallel_for(long n, const std::function<void(long)>& fn) {
    const int workers = std::min<long>(worker_count(), std::max<long>(n, 1));
    if (workers <= 1 || n < 2) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const long lo = n * w / workers;
        const long hi = n * (w + 1) / workers;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Pairwise (tree) summation with a fixed association order, independent of
/// worker count and chunking.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0; // normal-approximation half width
};

inline MeanCi mean_ci(std::span<const double> v) {
    MeanCi r;
    if (v.empty()) return r;
    const double n = static_cast<double>(v.size());
    r.mean = pairwise_sum(v) / n;
    if (v.size() < 2) return r;
    std::vector<double> sq(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        const double c = v[i] - r.mean;
        sq[i] = c * c;
    }
    const double var = pairwise_sum(sq) / (n - 1.0);
    r.ci95 = 1.959963984540054 * std::sqrt(var / n);
    return r;
}

} // namespace fsde
