#pragma once

/**
 * @file parallel.hpp
 * @brief Deterministic parallel map and fixed-order pairwise summation.
 *
 * Work items are evaluated independently into a buffer and reduced with a
 * fixed binary tree, so results do not depend on the number of threads.
 */

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace calib {

/// Pairwise (tree) sum with a fixed split order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

namespace parallel {

namespace detail {
inline std::atomic<int>& limit() {
    static std::atomic<int> n{0};
    return n;
}
inline bool& nested() {
    thread_local bool flag = false;
    return flag;
}
} // namespace detail

/// Caps worker threads; 0 means hardware concurrency.
inline void set_threads(int n) { detail::limit().store(std::max(0, n)); }

inline int threads() {
    int n = detail::limit().load();
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return n;
}

/// out[i] = f(i) for i in [0, n). Nested calls run serially.
template <class T = double, class F>
std::vector<T> map(std::size_t n, F&& f) {
    std::vector<T> out(n);
    const int nt = std::min<int>(threads(), static_cast<int>(n));
    if (nt <= 1 || detail::nested()) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        detail::nested() = true;
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            try {
                out[i] = f(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
            }
        }
        detail::nested() = false;
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

} // namespace parallel
} // namespace calib
