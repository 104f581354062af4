#pragma once

/**
 * @file gauss_legendre.hpp
 * @brief Gauss-Legendre rules on [-1, 1], computed once per order.
 */

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"

namespace calib {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {
inline GaussRule build_gauss(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}
} // namespace detail

/// Rule of order n (1 <= n <= 128); references stay valid for the program lifetime.
inline const GaussRule& gauss_legendre(int n) {
    if (n < 1 || n > 128) throw ConfigError("Gauss-Legendre order must lie in [1, 128]");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::build_gauss(n)).first;
    return it->second;
}

/// Sum of GL contributions of f on each consecutive panel of `breaks`.
template <class F>
double integrate_panels(F&& f, const std::vector<double>& breaks, int order) {
    const GaussRule& g = gauss_legendre(order);
    std::vector<double> parts;
    parts.reserve(breaks.size());
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        if (!(b > a)) continue;
        const double m = 0.5 * (a + b), r = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < order; ++i) s += g.weights[i] * f(m + r * g.nodes[i]);
        parts.push_back(r * s);
    }
    return pairwise_sum(parts);
}

} // namespace calib
