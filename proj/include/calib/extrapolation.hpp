#pragma once

/**
 * @file extrapolation.hpp
 * @brief Richardson extrapolation over a ladder of (step, value) pairs.
 */

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace calib {

struct Extrapolation {
    double limit = 0.0;
    double error_estimate = 0.0;
    double order = 0.0;
    bool warning = false; ///< ladder not monotonically converging
};

namespace detail {
inline double ladder_spread(const std::vector<std::pair<double, double>>& pts) {
    double last = pts.back().second, spread = 0.0;
    for (auto& p : pts) spread = std::max(spread, std::abs(p.second - last));
    return spread;
}

// Solves (h1^p - h2^p)/(h2^p - h3^p) = q for p by bisection.
inline double fit_order(double h1, double h2, double h3, double q) {
    auto g = [&](double p) {
        return (std::pow(h1, p) - std::pow(h2, p)) / (std::pow(h2, p) - std::pow(h3, p)) - q;
    };
    double lo = 1e-3, hi = 16.0;
    if (g(lo) * g(hi) > 0) return std::log(q) / std::log(h2 / h3);
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (g(lo) * g(mid) <= 0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

/// Fits value = limit + C step^order through the last three points.
inline Extrapolation richardson_extrapolate(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) throw ConfigError("richardson_extrapolate needs at least 3 ladder points");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].first < pts[i - 1].first) || !(pts[i].first > 0))
            throw ConfigError("ladder steps must be positive and strictly decreasing");
    const std::size_t m = pts.size();
    const auto [h1, v1] = pts[m - 3];
    const auto [h2, v2] = pts[m - 2];
    const auto [h3, v3] = pts[m - 1];
    const double d1 = v1 - v2, d2 = v2 - v3;
    Extrapolation out;
    if (d1 == 0.0 && d2 == 0.0) {
        out.limit = v3;
        return out;
    }
    if (d2 == 0.0) {
        out.limit = v3;
        out.error_estimate = std::abs(d1) * 1e-3;
        return out;
    }
    const double q = d1 / d2;
    if (!(q > 1.0)) {
        out.limit = v3;
        out.error_estimate = detail::ladder_spread(pts);
        out.warning = true;
        return out;
    }
    out.order = detail::fit_order(h1, h2, h3, q);
    out.limit = v3 + (v3 - v2) / (std::pow(h2 / h3, out.order) - 1.0);
    out.error_estimate = std::abs(v3 - out.limit);
    return out;
}

/// Two-point extrapolation with a known convergence order.
inline Extrapolation extrapolate_known_order(double h1, double v1, double h2, double v2, double order) {
    Extrapolation out;
    out.order = order;
    out.limit = v2 + (v2 - v1) / (std::pow(h1 / h2, order) - 1.0);
    out.error_estimate = std::abs(v2 - out.limit);
    return out;
}

} // namespace calib
