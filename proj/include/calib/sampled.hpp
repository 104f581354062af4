#pragma once

/**
 * @file sampled.hpp
 * @brief Grid-sampled functions (CSV `x,value`) with a declared tail model.
 */

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "quadrature.hpp"

namespace calib {

namespace detail {
struct SampleTable {
    std::vector<double> x, v, m; // abscissae, values, Hermite slopes

    void build_slopes() {
        const std::size_t n = x.size();
        m.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0) m[i] = (v[1] - v[0]) / (x[1] - x[0]);
            else if (i + 1 == n) m[i] = (v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]);
            else {
                const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
                const double d0 = (v[i] - v[i - 1]) / h0, d1 = (v[i + 1] - v[i]) / h1;
                m[i] = (h1 * d0 + h0 * d1) / (h0 + h1);
            }
        }
    }

    std::pair<double, double> eval(double y) const {
        auto it = std::upper_bound(x.begin(), x.end(), y);
        std::size_t i = std::clamp<std::size_t>(it - x.begin(), 1, x.size() - 1) - 1;
        const double h = x[i + 1] - x[i], t = (y - x[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double val = (2 * t3 - 3 * t2 + 1) * v[i] + (t3 - 2 * t2 + t) * h * m[i] +
                           (-2 * t3 + 3 * t2) * v[i + 1] + (t3 - t2) * h * m[i + 1];
        const double der = ((6 * t2 - 6 * t) * v[i] + (3 * t2 - 4 * t + 1) * h * m[i] +
                            (-6 * t2 + 6 * t) * v[i + 1] + (3 * t2 - 2 * t) * h * m[i + 1]) / h;
        return {val, der};
    }
};
} // namespace detail

/// Cubic Hermite interpolant of the samples, extended outside by the tail model.
inline AmbientFunction make_sampled_function(std::vector<double> xs, std::vector<double> vs, TailModel tail,
                                             std::string name = "sampled") {
    if (xs.size() != vs.size() || xs.size() < 3) throw ConfigError("sampled function needs >= 3 (x,value) rows");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ConfigError("sampled function: x must be strictly increasing");
    auto tab = std::make_shared<detail::SampleTable>();
    tab->x = std::move(xs);
    tab->v = std::move(vs);
    tab->build_slopes();
    const double lo = tab->x.front(), hi = tab->x.back();
    const bool linear_ext = std::holds_alternative<PowerLaw>(tail);
    double left = tab->v.front(), right = tab->v.back();
    if (auto* cl = std::get_if<ConstantLimits>(&tail)) {
        left = cl->left;
        right = cl->right;
    }
    auto f = [tab, lo, hi, left, right, linear_ext](double y) {
        if (y < lo) return linear_ext ? tab->v.front() + tab->m.front() * (y - lo) : left;
        if (y > hi) return linear_ext ? tab->v.back() + tab->m.back() * (y - hi) : right;
        return tab->eval(y).first;
    };
    auto df = [tab, lo, hi, linear_ext](double y) {
        if (y < lo) return linear_ext ? tab->m.front() : 0.0;
        if (y > hi) return linear_ext ? tab->m.back() : 0.0;
        return tab->eval(y).second;
    };
    return AmbientFunction(f, tail, std::move(name), Box{lo, hi}).with_derivative(df);
}

/// Reads a two-column CSV with header `x,value`.
inline AmbientFunction load_csv_function(const std::string& path, TailModel tail) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sampled function file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path);
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a >> b)) throw ConfigError("malformed CSV row in " + path + ": " + line);
        xs.push_back(a);
        vs.push_back(b);
    }
    return make_sampled_function(std::move(xs), std::move(vs), tail, "csv:" + path);
}

} // namespace calib
