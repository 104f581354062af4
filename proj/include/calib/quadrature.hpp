#pragma once

/**
 * @file quadrature.hpp
 * @brief Riesz kernel, normalization, and singular-integral quadrature for
 *        the fractional Laplacian in one dimension.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "extrapolation.hpp"
#include "gauss_legendre.hpp"
#include "parallel.hpp"

namespace calib {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// c_{n,s} = 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|).
inline double normalization_constant(int n, double s) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fractional order s must lie in (0,1)");
    if (n != 1 && n != 2) throw DomainError("dimension n must be 1 or 2");
    return std::pow(4.0, s) * std::tgamma(0.5 * n + s) /
           (std::pow(std::numbers::pi, 0.5 * n) * std::abs(std::tgamma(-s)));
}

struct FracParams {
    int n = 1;
    double s = 0.5;
    double c = 1.0 / std::numbers::pi;

    static FracParams make(double s, int n = 1) { return {n, s, normalization_constant(n, s)}; }
};

inline double riesz_kernel(double z, const FracParams& p) {
    if (z == 0.0) throw DomainError("kernel singularity at z = 0");
    return p.c * std::pow(std::abs(z), -p.n - 2.0 * p.s);
}

inline double riesz_kernel(std::span<const double> z, const FracParams& p) {
    double r2 = 0.0;
    for (double v : z) r2 += v * v;
    if (r2 == 0.0) throw DomainError("kernel singularity at z = 0");
    return p.c * std::pow(r2, -0.5 * (p.n + 2.0 * p.s));
}

// ---------------------------------------------------------------- tails

/// u(y) tends to `left` as y -> -inf and to `right` as y -> +inf.
struct ConstantLimits {
    double left = 0.0, right = 0.0;
};
/// |u(y)| grows (or decays, exponent < 0) like |y|^exponent.
struct PowerLaw {
    double exponent = 0.0;
};
/// Bounded, no asymptotic structure known; the quadrature resolves it uniformly.
struct NoTail {};

using TailModel = std::variant<NoTail, ConstantLimits, PowerLaw>;

inline std::string tail_name(const TailModel& t) {
    if (std::holds_alternative<ConstantLimits>(t)) return "analytic-constant-limit";
    if (std::holds_alternative<PowerLaw>(t)) return "power-decay";
    return "none";
}

/// Growth exponent implied by the model (0 for bounded tails).
inline double growth_exponent(const TailModel& t) {
    if (auto* p = std::get_if<PowerLaw>(&t)) return p->exponent;
    return 0.0;
}

// ------------------------------------------------------- ambient function

struct Box {
    double lo = -inf, hi = inf;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

class AmbientFunction {
public:
    using Fn = std::function<double(double)>;

    AmbientFunction() = default;
    AmbientFunction(Fn f, TailModel tail, std::string name = "function", Box smooth = {})
        : f_(std::move(f)), tail_(tail), name_(std::move(name)), smooth_(smooth) {}

    AmbientFunction& with_derivative(Fn d1) { d1_ = std::move(d1); return *this; }
    AmbientFunction& with_second_derivative(Fn d2) { d2_ = std::move(d2); return *this; }

    double operator()(double y) const { return f_(y); }

    double derivative(double x, double step = 1e-3) const {
        if (d1_) return (*d1_)(x);
        return (-f_(x + 2 * step) + 8 * f_(x + step) - 8 * f_(x - step) + f_(x - 2 * step)) / (12 * step);
    }

    double second_derivative(double x, double step = 1e-3) const {
        if (d2_) return (*d2_)(x);
        return (-f_(x + 2 * step) + 16 * f_(x + step) - 30 * f_(x) + 16 * f_(x - step) - f_(x - 2 * step)) /
               (12 * step * step);
    }

    bool has_derivative() const { return d1_.has_value(); }
    const TailModel& tail() const { return tail_; }
    const std::string& name() const { return name_; }
    const Box& smooth_neighborhood() const { return smooth_; }
    const Fn& evaluator() const { return f_; }

private:
    Fn f_;
    std::optional<Fn> d1_, d2_;
    TailModel tail_ = NoTail{};
    std::string name_;
    Box smooth_;
};

inline AmbientFunction constant_function(double v) {
    return AmbientFunction([v](double) { return v; }, ConstantLimits{v, v}, "constant")
        .with_derivative([](double) { return 0.0; })
        .with_second_derivative([](double) { return 0.0; });
}

// --------------------------------------------------------------- scheme

struct LadderStep {
    double eps;
    double h;
};

struct QuadratureScheme {
    double eps = 0.02;
    double outer_radius = 1e4;
    double h = 1.0 / 64;
    std::vector<LadderStep> ladder{{0.04, 0.02}, {0.02, 0.01}, {0.01, 0.005}};
    int gauss_order = 8;
    double grading = 1.0;    ///< radial panel width relative to distance
    double max_panel = inf;  ///< cap on radial panel width

    void validate(double domain_diameter = 0.0) const {
        if (!(eps > 0) || !(h > 0) || !(outer_radius > 0)) throw ConfigError("scheme: eps, h, R must be positive");
        if (eps < h) throw ConfigError("scheme: eps must be >= h");
        if (!(outer_radius > 4.0 * domain_diameter)) throw ConfigError("scheme: outer radius must exceed the domain diameter");
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            if (ladder[i].eps < ladder[i].h) throw ConfigError("scheme: ladder entry with eps < h");
            if (i > 0 && !(ladder[i].eps < ladder[i - 1].eps && ladder[i].h < ladder[i - 1].h))
                throw ConfigError("scheme: ladder entries must strictly decrease in both coordinates");
        }
        if (gauss_order < 2 || !(grading > 0)) throw ConfigError("scheme: bad panel rule");
    }

    /// Halved resolution used for error estimates.
    QuadratureScheme coarsened() const {
        QuadratureScheme c = *this;
        c.h = 2 * h;
        c.gauss_order = std::max(4, gauss_order - 2);
        c.grading = std::min(2.0, 1.5 * grading);
        return c;
    }

    /// Ladder eps_k = eps0 / 2^k, h_k = eps_k / 2.
    static std::vector<LadderStep> geometric_ladder(double eps0, int k) {
        std::vector<LadderStep> l;
        for (int i = 0; i < k; ++i) l.push_back({eps0 / std::pow(2.0, i), eps0 / std::pow(2.0, i + 1)});
        return l;
    }
};

// ------------------------------------------------------ radial panels

/// Panel breaks on [z0, z1] with width clamp(grading*z, min_width, max_panel).
inline std::vector<double> radial_breaks(double z0, double z1, double grading, double min_width, double max_panel) {
    std::vector<double> b{z0};
    double z = z0;
    while (z < z1) {
        double w = std::clamp(grading * z, min_width, max_panel);
        z = std::min(z1, z + w);
        if (z1 - z < 0.25 * w) z = z1;
        b.push_back(z);
    }
    return b;
}

/// Sum of two GL integrals of f over [z0, z1] (radial rule).
template <class F>
double integrate_radial(F&& f, double z0, double z1, int order, double grading, double min_width,
                        double max_panel) {
    if (!(z1 > z0)) return 0.0;
    return integrate_panels(f, radial_breaks(z0, z1, grading, min_width, max_panel), order);
}

struct TailEstimate {
    double value = 0.0;
    double error = 0.0;
    bool divergent = false;
};

/// Tail beyond R from two dyadic shells S1 = [R/4,R/2], S0 = [R/2,R] and a model ratio.
inline TailEstimate shell_tail(double s1, double s0, double model_ratio) {
    TailEstimate t;
    const double robs = (s1 != 0.0) ? s0 / s1 : 0.0;
    if (model_ratio >= 1.0) {
        if (std::abs(robs) < 0.95) {
            t.value = s0 * robs / (1 - robs);
            t.error = std::abs(t.value) + std::abs(s0);
            return t;
        }
        if (s0 == 0.0) return t;
        t.divergent = true;
        t.value = 0.0;
        t.error = inf;
        return t;
    }
    t.value = s0 * model_ratio / (1 - model_ratio);
    const double alt = (std::abs(robs) < 0.95) ? s0 * robs / (1 - robs) : s0 / (1 - model_ratio);
    t.error = std::abs(alt - t.value);
    return t;
}

// --------------------------------------------------- fractional Laplacian

struct ValueWithError {
    double value = 0.0;
    double error_estimate = 0.0;
    bool warning = false;
};

namespace detail {
inline void check_finite(double v, double y, const char* what) {
    if (!std::isfinite(v))
        throw NumericError(std::string(what) + ": non-finite evaluator value at y = " + std::to_string(y));
}

struct RadialResult {
    double value;
    double tail_error;
};

// Integral over [eps, inf) of (2u(x) - u(x+z) - u(x-z)) c z^{-1-2s}.
inline RadialResult second_difference_integral(const AmbientFunction& u, double x, double eps, double min_width,
                                               const QuadratureScheme& sch, const FracParams& p) {
    const double ux = u(x);
    detail::check_finite(ux, x, "frac_laplacian");
    const double R = sch.outer_radius;
    const bool bounded_only = std::holds_alternative<NoTail>(u.tail());
    const double cap = bounded_only ? std::min(sch.max_panel, 0.5) : sch.max_panel;
    auto g = [&](double z) {
        const double a = u(x + z), b = u(x - z);
        if (!std::isfinite(a)) detail::check_finite(a, x + z, "frac_laplacian");
        if (!std::isfinite(b)) detail::check_finite(b, x - z, "frac_laplacian");
        return (2 * ux - a - b) * p.c * std::pow(z, -1.0 - 2.0 * p.s);
    };
    const double two_s = 2.0 * p.s;
    if (auto* cl = std::get_if<ConstantLimits>(&u.tail())) {
        const double body = integrate_radial(g, eps, R, sch.gauss_order, sch.grading, min_width, cap);
        const double tail = (2 * ux - cl->left - cl->right) * p.c * std::pow(R, -two_s) / two_s;
        return {body + tail, 0.0};
    }
    const double body = integrate_radial(g, eps, R / 4, sch.gauss_order, sch.grading, min_width, cap);
    const double s1 = integrate_radial(g, R / 4, R / 2, sch.gauss_order, sch.grading, min_width, cap);
    const double s0 = integrate_radial(g, R / 2, R, sch.gauss_order, sch.grading, min_width, cap);
    const double ratio = std::pow(2.0, growth_exponent(u.tail()) - two_s);
    TailEstimate t = shell_tail(s1, s0, ratio);
    if (t.divergent) throw NumericError("frac_laplacian: divergent tail for " + u.name());
    return {body + s1 + s0 + t.value, t.error};
}
} // namespace detail

/// (-Delta)^s_eps u(x), integrating over |x-y| > eps.
inline double frac_laplacian_eps(const AmbientFunction& u, double x, const QuadratureScheme& sch,
                                 const FracParams& p) {
    if (!u.smooth_neighborhood().contains(x)) throw DomainError("frac_laplacian_eps: x outside smooth neighborhood");
    if (!(sch.eps > 0)) throw ConfigError("frac_laplacian_eps: eps must be positive");
    return detail::second_difference_integral(u, x, sch.eps, sch.h, sch, p).value;
}

/// Principal value (-Delta)^s u(x) by ladder extrapolation.
inline ValueWithError frac_laplacian(const AmbientFunction& u, double x, const QuadratureScheme& sch,
                                     const FracParams& p) {
    if (!u.smooth_neighborhood().contains(x)) throw DomainError("frac_laplacian: x outside smooth neighborhood");
    if (sch.ladder.size() < 2) throw ConfigError("frac_laplacian: ladder needs at least 2 entries");
    const double d2 = u.second_derivative(x);
    detail::check_finite(d2, x, "frac_laplacian");
    const double q = 2.0 - 2.0 * p.s;
    std::vector<std::pair<double, double>> pts;
    double tail_err = 0.0;
    for (const auto& step : sch.ladder) {
        auto r = detail::second_difference_integral(u, x, step.eps, step.h, sch, p);
        // inner ball: the second difference is -u''(x) z^2 to leading order
        const double inner = -p.c * d2 * std::pow(step.eps, q) / q;
        pts.emplace_back(step.eps, r.value + inner);
        tail_err = std::max(tail_err, r.tail_error);
    }
    Extrapolation ex;
    if (pts.size() >= 3) ex = richardson_extrapolate(pts);
    else ex = extrapolate_known_order(pts[0].first, pts[0].second, pts[1].first, pts[1].second, q + 2.0);
    double spread = 0.0;
    for (std::size_t i = pts.size() - 2; i < pts.size(); ++i) spread = std::max(spread, std::abs(pts[i].second - ex.limit));
    const double floor = 64 * std::numeric_limits<double>::epsilon() * (std::abs(u(x)) + 1.0) * p.c *
                         std::pow(sch.ladder.back().eps, -2.0 * p.s);
    return {ex.limit, spread + ex.error_estimate + tail_err + floor, ex.warning};
}

// --------------------------------------------------------- L^1_s norm

struct L1sNorm {
    double value = 0.0;
    bool finite = true;
};

namespace detail {
// Integral over [R, inf) of dy / (1 + y^q), q > 1, R >= 2.
inline double weight_tail(double R, double q) {
    double sum = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double e = q * (k + 1) - 1.0;
        const double term = std::pow(R, -e) / e;
        sum += (k % 2 == 0) ? term : -term;
        if (term < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}
} // namespace detail

inline L1sNorm l1s_norm(const AmbientFunction& u, const QuadratureScheme& sch, const FracParams& p) {
    const double q = 1.0 + 2.0 * p.s;
    const double R = std::max(sch.outer_radius, 4.0);
    const bool bounded_only = std::holds_alternative<NoTail>(u.tail());
    const double cap = bounded_only ? std::min(sch.max_panel, 0.5) : sch.max_panel;
    auto g = [&](double y) {
        const double v = u(y);
        detail::check_finite(v, y, "l1s_norm");
        return std::abs(v) / (1.0 + std::pow(std::abs(y), q));
    };
    auto sym = [&](double y) { return g(y) + g(-y); };
    double body = integrate_radial(sym, 0.0, 1.0, sch.gauss_order, 1.0, 0.0625, cap) +
                  integrate_radial(sym, 1.0, R, sch.gauss_order, 0.5 * sch.grading, sch.h, cap);
    L1sNorm out;
    const double wt = detail::weight_tail(R, q);
    if (auto* cl = std::get_if<ConstantLimits>(&u.tail())) {
        out.value = body + (std::abs(cl->left) + std::abs(cl->right)) * wt;
        return out;
    }
    const double pexp = growth_exponent(u.tail());
    if (pexp >= 2.0 * p.s) {
        out.value = body;
        out.finite = false;
        return out;
    }
    const double edge = std::abs(u(R)) + std::abs(u(-R));
    out.value = body + edge * std::pow(R, -2.0 * p.s) / (2.0 * p.s - pexp);
    return out;
}

} // namespace calib
