#pragma once

/**
 * @file fields.hpp
 * @brief One-parameter families of leaves, leaf-parameter inversion,
 *        potentials, built-in fields and sampled field validation.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "quadrature.hpp"

namespace calib {

struct Interval {
    double lo = 0.0, hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
    double length() const { return hi - lo; }
};

/// Bounded open interval Omega = (a, b) in one dimension.
using Domain = Interval;

class ExtremalField {
public:
    using LeafFn = std::function<double(double t, double x)>;
    using TailFn = std::function<TailModel(double t)>;

    LeafFn leaf;
    LeafFn dleaf_dt;
    LeafFn dleaf_dx; ///< optional; finite differences when empty
    Interval interval;
    TailFn tail = [](double) { return TailModel{NoTail{}}; };
    bool strict_in_domain = true;
    bool nondecreasing_outside = true;
    std::string name = "field";

    double operator()(double t, double x) const { return leaf(t, x); }

    double dx(double t, double x, double step = 1e-4) const {
        if (dleaf_dx) return dleaf_dx(t, x);
        return (-leaf(t, x + 2 * step) + 8 * leaf(t, x + step) - 8 * leaf(t, x - step) + leaf(t, x - 2 * step)) /
               (12 * step);
    }

    /// The leaf u^t as an ambient function.
    AmbientFunction leaf_function(double t) const {
        auto l = leaf;
        AmbientFunction f([l, t](double y) { return l(t, y); }, tail(t), name + "@t");
        if (dleaf_dx) {
            auto d = dleaf_dx;
            f.with_derivative([d, t](double y) { return d(t, y); });
        }
        return f;
    }
};

struct LeafParam {
    const ExtremalField* field = nullptr;
    double tol = 1e-13;
    int max_iter = 200;
};

/// t(x, lambda): the unique t in I with u^t(x) = lambda.
inline double leaf_parameter(const LeafParam& lp, double x, double lambda) {
    const ExtremalField& f = *lp.field;
    double a = f.interval.lo, b = f.interval.hi;
    double fa = f.leaf(a, x) - lambda, fb = f.leaf(b, x) - lambda;
    const double scale = lp.tol * std::max(1.0, std::abs(lambda));
    if (fa > scale || fb < -scale)
        throw AdmissibilityError("leaf_parameter: (x, lambda) = (" + std::to_string(x) + ", " +
                                 std::to_string(lambda) + ") outside foliated region G");
    if (std::abs(fa) <= scale) return a;
    if (std::abs(fb) <= scale) return b;
    int it = 0;
    // bisection down to a small bracket
    const double width0 = b - a;
    while (b - a > 1e-3 * width0 && it < lp.max_iter) {
        const double m = 0.5 * (a + b);
        const double fm = f.leaf(m, x) - lambda;
        if (fm == 0.0) return m;
        if (fm < 0) { a = m; fa = fm; } else { b = m; fb = fm; }
        ++it;
    }
    // safeguarded secant (Illinois variant) polish
    int side = 0;
    while (it < lp.max_iter) {
        double c = (a * fb - b * fa) / (fb - fa);
        if (!(c > a && c < b)) c = 0.5 * (a + b);
        const double fc = f.leaf(c, x) - lambda;
        if (std::abs(fc) <= 0.01 * scale || b - a < 1e-15 * std::max(1.0, std::abs(c))) return c;
        if (fc < 0) {
            a = c; fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = c; fb = fc;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
        ++it;
    }
    const double c = 0.5 * (a + b);
    if (std::abs(f.leaf(c, x) - lambda) > scale) throw NumericError("leaf_parameter: no convergence");
    return c;
}

inline double leaf_parameter(const ExtremalField& f, double x, double lambda) {
    return leaf_parameter(LeafParam{&f}, x, lambda);
}

// ----------------------------------------------------------- potentials

struct Potential {
    std::string name;
    std::function<double(double)> F;
    std::function<double(double)> Fprime;
};

inline Potential zero_potential() {
    return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }};
}
/// F(u) = 1 - cos u.
inline Potential cosine_well() {
    return {"cosine-well", [](double u) { return 1.0 - std::cos(u); }, [](double u) { return std::sin(u); }};
}
/// F(u) = -u^2/2.
inline Potential negative_quadratic() {
    return {"negative-quadratic", [](double u) { return -0.5 * u * u; }, [](double u) { return -u; }};
}

inline const std::map<std::string, Potential (*)()>& potential_registry() {
    static const std::map<std::string, Potential (*)()> reg{
        {"zero", &zero_potential}, {"cosine-well", &cosine_well}, {"negative-quadratic", &negative_quadratic}};
    return reg;
}

inline Potential potential_by_name(const std::string& name) {
    auto& reg = potential_registry();
    auto it = reg.find(name);
    if (it == reg.end()) {
        std::string opts;
        for (auto& [k, v] : reg) opts += (opts.empty() ? "" : ", ") + k;
        throw ConfigError("unknown potential '" + name + "' (valid: " + opts + ")");
    }
    return it->second();
}

/// Sampled check that F' matches F by central differences.
inline bool potential_consistent(const Potential& P, double lo, double hi, int samples = 41) {
    const double h = 1e-4;
    for (int i = 0; i < samples; ++i) {
        const double u = lo + (hi - lo) * i / (samples - 1);
        const double fd = (P.F(u + h) - P.F(u - h)) / (2 * h);
        if (std::abs(fd - P.Fprime(u)) > 1e-6 * std::max(1.0, std::abs(fd))) return false;
    }
    return true;
}

// -------------------------------------------------------- built-in fields

/// u^t(x) = profile(x + t).
inline ExtremalField make_translation_field(const AmbientFunction& profile, Interval I) {
    // sampled monotonicity over a wide window
    double prev = profile(-1e3);
    for (int i = 1; i <= 4000; ++i) {
        const double y = -1e3 + 2e3 * i / 4000.0;
        const double v = profile(y);
        // a saturating profile may sit exactly on its limit in floating point
        const auto* lim = std::get_if<ConstantLimits>(&profile.tail());
        const bool flat_ok = lim && v == prev && (v == lim->left || v == lim->right);
        if (!(v > prev) && !flat_ok)
            throw ValidationError("make_translation_field: profile is not strictly increasing near y = " +
                                  std::to_string(y));
        prev = v;
    }
    ExtremalField f;
    f.name = "translation:" + profile.name();
    f.interval = I;
    f.leaf = [profile](double t, double x) { return profile(x + t); };
    f.dleaf_dt = [profile](double t, double x) { return profile.derivative(x + t); };
    if (profile.has_derivative()) f.dleaf_dx = f.dleaf_dt;
    const TailModel tm = profile.tail();
    f.tail = [tm](double) { return tm; };
    return f;
}

inline AmbientFunction arctan_profile() {
    return AmbientFunction([](double y) { return 2.0 * std::atan(y); },
                           ConstantLimits{-std::numbers::pi, std::numbers::pi}, "2atan")
        .with_derivative([](double y) { return 2.0 / (1.0 + y * y); })
        .with_second_derivative([](double y) { return -4.0 * y / ((1.0 + y * y) * (1.0 + y * y)); });
}

inline AmbientFunction identity_profile() {
    return AmbientFunction([](double y) { return y; }, PowerLaw{1.0}, "identity")
        .with_derivative([](double) { return 1.0; })
        .with_second_derivative([](double) { return 0.0; });
}

inline AmbientFunction tanh_profile() {
    return AmbientFunction([](double y) { return std::tanh(y); }, ConstantLimits{-1.0, 1.0}, "tanh")
        .with_derivative([](double y) { return 1.0 / (std::cosh(y) * std::cosh(y)); });
}

/// Layer solutions 2 arctan(x + t) of the half-Laplacian sine equation.
inline ExtremalField make_peierls_nabarro_field(Interval I = {-4.0, 4.0}) {
    ExtremalField f = make_translation_field(arctan_profile(), I);
    f.name = "peierls-nabarro";
    return f;
}

/// u^t(x) = x + t.
inline ExtremalField make_linear_field(Interval I = {-4.0, 4.0}) {
    ExtremalField f = make_translation_field(identity_profile(), I);
    f.name = "linear";
    return f;
}

/// u^t(x) = t.
inline ExtremalField make_constant_field(Interval I = {-2.0, 2.0}) {
    ExtremalField f;
    f.name = "constant";
    f.interval = I;
    f.leaf = [](double t, double) { return t; };
    f.dleaf_dt = [](double, double) { return 1.0; };
    f.dleaf_dx = [](double, double) { return 0.0; };
    f.tail = [](double t) { return TailModel{ConstantLimits{t, t}}; };
    return f;
}

// ------------------------------------------------------------ validation

struct ConditionVerdict {
    std::string condition;
    bool pass = false;
    double measure = 0.0; ///< the sampled quantity the verdict is based on
    std::string note;
};

struct ValidationReport {
    std::vector<ConditionVerdict> conditions;
    bool pass() const {
        return std::all_of(conditions.begin(), conditions.end(), [](auto& c) { return c.pass; });
    }
    const ConditionVerdict* find(const std::string& name) const {
        for (auto& c : conditions)
            if (c.condition == name) return &c;
        return nullptr;
    }
};

/// Sampled checks of continuity, monotonicity, and the regularity/growth conditions.
inline ValidationReport validate_field(const ExtremalField& f, Domain omega, const QuadratureScheme& sch,
                                       const FracParams& p, std::optional<Interval> J = std::nullopt) {
    const Interval K = J.value_or(f.interval);
    ValidationReport rep;
    auto modulus = [&](int nx, int nt) {
        double m = 0.0;
        bool finite = true;
        for (int i = 0; i <= nt; ++i)
            for (int j = 0; j <= nx; ++j) {
                const double t = K.lo + K.length() * i / nt, x = omega.lo + omega.length() * j / nx;
                const double v = f.leaf(t, x);
                if (!std::isfinite(v)) finite = false;
                if (i < nt) m = std::max(m, std::abs(f.leaf(K.lo + K.length() * (i + 1) / nt, x) - v));
                if (j < nx) m = std::max(m, std::abs(f.leaf(t, omega.lo + omega.length() * (j + 1) / nx) - v));
            }
        return finite ? m : inf;
    };
    {
        const double m1 = modulus(20, 20), m2 = modulus(80, 80);
        ConditionVerdict c{"joint-continuity", std::isfinite(m2) && (m2 <= 0.5 * m1 || m2 < 1e-12), m2,
                           "sampled modulus on a refined grid"};
        rep.conditions.push_back(c);
    }
    {
        bool strict = true, outside = true, dt_ok = true;
        const int nt = 40, nx = 40;
        double worst = inf;
        for (int j = 0; j <= nx; ++j) {
            const double x = omega.lo + omega.length() * j / nx;
            for (int i = 0; i < nt; ++i) {
                const double t1 = K.lo + K.length() * i / nt, t2 = K.lo + K.length() * (i + 1) / nt;
                const double d = f.leaf(t2, x) - f.leaf(t1, x);
                worst = std::min(worst, d);
                if (!(d > 0)) strict = false;
                if (!(f.dleaf_dt(t1, x) >= 0)) dt_ok = false;
            }
            const double xo1 = omega.lo - (1 + 10.0 * j / nx), xo2 = omega.hi + (1 + 10.0 * j / nx);
            for (double xo : {xo1, xo2})
                for (int i = 0; i < nt; ++i) {
                    const double t1 = K.lo + K.length() * i / nt, t2 = K.lo + K.length() * (i + 1) / nt;
                    if (!(f.leaf(t2, xo) >= f.leaf(t1, xo))) outside = false;
                }
        }
        rep.conditions.push_back({"strictly-increasing-in-domain", strict && dt_ok, worst, "sampled"});
        rep.conditions.push_back({"nondecreasing-outside", outside, 0.0, "sampled verdict only (a.e. not certifiable)"});
    }
    {
        double sup = 0.0;
        for (int i = 0; i <= 20; ++i) {
            const double t = K.lo + K.length() * i / 20;
            for (int j = 0; j <= 400; ++j) {
                const double x = -100.0 + 200.0 * j / 400;
                sup = std::max(sup, std::abs(f.dleaf_dt(t, x)));
            }
        }
        rep.conditions.push_back({"bounded-dt", std::isfinite(sup), sup, "sup over J x [-100,100]"});
    }
    {
        bool finite = true;
        double worst = 0.0;
        for (int i = 0; i <= 4; ++i) {
            const double t = K.lo + K.length() * i / 4;
            auto n = l1s_norm(f.leaf_function(t), sch, p);
            finite = finite && n.finite && std::isfinite(n.value);
            worst = std::max(worst, n.value);
        }
        rep.conditions.push_back({"l1s-finite", finite, worst, "L1_s norm of sampled leaves"});
    }
    {
        // C^{2s+alpha} proxy: second differences bounded and stable under refinement on N
        const double pad = 0.25 * omega.length();
        auto bound = [&](double h) {
            double b = 0.0;
            for (int i = 0; i <= 8; ++i) {
                const double t = K.lo + K.length() * i / 8;
                for (int j = 0; j <= 200; ++j) {
                    const double x = omega.lo - pad + (omega.length() + 2 * pad) * j / 200;
                    b = std::max(b, std::abs(f.leaf(t, x + h) - 2 * f.leaf(t, x) + f.leaf(t, x - h)) / (h * h));
                }
            }
            return b;
        };
        const double b1 = bound(1e-2), b2 = bound(5e-3);
        const bool ok = std::isfinite(b2) && b2 <= 1.5 * b1 + 1e-6;
        rep.conditions.push_back({"regularity-proxy", ok, b2, "second-difference bound on N"});
    }
    return rep;
}

} // namespace calib
