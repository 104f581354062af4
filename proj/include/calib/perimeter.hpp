#pragma once

/**
 * @file perimeter.hpp
 * @brief Nonlocal perimeter of interval unions in one dimension, nonlocal
 *        mean curvature, and the sign-kernel calibration for level-set
 *        families, in direct (closed form) and alternative (quadrature) form.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "extrapolation.hpp"
#include "fields.hpp"
#include "nonlocal_calibration.hpp"

namespace calib {

/// K(z) = scale * |z|^{-n-2s}.
struct KernelParams {
    double s = 0.25;
    double scale = 1.0;
    int n = 1;
};

/// Finite union of open intervals on the line, sorted and disjoint.
class IntervalSet {
public:
    using Piece = std::pair<double, double>;

    IntervalSet() = default;
    explicit IntervalSet(std::vector<Piece> pieces) : p_(std::move(pieces)) { normalize(); }

    static IntervalSet empty() { return {}; }
    static IntervalSet line() { return IntervalSet({{-inf, inf}}); }
    static IntervalSet halfline_right(double c) { return IntervalSet({{c, inf}}); }
    static IntervalSet halfline_left(double c) { return IntervalSet({{-inf, c}}); }

    const std::vector<Piece>& pieces() const { return p_; }
    bool is_empty() const { return p_.empty(); }

    bool contains(double x) const {
        for (const auto& [a, b] : p_)
            if (x > a && x < b) return true;
        return false;
    }

    /// Finite boundary points.
    std::vector<double> boundary() const {
        std::vector<double> r;
        for (const auto& [a, b] : p_) {
            if (std::isfinite(a)) r.push_back(a);
            if (std::isfinite(b)) r.push_back(b);
        }
        return r;
    }

    IntervalSet complement() const {
        std::vector<Piece> r;
        double cur = -inf;
        for (const auto& [a, b] : p_) {
            if (a > cur) r.push_back({cur, a});
            cur = b;
        }
        if (cur < inf) r.push_back({cur, inf});
        return IntervalSet(std::move(r));
    }

    IntervalSet intersect(const IntervalSet& o) const {
        std::vector<Piece> r;
        for (const auto& [a, b] : p_)
            for (const auto& [c, d] : o.p_) {
                const double lo = std::max(a, c), hi = std::min(b, d);
                if (hi > lo) r.push_back({lo, hi});
            }
        return IntervalSet(std::move(r));
    }
    IntervalSet unite(const IntervalSet& o) const {
        auto r = p_;
        r.insert(r.end(), o.p_.begin(), o.p_.end());
        return IntervalSet(std::move(r));
    }
    IntervalSet minus(const IntervalSet& o) const { return intersect(o.complement()); }

    bool operator==(const IntervalSet& o) const { return p_ == o.p_; }

private:
    void normalize() {
        std::erase_if(p_, [](const Piece& q) { return !(q.second > q.first); });
        std::sort(p_.begin(), p_.end());
        std::vector<Piece> m;
        for (const auto& q : p_) {
            if (!m.empty() && q.first <= m.back().second) m.back().second = std::max(m.back().second, q.second);
            else m.push_back(q);
        }
        p_ = std::move(m);
    }
    std::vector<Piece> p_;
};

inline IntervalSet as_set(Domain om) { return IntervalSet({{om.lo, om.hi}}); }

/// Halfspace {x : x.e > c} in the plane, e a unit vector.
struct Halfspace {
    double e1 = 1.0, e2 = 0.0, c = 0.0;
    bool contains(double x1, double x2) const { return x1 * e1 + x2 * e2 > c; }
};

namespace detail {

/// h'' = z^{-1-2s}, h(0) = 0, for 0 < s < 1/2.
inline double perim_h(double z, double s) {
    return -std::pow(z, 1 - 2 * s) / (2 * s * (1 - 2 * s));
}

/// Integral of |x-y|^{-1-2s} over x in (a1,a2), y in (b1,b2), with a2 <= b1.
inline double ordered_pair_integral(double a1, double a2, double b1, double b2, double s) {
    const bool lo_inf = !std::isfinite(a1), hi_inf = !std::isfinite(b2);
    if (lo_inf && hi_inf) return inf;
    if (hi_inf) return perim_h(b1 - a2, s) - perim_h(b1 - a1, s);
    if (lo_inf) return perim_h(b1 - a2, s) - perim_h(b2 - a2, s);
    return perim_h(b2 - a1, s) - perim_h(b2 - a2, s) - perim_h(b1 - a1, s) + perim_h(b1 - a2, s);
}

/// Integral of |x-y|^{-1-2s} over disjoint intervals A x B.
inline double pair_integral(const IntervalSet::Piece& A, const IntervalSet::Piece& B, double s) {
    if (A.second <= B.first) return ordered_pair_integral(A.first, A.second, B.first, B.second, s);
    if (B.second <= A.first) return ordered_pair_integral(B.first, B.second, A.first, A.second, s);
    throw DomainError("pair_integral: overlapping intervals");
}

/// Sum over piece pairs of sgn(A,B) * pair integral, where sgn(A,B) = +1 if A right of B when signed.
inline double set_pair_integral(const IntervalSet& A, const IntervalSet& B, double s, bool signed_by_order) {
    double r = 0.0;
    for (const auto& a : A.pieces())
        for (const auto& b : B.pieces()) {
            const double v = pair_integral(a, b, s);
            r += signed_by_order ? (a.first >= b.second ? v : -v) : v;
        }
    return r;
}

inline double kernel_scale_1d(const KernelParams& k) {
    if (k.n == 1) return k.scale;
    if (k.n == 2) return k.scale * std::sqrt(std::numbers::pi) * std::tgamma(0.5 + k.s) / std::tgamma(1.0 + k.s);
    throw DomainError("kernel dimension must be 1 or 2");
}

inline void check_kernel(const KernelParams& k) {
    if (!(k.s > 0 && k.s < 1)) throw DomainError("kernel exponent s must lie in (0,1)");
    if (!(k.scale > 0)) throw DomainError("kernel scale must be positive");
}

} // namespace detail

/// Half the double integral of |1_F(x)-1_F(y)| K over Q(Omega), in closed form.
inline EnergyValue nonlocal_perimeter(const IntervalSet& F, Domain om, const KernelParams& k) {
    detail::check_kernel(k);
    EnergyValue e;
    e.provenance = "closed-form";
    const IntervalSet O = as_set(om), Fc = F.complement();
    const IntervalSet Fin = F.intersect(O), Fout = F.minus(O), Fcin = Fc.intersect(O);
    if (F.is_empty() || Fc.is_empty()) {
        e.blocks = {{"omega_all", 0.0}, {"ext_omega", 0.0}};
        return e;
    }
    if (k.s >= 0.5) {
        e.divergent = true;
        e.value = inf;
        return e;
    }
    const double b1 = k.scale * detail::set_pair_integral(Fin, Fc, k.s, false);
    const double b2 = k.scale * detail::set_pair_integral(Fout, Fcin, k.s, false);
    e.value = b1 + b2;
    e.blocks = {{"omega_all", b1}, {"ext_omega", b2}};
    e.divergent = !std::isfinite(e.value);
    e.error_estimate = 1e-14 * std::max(1.0, std::abs(e.value));
    return e;
}

/// Truncated PV of (1_{F^c} - 1_F) K about a boundary point x, over |x-y| > eps.
inline double mean_curvature_truncated(const IntervalSet& F, double x, double eps, const KernelParams& k) {
    auto radial = [&](double d1, double d2) { // integral of r^{-1-2s} over (d1, d2)
        const double a = std::pow(d1, -2 * k.s), b = std::isfinite(d2) ? std::pow(d2, -2 * k.s) : 0.0;
        return (a - b) / (2 * k.s);
    };
    double r = 0.0;
    auto add = [&](const IntervalSet& S, double sgn) {
        for (const auto& [a, b] : S.pieces()) {
            // right of x
            const double r1 = std::max(a - x, eps), r2 = b - x;
            if (r2 > r1) r += sgn * radial(r1, r2);
            // left of x
            const double l1 = std::max(x - b, eps), l2 = x - a;
            if (l2 > l1) r += sgn * radial(l1, l2);
        }
    };
    add(F.complement(), 1.0);
    add(F, -1.0);
    return k.scale * r;
}

/// Nonlocal mean curvature at a boundary point of an interval union.
inline Extrapolation nonlocal_mean_curvature(const IntervalSet& F, double x, const KernelParams& k,
                                             const QuadratureScheme& sch = {}) {
    detail::check_kernel(k);
    const auto bd = F.boundary();
    if (std::none_of(bd.begin(), bd.end(), [&](double b) { return std::abs(b - x) <= 1e-12 * std::max(1.0, std::abs(x)); }))
        throw DomainError("nonlocal_mean_curvature: x is not on the boundary of F");
    double gap = inf;
    for (double b : bd)
        if (std::abs(b - x) > 1e-12) gap = std::min(gap, std::abs(b - x));
    const double shrink = std::min(1.0, 0.5 * gap / sch.ladder.front().eps);
    std::vector<std::pair<double, double>> pts;
    for (const auto& st : sch.ladder) pts.push_back({st.eps * shrink, mean_curvature_truncated(F, x, st.eps * shrink, k)});
    if (pts.size() < 3) return {pts.back().second, 0.0, 0.0, false};
    return richardson_extrapolate(pts);
}

/// Nonlocal mean curvature of a planar halfspace at a point of its boundary line.
inline Extrapolation nonlocal_mean_curvature(const Halfspace& H, double x1, double x2, const KernelParams& k,
                                             const QuadratureScheme& sch = {}) {
    detail::check_kernel(k);
    const double d = x1 * H.e1 + x2 * H.e2 - H.c;
    if (std::abs(d) > 1e-12 * std::max(1.0, std::abs(H.c))) throw DomainError("nonlocal_mean_curvature: point not on the halfspace boundary");
    KernelParams k1{k.s, detail::kernel_scale_1d(k), 1};
    return nonlocal_mean_curvature(IntervalSet::halfline_right(0.0), 0.0, k1, sch);
}

/// Level sets of a strictly monotone function on the line.
struct LevelSetFamily {
    AmbientFunction phi;
    int direction = 1; ///< +1 increasing, -1 decreasing

    /// Superlevel set {phi > t}.
    IntervalSet superlevel(double t) const {
        double lo = -1.0, hi = 1.0;
        auto above = [&](double x) { return phi(x) > t; };
        int guard = 0;
        while (above(direction > 0 ? lo : hi) && guard++ < 200) (direction > 0 ? lo : hi) *= 2;
        guard = 0;
        while (!above(direction > 0 ? hi : lo) && guard++ < 200) (direction > 0 ? hi : lo) *= 2;
        for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
            const double m = 0.5 * (lo + hi);
            ((above(m) == (direction > 0)) ? hi : lo) = m;
        }
        const double c = 0.5 * (lo + hi);
        return direction > 0 ? IntervalSet::halfline_right(c) : IntervalSet::halfline_left(c);
    }
};

/// Samples phi on [lo, hi] and rejects it unless strictly monotone.
inline LevelSetFamily make_level_set_family(AmbientFunction phi, double lo = -10.0, double hi = 10.0, int samples = 2001) {
    int dir = 0;
    double prev = phi(lo);
    for (int i = 1; i < samples; ++i) {
        const double v = phi(lo + (hi - lo) * i / (samples - 1));
        const int d = v > prev ? 1 : (v < prev ? -1 : 0);
        if (d == 0 || (dir != 0 && d != dir)) throw ValidationError("level-set family: phi is not strictly monotone");
        dir = d;
        prev = v;
    }
    return {std::move(phi), dir};
}

/// Half the double integral of sign(phi(x)-phi(y)) (1_F(x)-1_F(y)) K over Q(Omega).
inline EnergyValue calibration_perimeter(const LevelSetFamily& fam, const IntervalSet& F, Domain om,
                                         const KernelParams& k) {
    detail::check_kernel(k);
    EnergyValue e;
    e.provenance = "closed-form";
    const IntervalSet O = as_set(om), Fc = F.complement();
    if (F.is_empty() || Fc.is_empty()) {
        e.blocks = {{"omega_all", 0.0}, {"ext_omega", 0.0}};
        return e;
    }
    if (k.s >= 0.5) {
        e.divergent = true;
        e.value = inf;
        return e;
    }
    const double d = fam.direction;
    const double b1 = d * k.scale * detail::set_pair_integral(F.intersect(O), Fc, k.s, true);
    const double b2 = d * k.scale * detail::set_pair_integral(F.minus(O), Fc.intersect(O), k.s, true);
    e.value = b1 + b2;
    e.blocks = {{"omega_all", b1}, {"ext_omega", b2}};
    e.error_estimate = 1e-14 * std::max(1.0, std::abs(e.value));
    return e;
}

namespace detail {

/// Integral of f over (0, L) where f may blow up like z^{-2s} at 0; z = L v^q removes it.
template <class Fn>
double integrate_weak_singular(Fn&& f, double L, double s, int panels, int order) {
    const double q = std::min(20.0, 1.0 / (1.0 - 2 * s));
    const GaussRule& g = gauss_legendre(order);
    std::vector<double> terms;
    for (int p = 0; p < panels; ++p) {
        const double v0 = double(p) / panels, v1 = double(p + 1) / panels;
        for (int j = 0; j < order; ++j) {
            const double v = 0.5 * (v0 + v1) + 0.5 * (v1 - v0) * g.nodes[j];
            const double z = L * std::pow(v, q);
            terms.push_back(0.5 * (v1 - v0) * g.weights[j] * f(z) * q * L * std::pow(v, q - 1));
        }
    }
    return pairwise_sum(terms);
}

} // namespace detail

/// Alternative form: integral over Omega cap F of H_K[E^t](x) at t = phi(x), plus
/// the exterior term over F minus Omega; outer integrals by quadrature.
inline EnergyValue calibration_perimeter_alt(const LevelSetFamily& fam, const IntervalSet& F, Domain om,
                                             const KernelParams& k, const QuadratureScheme& sch = {}) {
    detail::check_kernel(k);
    EnergyValue e;
    e.provenance = "quadrature";
    if (k.s >= 0.5) {
        e.divergent = true;
        e.value = inf;
        return e;
    }
    const IntervalSet O = as_set(om);
    const double diam = om.length();
    // Leaf through x is the halfline starting at x.
    auto leaf_set = [&](double x) {
        return fam.direction > 0 ? IntervalSet::halfline_right(x) : IntervalSet::halfline_left(x);
    };
    auto run = [&](int panels, int order) {
        double t1 = 0.0;
        const IntervalSet inside = F.intersect(O), outside = F.minus(O);
        for (const auto& [a, b] : inside.pieces()) {
            QuadratureScheme sc = sch;
            sc.gauss_order = order;
            sc.h = diam / panels;
            t1 += integrate_domain(
                [&](double x) { return nonlocal_mean_curvature(leaf_set(x), x, k, sch).limit; }, Domain{a, b}, sc);
        }
        // inner(x) for x outside Omega, in closed form.
        auto inner = [&](double x) {
            const IntervalSet E = leaf_set(x);
            const IntervalSet pos = E.complement().intersect(O), neg = E.intersect(O);
            // Pointwise kernel integral over the Omega pieces.
            auto point_int = [&](const IntervalSet& S) {
                double v = 0.0;
                for (const auto& [a, b] : S.pieces()) {
                    const double d1 = std::min(std::abs(x - a), std::abs(x - b));
                    const double d2 = std::max(std::abs(x - a), std::abs(x - b));
                    v += (std::pow(d1, -2 * k.s) - std::pow(d2, -2 * k.s)) / (2 * k.s);
                }
                return v;
            };
            return k.scale * (point_int(pos) - point_int(neg));
        };
        double t2 = 0.0;
        const double far = 64.0 * diam;
        for (const auto& [a, b] : outside.pieces()) {
            const bool right = a >= om.hi;
            // distance from Omega runs from z0 to z1 along the piece
            const double z0 = right ? a - om.hi : om.lo - b;
            const double z1 = right ? b - om.hi : om.lo - a;
            auto g = [&](double z) { return inner(right ? om.hi + z : om.lo - z); };
            const double zc = std::min(z1, far);
            double part;
            if (z0 == 0.0) part = detail::integrate_weak_singular(g, zc, k.s, panels, order);
            else part = integrate_radial(g, z0, zc, order, 0.5, diam / panels, diam * 4);
            if (z1 > zc) {
                // beyond the cut, closed form; all of Omega lies on one side of x
                const IntervalSet S = right ? IntervalSet({{om.hi + zc, om.hi + z1}}) : IntervalSet({{om.lo - z1, om.lo - zc}});
                part += fam.direction * k.scale * detail::set_pair_integral(S, O, k.s, true);
            }
            t2 += part;
        }
        return std::pair<double, double>{t1, t2};
    };
    const int panels = std::max(8, static_cast<int>(std::ceil(diam / sch.h)));
    const auto [t1, t2] = run(panels, sch.gauss_order);
    const auto [c1, c2] = run(std::max(4, panels / 2), std::max(4, sch.gauss_order - 2));
    e.value = t1 + t2;
    e.blocks = {{"interior_curvature", t1}, {"exterior", t2}};
    e.error_estimate = std::abs(t1 + t2 - c1 - c2) + 1e-13 * std::max(1.0, std::abs(e.value));
    return e;
}

/// F = (E minus Omega) union k random intervals inside Omega.
inline IntervalSet random_interval_competitor(const IntervalSet& E, Domain om, unsigned long long seed, int pieces = 2) {
    std::mt19937_64 rng(seed);
    auto uni = [&]() { return (rng() >> 11) * 0x1.0p-53; };
    std::vector<double> pts;
    for (int i = 0; i < 2 * pieces; ++i) pts.push_back(om.lo + om.length() * uni());
    std::sort(pts.begin(), pts.end());
    std::vector<IntervalSet::Piece> in;
    for (int i = 0; i < pieces; ++i) in.push_back({pts[2 * i], pts[2 * i + 1]});
    return E.minus(as_set(om)).unite(IntervalSet(std::move(in)).intersect(as_set(om)));
}

} // namespace calib
