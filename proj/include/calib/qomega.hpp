#pragma once

/**
 * @file qomega.hpp
 * @brief Double integrals over Q(Omega) = R^2 minus (Omega^c x Omega^c) in one dimension.
 *
 * For an integrand phi(x, y) the integral splits into the blocks
 * Omega x Omega, Omega x Omega^c and Omega^c x Omega. Each is written as an
 * outer integral over x in Omega of radial integrals in z = |y - x|.
 */

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fields.hpp"

namespace calib {

struct QIntegral {
    double value = 0.0;
    double omega_omega = 0.0;
    double omega_ext = 0.0;
    double ext_omega = 0.0;
    bool divergent = false;
    double tail_error = 0.0;
};

/// Analytic tails beyond R for the two exterior blocks at outer point x.
using QTailFn = std::function<std::array<double, 2>(double x, double R)>;

namespace detail {

// Breaks on [a,b], graded geometrically towards both ends, interior width <= P.
inline std::vector<double> outer_breaks(double a, double b, double P, double hmin, std::vector<double> extra) {
    std::vector<double> left{a}, right{b};
    double w = hmin;
    double xa = a, xb = b;
    while (w < P && xa + w < 0.5 * (a + b)) {
        xa += w;
        xb -= w;
        left.push_back(xa);
        right.push_back(xb);
        w *= 3.0;
    }
    std::vector<double> br = left;
    const int nmid = std::max(1, static_cast<int>(std::ceil((xb - xa) / P)));
    for (int i = 1; i < nmid; ++i) br.push_back(xa + (xb - xa) * i / nmid);
    for (auto it = right.rbegin(); it != right.rend(); ++it) br.push_back(*it);
    for (double e : extra)
        if (e > a && e < b) br.push_back(e);
    std::sort(br.begin(), br.end());
    std::vector<double> out;
    for (double v : br)
        if (out.empty() || v - out.back() > 1e-14 * (b - a)) out.push_back(v);
    if (out.back() != b) out.back() = b;
    return out;
}

// Integral over [0, zmax] of f with an integrable power-law behaviour at 0.
template <class F>
double radial_from_zero(F&& f, double zmax, double zfloor, int order, double grading) {
    if (!(zmax > 0)) return 0.0;
    const double zf = std::min(zfloor, 0.5 * zmax);
    double body = integrate_radial(f, zf, zmax, order, grading, 0.0, inf);
    const double f1 = f(zf), f0 = f(0.5 * zf);
    double corr = f1 * zf;
    if (f1 != 0.0 && f0 != 0.0 && (f1 > 0) == (f0 > 0)) {
        const double beta = std::log2(f1 / f0);
        if (beta > -0.99) corr = f1 * zf / (beta + 1.0);
    } else if (f1 == 0.0) {
        corr = 0.0;
    }
    return body + corr;
}

} // namespace detail

struct QOptions {
    double cutoff = 0.0;          ///< excludes |x - y| < cutoff
    double tail_model_ratio = 2.0; ///< expected shell ratio; >= 1 means use the observed one
    QTailFn analytic_tail;         ///< overrides shell extrapolation when set
};

/// Integral of phi over Q(Omega) (minus the cutoff band) at the resolution of `sch`.
template <class Phi>
QIntegral integrate_q_omega(const Phi& phi, Domain om, const QuadratureScheme& sch, const QOptions& opt = {}) {
    const double a = om.lo, b = om.hi, diam = b - a;
    const double R = sch.outer_radius;
    if (!(R > 4 * diam)) throw ConfigError("integrate_q_omega: outer radius must exceed 4 diam(Omega)");
    const double cut = opt.cutoff;
    const int order = sch.gauss_order;
    const double g = sch.grading;
    const double zfloor = 1e-9 * diam;
    std::vector<double> extra;
    if (cut > 0) extra = {a + cut, b - cut};
    const auto br = detail::outer_breaks(a, b, sch.h * order, 1e-8 * diam, extra);
    const GaussRule& rule = gauss_legendre(order);
    std::vector<double> xs, ws;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        const double m = 0.5 * (br[k] + br[k + 1]), r = 0.5 * (br[k + 1] - br[k]);
        for (int i = 0; i < order; ++i) {
            xs.push_back(m + r * rule.nodes[i]);
            ws.push_back(r * rule.weights[i]);
        }
    }

    struct Node {
        double in = 0, oe = 0, eo = 0, tail_err = 0;
        bool divergent = false;
    };
    auto node = [&](std::size_t idx) {
        const double x = xs[idx];
        const double dr = b - x, dl = x - a;
        Node n;
        auto fr = [&](double z) { return phi(x, x + z); };
        auto fl = [&](double z) { return phi(x, x - z); };
        if (cut > 0) {
            n.in = integrate_radial(fr, cut, dr, order, g, 0.0, inf) + integrate_radial(fl, cut, dl, order, g, 0.0, inf);
        } else {
            n.in = detail::radial_from_zero(fr, dr, zfloor, order, g) + detail::radial_from_zero(fl, dl, zfloor, order, g);
        }
        auto block = [&](auto&& f_right, auto&& f_left, double& acc, int which) {
            const double zr = std::max(cut, dr), zl = std::max(cut, dl);
            double body = integrate_radial(f_right, zr, R / 4, order, g, 0.0, inf) +
                          integrate_radial(f_left, zl, R / 4, order, g, 0.0, inf);
            auto both = [&](double z) { return f_right(z) + f_left(z); };
            const double s1 = integrate_radial(both, R / 4, R / 2, order, g, 0.0, inf);
            const double s0 = integrate_radial(both, R / 2, R, order, g, 0.0, inf);
            body += s1 + s0;
            if (opt.analytic_tail) {
                body += opt.analytic_tail(x, R)[which];
            } else {
                TailEstimate t = shell_tail(s1, s0, opt.tail_model_ratio);
                if (t.divergent) n.divergent = true;
                else {
                    body += t.value;
                    n.tail_err += t.error;
                }
            }
            acc = body;
        };
        block(fr, fl, n.oe, 0);
        block([&](double z) { return phi(x + z, x); }, [&](double z) { return phi(x - z, x); }, n.eo, 1);
        return n;
    };
    auto nodes = parallel::map<Node>(xs.size(), node);
    std::vector<double> a1(xs.size()), a2(xs.size()), a3(xs.size()), a4(xs.size());
    QIntegral out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        a1[i] = ws[i] * nodes[i].in;
        a2[i] = ws[i] * nodes[i].oe;
        a3[i] = ws[i] * nodes[i].eo;
        a4[i] = ws[i] * nodes[i].tail_err;
        out.divergent = out.divergent || nodes[i].divergent;
    }
    out.omega_omega = pairwise_sum(a1);
    out.omega_ext = pairwise_sum(a2);
    out.ext_omega = pairwise_sum(a3);
    out.tail_error = pairwise_sum(a4);
    out.value = out.omega_omega + out.omega_ext + out.ext_omega;
    return out;
}

/// Integral with an error estimate from a coarsened rerun.
struct QIntegralWithError {
    QIntegral base;
    double error_estimate = 0.0;
};

template <class Phi>
QIntegralWithError integrate_q_omega_err(const Phi& phi, Domain om, const QuadratureScheme& sch,
                                         const QOptions& opt = {}) {
    QIntegralWithError r;
    r.base = integrate_q_omega(phi, om, sch, opt);
    const QIntegral c = integrate_q_omega(phi, om, sch.coarsened(), opt);
    r.error_estimate = std::abs(r.base.value - c.value) + r.base.tail_error +
                       1e-13 * std::max(1.0, std::abs(r.base.value));
    return r;
}

/// Composite Gauss-Legendre nodes on Omega with panels of width h*order.
inline std::pair<std::vector<double>, std::vector<double>> domain_nodes(Domain om, const QuadratureScheme& sch) {
    const int nmid = std::max(1, static_cast<int>(std::ceil(om.length() / (sch.h * sch.gauss_order))));
    const GaussRule& rule = gauss_legendre(sch.gauss_order);
    std::vector<double> xs, ws;
    for (int k = 0; k < nmid; ++k) {
        const double lo = om.lo + om.length() * k / nmid, hi = om.lo + om.length() * (k + 1) / nmid;
        const double m = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        for (int i = 0; i < sch.gauss_order; ++i) {
            xs.push_back(m + r * rule.nodes[i]);
            ws.push_back(r * rule.weights[i]);
        }
    }
    return {xs, ws};
}

/// Integral of a smooth f over Omega.
template <class F>
double integrate_domain(F&& f, Domain om, const QuadratureScheme& sch) {
    const auto nodes = domain_nodes(om, sch);
    const auto& xs = nodes.first;
    const auto& ws = nodes.second;
    auto vals = parallel::map(xs.size(), [&](std::size_t i) { return f(xs[i]); });
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= ws[i];
    return pairwise_sum(vals);
}

} // namespace calib
