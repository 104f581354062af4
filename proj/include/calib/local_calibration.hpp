#pragma once

/**
 * @file local_calibration.hpp
 * @brief Local Lagrangians G(x, lambda, q) in one dimension: the calibration
 *        in its defining and alternative forms, Euler-Lagrange and Neumann
 *        operators, the excess function and the gradient identity check.
 */

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>

#include "fields.hpp"
#include "qomega.hpp"

namespace calib {

struct LocalLagrangian {
    std::string name;
    std::function<double(double x, double lambda, double q)> G;
    double fd_rel_step = 1e-3;

    double operator()(double x, double l, double q) const { return G(x, l, q); }

    double dG_dlambda(double x, double l, double q) const {
        const double h = fd_rel_step * std::max(1.0, std::abs(l));
        return (-G(x, l + 2 * h, q) + 8 * G(x, l + h, q) - 8 * G(x, l - h, q) + G(x, l - 2 * h, q)) / (12 * h);
    }
    double dG_dq(double x, double l, double q) const {
        const double h = fd_rel_step * std::max(1.0, std::abs(q));
        return (-G(x, l, q + 2 * h) + 8 * G(x, l, q + h) - 8 * G(x, l, q - h) + G(x, l, q - 2 * h)) / (12 * h);
    }
    double d2G_dq2(double x, double l, double q) const {
        const double h = 10 * fd_rel_step * std::max(1.0, std::abs(q));
        return (G(x, l, q + h) - 2 * G(x, l, q) + G(x, l, q - h)) / (h * h);
    }
    double d2G_dlambda_dq(double x, double l, double q) const {
        const double h = 10 * fd_rel_step * std::max(1.0, std::abs(l)), k = 10 * fd_rel_step * std::max(1.0, std::abs(q));
        return (G(x, l + h, q + k) - G(x, l + h, q - k) - G(x, l - h, q + k) + G(x, l - h, q - k)) / (4 * h * k);
    }
};

/// G = q^2/2.
inline LocalLagrangian make_dirichlet() {
    return {"dirichlet", [](double, double, double q) { return 0.5 * q * q; }};
}

/// G = |q|^p / p.
inline LocalLagrangian make_p_dirichlet(double p) {
    if (!(p > 1)) throw ConfigError("p-dirichlet needs p > 1");
    std::ostringstream os;
    os << "p-dirichlet:" << p;
    return {os.str(), [p](double, double, double q) { return std::pow(std::abs(q), p) / p; }};
}

/// G = q^2/2 - F(lambda).
inline LocalLagrangian make_semilinear(const Potential& F) {
    auto f = F.F;
    return {"semilinear:" + F.name, [f](double, double l, double q) { return 0.5 * q * q - f(l); }};
}

inline LocalLagrangian lagrangian_by_name(const std::string& name) {
    if (name == "dirichlet") return make_dirichlet();
    if (name.rfind("p-dirichlet:", 0) == 0) {
        double p = 0;
        try {
            p = std::stod(name.substr(12));
        } catch (...) {
            throw ConfigError("bad exponent in '" + name + "'");
        }
        return make_p_dirichlet(p);
    }
    if (name.rfind("semilinear:", 0) == 0) return make_semilinear(potential_by_name(name.substr(11)));
    throw ConfigError("unknown lagrangian '" + name + "' (valid: dirichlet, p-dirichlet:<p>, semilinear:<potential>)");
}

/// Sampled check that mixed second partials are finite and symmetric.
inline bool lagrangian_c2_check(const LocalLagrangian& G, double lo, double hi) {
    for (int i = 0; i <= 10; ++i)
        for (int j = 0; j <= 10; ++j) {
            const double l = lo + (hi - lo) * i / 10, q = lo + (hi - lo) * j / 10;
            const double h = 1e-3;
            const double a = (G.dG_dq(0, l + h, q) - G.dG_dq(0, l - h, q)) / (2 * h);
            const double b = (G.dG_dlambda(0, l, q + h) - G.dG_dlambda(0, l, q - h)) / (2 * h);
            if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > 1e-5 * (1 + std::abs(a))) return false;
        }
    return true;
}

inline double excess(const LocalLagrangian& G, double x, double l, double q, double qt) {
    return G(x, l, qt) - G(x, l, q) - G.dG_dq(x, l, q) * (qt - q);
}

/// -(d/dx) dG/dq(x, w, w') + dG/dlambda(x, w, w') by central differences.
inline double euler_lagrange_op(const LocalLagrangian& G, const AmbientFunction& w, double x, Domain om,
                                double step = 1e-3) {
    if (x - 2 * step < om.lo - 1e-15 || x + 2 * step > om.hi + 1e-15)
        throw DomainError("euler_lagrange_op: stencil exits Omega at x = " + std::to_string(x));
    auto P = [&](double y) { return G.dG_dq(y, w(y), w.derivative(y)); };
    const double dP = (-P(x + 2 * step) + 8 * P(x + step) - 8 * P(x - step) + P(x - 2 * step)) / (12 * step);
    return -dP + G.dG_dlambda(x, w(x), w.derivative(x));
}

/// dG/dq * nu at an endpoint of Omega, with a one-sided gradient stencil.
inline double neumann_op(const LocalLagrangian& G, const AmbientFunction& w, double xb, Domain om,
                         double step = 1e-3) {
    const double tol = 1e-12 * std::max(1.0, std::abs(xb));
    double nu;
    if (std::abs(xb - om.hi) <= tol) nu = 1.0;
    else if (std::abs(xb - om.lo) <= tol) nu = -1.0;
    else throw DomainError("neumann_op: x is not on the boundary of Omega");
    const double d = -nu * step; // step into Omega
    const double grad = (-25 * w(xb) + 48 * w(xb + d) - 36 * w(xb + 2 * d) + 16 * w(xb + 3 * d) - 3 * w(xb + 4 * d)) /
                        (12 * d);
    return G.dG_dq(xb, w(xb), grad) * nu;
}

struct LocalValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

namespace detail {
template <class F>
LocalValue domain_with_error(F&& f, Domain om, const QuadratureScheme& sch) {
    const double v = integrate_domain(f, om, sch);
    const double c = integrate_domain(f, om, sch.coarsened());
    return {v, std::abs(v - c) + 1e-14 * std::max(1.0, std::abs(v))};
}
} // namespace detail

inline LocalValue energy_local(const LocalLagrangian& G, const AmbientFunction& w, Domain om,
                               const QuadratureScheme& sch) {
    return detail::domain_with_error([&](double x) { return G(x, w(x), w.derivative(x)); }, om, sch);
}

/// Defining form: dG/dq(x,w,u^t') (w' - u^t') + G(x,w,u^t') at t = t(x,w(x)).
inline LocalValue calibration_CL(const LocalLagrangian& G, const ExtremalField& f, const AmbientFunction& w,
                                 Domain om, const QuadratureScheme& sch) {
    return detail::domain_with_error(
        [&](double x) {
            const double l = w(x);
            const double t = leaf_parameter(f, x, l);
            const double q = f.dx(t, x);
            return G.dG_dq(x, l, q) * (w.derivative(x) - q) + G(x, l, q);
        },
        om, sch);
}

/// Interior Euler-Lagrange term plus boundary Neumann terms plus E_L(u^{t0}).
inline LocalValue calibration_CL_alt(const LocalLagrangian& G, const ExtremalField& f, double t0,
                                     const AmbientFunction& w, Domain om, const QuadratureScheme& sch) {
    auto run = [&](const QuadratureScheme& sc) {
        auto inner = [&](double x, double l0, double l1, auto&& op) {
            const double d = l1 - l0;
            if (std::abs(d) <= 1e-14 * (1 + std::abs(l0))) return 0.0;
            const int m = std::clamp(static_cast<int>(std::ceil(std::abs(d) / sc.h)), 3, 24);
            const GaussRule& rule = gauss_legendre(m);
            double s = 0.0;
            for (int j = 0; j < m; ++j) {
                const double lam = 0.5 * (l0 + l1) + 0.5 * d * rule.nodes[j];
                s += rule.weights[j] * op(leaf_parameter(f, x, lam));
            }
            return 0.5 * d * s;
        };
        const double interior = integrate_domain(
            [&](double x) {
                const double step = std::min(1e-3, 0.45 * std::min(x - om.lo, om.hi - x));
                return inner(x, f.leaf(t0, x), w(x),
                             [&](double t) { return euler_lagrange_op(G, f.leaf_function(t), x, om, step); });
            },
            om, sc);
        double boundary = 0.0;
        for (double xb : {om.lo, om.hi})
            boundary += inner(xb, f.leaf(t0, xb), w(xb),
                              [&](double t) { return neumann_op(G, f.leaf_function(t), xb, om); });
        const double e0 = integrate_domain(
            [&](double x) { return G(x, f.leaf(t0, x), f.dx(t0, x)); }, om, sc);
        return interior + boundary + e0;
    };
    const double v = run(sch), c = run(sch.coarsened());
    return {v, std::abs(v - c) + 1e-12 * std::max(1.0, std::abs(v))};
}

/// E_L(w) - C_L(w) - integral of the excess at t = t(x,w(x)).
inline LocalValue weierstrass_decomposition_residual(const LocalLagrangian& G, const ExtremalField& f,
                                                     const AmbientFunction& w, Domain om,
                                                     const QuadratureScheme& sch) {
    return detail::domain_with_error(
        [&](double x) {
            const double l = w(x), wd = w.derivative(x);
            const double t = leaf_parameter(f, x, l);
            const double q = f.dx(t, x);
            const double el = G(x, l, wd);
            const double cl = G.dG_dq(x, l, q) * (wd - q) + G(x, l, q);
            return el - cl - excess(G, x, l, q, wd);
        },
        om, sch);
}

/// Integral of the excess at t = t(x, w(x)) (the gap E_L(w) - C_L(w)).
inline LocalValue excess_integral(const LocalLagrangian& G, const ExtremalField& f, const AmbientFunction& w,
                                  Domain om, const QuadratureScheme& sch) {
    return detail::domain_with_error(
        [&](double x) {
            const double l = w(x);
            const double t = leaf_parameter(f, x, l);
            return excess(G, x, l, f.dx(t, x), w.derivative(x));
        },
        om, sch);
}

/// d/dx t(x,w(x)) minus (w' - u^t')|_{t(x,w(x))} d_lambda t(x,w(x)), all by central differences of step h.
inline double leaf_gradient_identity_residual(const ExtremalField& f, const AmbientFunction& w, double x, double h) {
    const double l = w(x);
    const double t = leaf_parameter(f, x, l);
    if (!(f.dleaf_dt(t, x) > 1e-10)) throw DomainError("leaf_gradient_identity_residual: degenerate leaf at x");
    const double lhs = (leaf_parameter(f, x + h, w(x + h)) - leaf_parameter(f, x - h, w(x - h))) / (2 * h);
    const double wd = (w(x + h) - w(x - h)) / (2 * h);
    const double ud = (f.leaf(t, x + h) - f.leaf(t, x - h)) / (2 * h);
    const double dl = (leaf_parameter(f, x, l + h) - leaf_parameter(f, x, l - h)) / (2 * h);
    return lhs - (wd - ud) * dl;
}

/// (E_L(w + e eta) - E_L(w - e eta)) / 2e minus the integral of L_L(w) eta.
inline double first_variation_residual(const LocalLagrangian& G, const AmbientFunction& w, const AmbientFunction& eta,
                                       Domain om, const QuadratureScheme& sch, double e = 1e-4) {
    auto shifted = [&](double sgn) {
        AmbientFunction v([&, sgn](double x) { return w(x) + sgn * e * eta(x); }, w.tail());
        v.with_derivative([&, sgn](double x) { return w.derivative(x) + sgn * e * eta.derivative(x); });
        return v;
    };
    const double ep = energy_local(G, shifted(1), om, sch).value, em = energy_local(G, shifted(-1), om, sch).value;
    const double fd = (ep - em) / (2 * e);
    const double lin = integrate_domain(
        [&](double x) {
            const double step = std::min(1e-3, 0.45 * std::min(x - om.lo, om.hi - x));
            return euler_lagrange_op(G, w, x, om, step) * eta(x);
        },
        om, sch);
    return fd - lin;
}

/// div X(x, lambda) minus L_L(u^t)(x) at t = t(x, lambda), where
/// X = (-dG/dq, -dG/dq u^t' + G) evaluated on the leaf through (x, lambda).
inline double divergence_diagnostic(const LocalLagrangian& G, const ExtremalField& f, double x, double lambda,
                                    Domain om, double h = 1e-3) {
    auto X = [&](double y, double l) {
        const double t = leaf_parameter(f, y, l);
        const double q = f.dx(t, y);
        const double gq = G.dG_dq(y, l, q);
        return std::pair<double, double>{-gq, -gq * q + G(y, l, q)};
    };
    const double dx = (X(x + h, lambda).first - X(x - h, lambda).first) / (2 * h);
    const double dl = (X(x, lambda + h).second - X(x, lambda - h).second) / (2 * h);
    const double t = leaf_parameter(f, x, lambda);
    return dx + dl - euler_lagrange_op(G, f.leaf_function(t), x, om, h);
}

} // namespace calib
