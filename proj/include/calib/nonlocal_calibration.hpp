#pragma once

/**
 * @file nonlocal_calibration.hpp
 * @brief Fractional energy, its calibration in direct, truncated and
 *        symmetrized forms, the inequality gap, and three alternative
 *        candidate functionals with the fractional gradient.
 *
 * All comparisons between two functionals are also available as differences
 * of integrands evaluated on shared nodes, so that fields with infinite
 * absolute energy still give finite answers.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fields.hpp"
#include "qomega.hpp"

namespace calib {

struct EnergyValue {
    double value = 0.0;
    double error_estimate = 0.0;
    std::vector<std::pair<std::string, double>> blocks;
    bool divergent = false;
    std::string provenance;
};

struct AdmissibleCompetitor {
    AmbientFunction w;
    double t0 = 0.0;
    bool exterior_matches_leaf = false;
    bool graph_in_G = false;
    std::function<double(double)> eta; ///< known leaf offset, if constructed as u^{t0+eta}
};

/// Sampled admissibility checks; throws AdmissibilityError on failure.
inline AdmissibleCompetitor make_competitor(const ExtremalField& f, double t0, AmbientFunction w, Domain om,
                                            std::function<double(double)> eta = {}) {
    if (!f.interval.contains(t0)) throw AdmissibilityError("t0 outside the parameter interval");
    AdmissibleCompetitor c{std::move(w), t0, true, true, std::move(eta)};
    for (int i = 1; i <= 200; ++i) {
        const double d = 20.0 * i / 200.0 + (i > 190 ? 1e3 * (i - 190) : 0.0);
        for (double x : {om.lo - d, om.hi + d}) {
            const double u = f.leaf(t0, x);
            if (std::abs(c.w(x) - u) > 1e-12 * std::max(1.0, std::abs(u))) c.exterior_matches_leaf = false;
        }
    }
    double prev = c.w(om.lo), jump = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = om.lo + om.length() * i / 2000.0;
        const double v = c.w(x);
        const double lo = f.leaf(f.interval.lo, x), hi = f.leaf(f.interval.hi, x);
        const double tol = 1e-13 * std::max(1.0, std::abs(v));
        if (!(v >= lo - tol && v <= hi + tol)) c.graph_in_G = false;
        jump = std::max(jump, std::abs(v - prev));
        prev = v;
    }
    if (!c.exterior_matches_leaf) throw AdmissibilityError("competitor differs from the base leaf outside Omega");
    if (!c.graph_in_G) throw AdmissibilityError("competitor graph leaves the foliated region G");
    if (!(jump < 0.05 * (1.0 + std::abs(f.leaf(f.interval.hi, om.lo) - f.leaf(f.interval.lo, om.lo)))))
        throw AdmissibilityError("competitor is not continuous on the closure of Omega (sampled)");
    return c;
}

/// Base leaf u^{t0} as a competitor.
inline AdmissibleCompetitor base_competitor(const ExtremalField& f, double t0, Domain om) {
    return make_competitor(f, t0, f.leaf_function(t0), om, [](double) { return 0.0; });
}

/// x -> t(x, w(x)) on Omega, extended by t0 outside. Memoizes the last two points per thread.
class LeafIndex {
public:
    LeafIndex(const ExtremalField& f, double t0, const AmbientFunction& w, Domain om)
        : f_(&f), w_(&w), t0_(t0), om_(om), id_(next_id()) {}

    double operator()(double x) const {
        if (!(x > om_.lo && x < om_.hi)) return t0_;
        Memo& m = memo();
        if (m.id == id_) {
            if (m.x[0] == x) return m.t[0];
            if (m.x[1] == x) return m.t[1];
        } else {
            m = Memo{};
            m.id = id_;
        }
        const double t = leaf_parameter(*f_, x, (*w_)(x));
        m.x[m.next] = x;
        m.t[m.next] = t;
        m.next ^= 1;
        return t;
    }

private:
    struct Memo {
        std::uint64_t id = 0;
        double x[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        double t[2] = {0, 0};
        int next = 0;
    };
    static Memo& memo() {
        thread_local Memo m;
        return m;
    }
    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> c{1};
        return c.fetch_add(1);
    }
    const ExtremalField* f_;
    const AmbientFunction* w_;
    double t0_;
    Domain om_;
    std::uint64_t id_;
};

namespace detail {
inline double kernel_power(double z, const FracParams& p) { return std::pow(std::abs(z), -1.0 - 2.0 * p.s); }

inline void require_growth(const ExtremalField& f, double t0, const FracParams& p) {
    const double g = growth_exponent(f.tail(t0));
    if (g >= 2.0 * p.s)
        throw DomainError("field leaves grow like |x|^" + std::to_string(g) + ", outside L1_s for s = " +
                          std::to_string(p.s));
}

inline double bounded_ratio(const FracParams& p) { return std::pow(2.0, -2.0 * p.s); }

inline bool bounded_tail(const TailModel& t) { return !std::holds_alternative<PowerLaw>(t) || std::get<PowerLaw>(t).exponent <= 0; }

inline double floor_of(double v) { return 1e-13 * std::max(1.0, std::abs(v)); }
} // namespace detail

// -------------------------------------------------------------- energies

inline EnergyValue energy_gagliardo(const AmbientFunction& w, Domain om, const QuadratureScheme& sch,
                                    const FracParams& p, double cutoff = 0.0) {
    const double c4 = 0.25 * p.c;
    auto phi = [&](double x, double y) {
        const double d = w(x) - w(y);
        return c4 * d * d * detail::kernel_power(x - y, p);
    };
    QOptions opt;
    opt.cutoff = cutoff;
    EnergyValue ev;
    const double pexp = growth_exponent(w.tail());
    if (auto* cl = std::get_if<ConstantLimits>(&w.tail())) {
        const double L = cl->left, Rr = cl->right, s2 = 2.0 * p.s;
        opt.analytic_tail = [&, L, Rr, s2](double x, double R) {
            const double v = w(x);
            const double t = c4 * ((v - L) * (v - L) + (v - Rr) * (v - Rr)) * std::pow(R, -s2) / s2;
            return std::array<double, 2>{t, t};
        };
        ev.provenance = "Q(Omega) quadrature; analytic constant-limit tail; coarse-rerun error";
    } else {
        opt.tail_model_ratio = std::pow(2.0, 2.0 * pexp - 2.0 * p.s);
        ev.provenance = "Q(Omega) quadrature; shell-extrapolated tail; coarse-rerun error";
    }
    auto r = integrate_q_omega_err(phi, om, sch, opt);
    ev.value = r.base.value;
    ev.error_estimate = r.error_estimate;
    ev.divergent = r.base.divergent || pexp >= p.s;
    if (ev.divergent) ev.error_estimate = inf;
    ev.blocks = {{"omega_omega", r.base.omega_omega}, {"omega_ext", r.base.omega_ext}, {"ext_omega", r.base.ext_omega}};
    return ev;
}

inline std::pair<double, double> potential_integral(const AmbientFunction& w, Domain om, const Potential& F,
                                                    const QuadratureScheme& sch) {
    auto g = [&](double x) { return F.F(w(x)); };
    const double v = integrate_domain(g, om, sch);
    const double vc = integrate_domain(g, om, sch.coarsened());
    return {v, std::abs(v - vc) + detail::floor_of(v)};
}

inline EnergyValue energy_semilinear(const AmbientFunction& w, Domain om, const Potential& F,
                                     const QuadratureScheme& sch, const FracParams& p) {
    EnergyValue ev = energy_gagliardo(w, om, sch, p);
    auto [pot, perr] = potential_integral(w, om, F, sch);
    ev.value -= pot;
    ev.error_estimate += perr;
    ev.blocks.emplace_back("potential", -pot);
    return ev;
}

/// E_{s,F}(w) - E_{s,F}(v) from the difference integrand on shared nodes.
inline EnergyValue energy_difference(const AmbientFunction& w, const AmbientFunction& v, Domain om,
                                     const Potential& F, const QuadratureScheme& sch, const FracParams& p) {
    const double c4 = 0.25 * p.c;
    auto phi = [&](double x, double y) {
        const double a = w(x) - w(y), b = v(x) - v(y);
        return c4 * (a * a - b * b) * detail::kernel_power(x - y, p);
    };
    QOptions opt;
    if (detail::bounded_tail(v.tail())) opt.tail_model_ratio = detail::bounded_ratio(p);
    auto r = integrate_q_omega_err(phi, om, sch, opt);
    auto g = [&](double x) { return F.F(w(x)) - F.F(v(x)); };
    const double pot = integrate_domain(g, om, sch);
    const double potc = integrate_domain(g, om, sch.coarsened());
    EnergyValue ev;
    ev.value = r.base.value - pot;
    ev.error_estimate = r.error_estimate + std::abs(pot - potc) + detail::floor_of(pot);
    ev.divergent = r.base.divergent;
    ev.blocks = {{"omega_omega", r.base.omega_omega},
                 {"omega_ext", r.base.omega_ext},
                 {"ext_omega", r.base.ext_omega},
                 {"potential", -pot}};
    ev.provenance = "matched-truncation difference on shared nodes";
    return ev;
}

// --------------------------------------------------------- calibration

/// (-Delta)^s u^t(x) - F'(u^t(x)).
inline ValueWithError leaf_residual(const ExtremalField& f, double t, double x, const Potential& F,
                                    const QuadratureScheme& sch, const FracParams& p) {
    auto r = frac_laplacian(f.leaf_function(t), x, sch, p);
    r.value -= F.Fprime(f.leaf(t, x));
    return r;
}

struct CalibrationValue {
    EnergyValue absolute;
    double delta = 0.0;       ///< C(w) - E(u^{t0})
    double delta_error = 0.0;
};

namespace detail {
// Integral over Omega of the lambda-integral of g(x, t(x,lambda), lambda) from u^{t0}(x) to w(x).
// g returns (value, error); result is (value, propagated error).
template <class G>
std::pair<double, double> leafwise_integral(const ExtremalField& f, double t0, const AmbientFunction& w, Domain om,
                                            const QuadratureScheme& sch, G&& g) {
    const auto nodes = domain_nodes(om, sch);
    const auto& xs = nodes.first;
    const auto& ws = nodes.second;
    auto vals = parallel::map<std::pair<double, double>>(xs.size(), [&](std::size_t i) {
        const double x = xs[i];
        const double l0 = f.leaf(t0, x), l1 = w(x), d = l1 - l0;
        if (std::abs(d) <= 1e-14 * (1.0 + std::abs(l0))) return std::pair<double, double>{0.0, 0.0};
        const int m = std::clamp(static_cast<int>(std::ceil(std::abs(d) / sch.h)), 3, 24);
        const GaussRule& rule = gauss_legendre(m);
        double s = 0.0, e = 0.0;
        for (int j = 0; j < m; ++j) {
            const double lam = 0.5 * (l0 + l1) + 0.5 * d * rule.nodes[j];
            const double t = leaf_parameter(f, x, lam);
            auto r = g(x, t, lam);
            s += rule.weights[j] * r.first;
            e += rule.weights[j] * r.second;
        }
        return std::pair<double, double>{0.5 * d * s, 0.5 * std::abs(d) * e};
    });
    std::vector<double> v(xs.size()), ev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        v[i] = ws[i] * vals[i].first;
        ev[i] = ws[i] * vals[i].second;
    }
    return {pairwise_sum(v), pairwise_sum(ev)};
}
} // namespace detail

/// Delta_C(w) = integral of ((-Delta)^s u^t - F'(u^t)) at t = t(x,lambda), with an error estimate.
inline std::pair<double, double> calibration_delta(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp,
                                                   Domain om, const Potential& F, const QuadratureScheme& sch,
                                                   const FracParams& p) {
    auto run = [&](const QuadratureScheme& sc) {
        return detail::leafwise_integral(f, t0, comp.w, om, sc, [&](double x, double t, double lam) {
            auto r = frac_laplacian(f.leaf_function(t), x, sc, p);
            return std::pair<double, double>{r.value - F.Fprime(lam), r.error_estimate};
        });
    };
    auto base = run(sch);
    auto coarse = run(sch.coarsened());
    return {base.first, std::abs(base.first - coarse.first) + base.second + detail::floor_of(base.first) * 1e-2};
}

inline CalibrationValue calibration_C(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp, Domain om,
                                      const Potential& F, const QuadratureScheme& sch, const FracParams& p,
                                      bool with_absolute = true) {
    detail::require_growth(f, t0, p);
    CalibrationValue cv;
    std::tie(cv.delta, cv.delta_error) = calibration_delta(f, t0, comp, om, F, sch, p);
    cv.absolute.blocks.emplace_back("delta", cv.delta);
    if (with_absolute) {
        EnergyValue e0 = energy_semilinear(f.leaf_function(t0), om, F, sch, p);
        cv.absolute.value = cv.delta + e0.value;
        cv.absolute.error_estimate = cv.delta_error + e0.error_estimate;
        cv.absolute.divergent = e0.divergent;
        cv.absolute.blocks.emplace_back("base_energy", e0.value);
    } else {
        cv.absolute.value = cv.delta;
        cv.absolute.error_estimate = cv.delta_error;
    }
    cv.absolute.provenance = "leafwise residual integral plus base energy";
    return cv;
}

// ---------------------------------------------------- truncated forms

struct TruncatedCalibration {
    double eps = 0.0;
    EnergyValue direct;        ///< interior leafwise integral plus truncated base energy
    EnergyValue alt;           ///< symmetrized two-term form
    double direct_rel = 0.0;   ///< direct minus truncated base energy
    double direct_rel_err = 0.0;
    double alt_rel = 0.0;      ///< alt minus truncated base energy
    double alt_rel_err = 0.0;
};

namespace detail {
inline QOptions alt_options(const ExtremalField& f, double t0, double eps, const FracParams& p) {
    QOptions opt;
    opt.cutoff = eps;
    if (bounded_tail(f.tail(t0))) opt.tail_model_ratio = bounded_ratio(p);
    return opt;
}
} // namespace detail

/// Both sides of the truncated-calibration identity at cutoff eps.
inline TruncatedCalibration calibration_C_eps_both(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp,
                                                   Domain om, double eps, const QuadratureScheme& sch,
                                                   const FracParams& p) {
    detail::require_growth(f, t0, p);
    if (!(eps > 0)) throw ConfigError("calibration_C_eps: eps must be positive");
    TruncatedCalibration tc;
    tc.eps = eps;
    const AmbientFunction u0 = f.leaf_function(t0);
    const AmbientFunction& w = comp.w;

    // direct interior term
    auto interior = [&](const QuadratureScheme& sc) {
        QuadratureScheme se = sc;
        se.eps = eps;
        se.h = std::min(sc.h, eps);
        return detail::leafwise_integral(f, t0, w, om, sc, [&](double x, double t, double) {
            return std::pair<double, double>{frac_laplacian_eps(f.leaf_function(t), x, se, p), 0.0};
        }).first;
    };
    tc.direct_rel = interior(sch);
    tc.direct_rel_err = std::abs(tc.direct_rel - interior(sch.coarsened())) + detail::floor_of(tc.direct_rel);

    // symmetrized terms, relative to the truncated base energy
    const LeafIndex T(f, t0, w, om);
    const double c2 = 0.5 * p.c, c4 = 0.25 * p.c;
    auto phi = [&](double x, double y) {
        const double k = detail::kernel_power(x - y, p);
        const double tx = T(x), ty = T(y);
        double transport = 0.0;
        if (tx != ty) {
            const double len = std::abs(ty - tx);
            const int m = std::clamp(static_cast<int>(std::ceil(8.0 * len)) + 3, 4, 12);
            const GaussRule& rule = gauss_legendre(m);
            double s = 0.0;
            for (int j = 0; j < m; ++j) {
                const double t = 0.5 * (tx + ty) + 0.5 * (ty - tx) * rule.nodes[j];
                s += rule.weights[j] * (f.leaf(t, x) - f.leaf(t, y)) * f.dleaf_dt(t, y);
            }
            transport = 0.5 * (ty - tx) * s;
        }
        const double a = w(x) - f.leaf(tx, y);
        const double b = u0(x) - u0(y);
        return (-c2 * transport + c4 * (a * a - b * b)) * k;
    };
    auto alt = integrate_q_omega_err(phi, om, sch, detail::alt_options(f, t0, eps, p));
    tc.alt_rel = alt.base.value;
    tc.alt_rel_err = alt.error_estimate;

    EnergyValue e0 = energy_gagliardo(u0, om, sch, p, eps);
    tc.direct.value = tc.direct_rel + e0.value;
    tc.direct.error_estimate = tc.direct_rel_err + e0.error_estimate;
    tc.direct.divergent = e0.divergent;
    tc.direct.blocks = {{"interior", tc.direct_rel}, {"base_energy_eps", e0.value}};
    tc.direct.provenance = "truncated operator integrated along leaves";
    tc.alt.value = tc.alt_rel + e0.value;
    tc.alt.error_estimate = tc.alt_rel_err + e0.error_estimate;
    tc.alt.divergent = e0.divergent || alt.base.divergent;
    tc.alt.blocks = {{"symmetrized_relative", tc.alt_rel}, {"base_energy_eps", e0.value}};
    tc.alt.provenance = "symmetrized transport and square terms";
    return tc;
}

inline EnergyValue calibration_C_eps(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp, Domain om,
                                     double eps, const QuadratureScheme& sch, const FracParams& p) {
    return calibration_C_eps_both(f, t0, comp, om, eps, sch, p).direct;
}

inline EnergyValue calibration_C_eps_alt(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp, Domain om,
                                         double eps, const QuadratureScheme& sch, const FracParams& p) {
    return calibration_C_eps_both(f, t0, comp, om, eps, sch, p).alt;
}

struct GapValue {
    double gap = 0.0;
    double error_estimate = 0.0;
};

/// E_s(w) - C_s(w) as a matched-truncation difference.
inline GapValue inequality_gap(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp, Domain om,
                               const QuadratureScheme& sch, const FracParams& p) {
    detail::require_growth(f, t0, p);
    const Potential zero = zero_potential();
    EnergyValue de = energy_difference(comp.w, f.leaf_function(t0), om, zero, sch, p);
    auto [dc, dcerr] = calibration_delta(f, t0, comp, om, zero, sch, p);
    return {de.value - dc, de.error_estimate + dcerr};
}

// ------------------------------------------------- fractional gradient

/// Constant making the fractional gradient square to the half-Laplacian energy (n = 1).
inline double fractional_gradient_constant(double s) {
    return 1.0 / (2.0 * std::abs(std::tgamma(-s)) * std::sin(0.5 * std::numbers::pi * s));
}

inline ValueWithError fractional_gradient(const AmbientFunction& w, double x, const QuadratureScheme& sch,
                                          const FracParams& p) {
    if (!w.smooth_neighborhood().contains(x)) throw DomainError("fractional_gradient: x outside smooth neighborhood");
    if (sch.ladder.size() < 2) throw ConfigError("fractional_gradient: ladder needs at least 2 entries");
    const double s = p.s, ct = fractional_gradient_constant(s), R = sch.outer_radius;
    const bool bounded_only = std::holds_alternative<NoTail>(w.tail());
    const double cap = bounded_only ? std::min(sch.max_panel, 0.5) : sch.max_panel;
    auto g = [&](double z) {
        const double a = w(x + z), b = w(x - z);
        detail::check_finite(a, x + z, "fractional_gradient");
        detail::check_finite(b, x - z, "fractional_gradient");
        return ct * (a - b) * std::pow(z, -1.0 - s);
    };
    auto far = [&](double eps, double hmin) -> std::pair<double, double> {
        if (auto* cl = std::get_if<ConstantLimits>(&w.tail())) {
            const double body = integrate_radial(g, eps, R, sch.gauss_order, sch.grading, hmin, cap);
            return {body + ct * (cl->right - cl->left) * std::pow(R, -s) / s, 0.0};
        }
        const double body = integrate_radial(g, eps, R / 4, sch.gauss_order, sch.grading, hmin, cap);
        const double s1 = integrate_radial(g, R / 4, R / 2, sch.gauss_order, sch.grading, hmin, cap);
        const double s0 = integrate_radial(g, R / 2, R, sch.gauss_order, sch.grading, hmin, cap);
        TailEstimate t = shell_tail(s1, s0, std::pow(2.0, growth_exponent(w.tail()) - s));
        if (t.divergent) throw NumericError("fractional_gradient: divergent tail for " + w.name());
        return {body + s1 + s0 + t.value, t.error};
    };
    const double d1 = w.derivative(x);
    std::vector<std::pair<double, double>> pts;
    double tail_err = 0.0;
    for (const auto& st : sch.ladder) {
        auto r = far(st.eps, st.h);
        const double inner = ct * 2.0 * d1 * std::pow(st.eps, 1.0 - s) / (1.0 - s);
        pts.emplace_back(st.eps, r.first + inner);
        tail_err = std::max(tail_err, r.second);
    }
    Extrapolation ex = pts.size() >= 3 ? richardson_extrapolate(pts)
                                       : extrapolate_known_order(pts[0].first, pts[0].second, pts[1].first,
                                                                 pts[1].second, 3.0 - s);
    double spread = 0.0;
    for (std::size_t i = pts.size() - 2; i < pts.size(); ++i) spread = std::max(spread, std::abs(pts[i].second - ex.limit));
    return {ex.limit, spread + ex.error_estimate + tail_err + 1e-14, ex.warning};
}

// ---------------------------------------------------------- candidates

enum class Candidate { F1, F2, F3 };

inline std::string candidate_name(Candidate c) {
    switch (c) {
    case Candidate::F1: return "F1";
    case Candidate::F2: return "F2";
    default: return "F3";
    }
}

inline Candidate candidate_by_name(const std::string& s) {
    if (s == "F1" || s == "f1") return Candidate::F1;
    if (s == "F2" || s == "f2") return Candidate::F2;
    if (s == "F3" || s == "f3") return Candidate::F3;
    throw ConfigError("unknown candidate '" + s + "' (valid: F1, F2, F3)");
}

struct CandidateValue {
    Candidate variant = Candidate::F1;
    EnergyValue absolute;
    double delta = 0.0;        ///< candidate(w) - candidate(u^{t0})
    double delta_error = 0.0;
    double contact_gap = 0.0;  ///< candidate(u^{t0}) - E(u^{t0})
    double contact_error = 0.0;
};

namespace detail {
// Two-point integrand of F1 / F2 (without the potential), given leaf indices.
inline double pair_integrand(Candidate v, const ExtremalField& f, const AmbientFunction& w, double tx, double ty,
                             double x, double y, const FracParams& p) {
    const double wx = w(x), wy = w(y);
    const double a = (v == Candidate::F1) ? f.leaf(tx, x) - f.leaf(tx, y) : f.leaf(ty, x) - f.leaf(tx, y);
    return (0.5 * p.c * a * (wx - wy) - 0.25 * p.c * a * a) * kernel_power(x - y, p);
}
} // namespace detail

inline CandidateValue candidate_functional(Candidate v, const ExtremalField& f, double t0,
                                           const AdmissibleCompetitor& comp, Domain om, const Potential& F,
                                           const QuadratureScheme& sch, const FracParams& p,
                                           bool with_absolute = true) {
    detail::require_growth(f, t0, p);
    CandidateValue out;
    out.variant = v;
    const AmbientFunction u0 = f.leaf_function(t0);
    const AmbientFunction& w = comp.w;
    const LeafIndex T(f, t0, w, om);
    const bool bounded = detail::bounded_tail(f.tail(t0));
    QOptions opt;
    if (bounded) opt.tail_model_ratio = detail::bounded_ratio(p);
    auto [dpot, dpot_err] = [&] {
        auto g = [&](double x) { return F.F(w(x)) - F.F(u0(x)); };
        const double a = integrate_domain(g, om, sch), b = integrate_domain(g, om, sch.coarsened());
        return std::pair<double, double>{a, std::abs(a - b) + detail::floor_of(a)};
    }();

    if (v != Candidate::F3) {
        auto dphi = [&](double x, double y) {
            return detail::pair_integrand(v, f, w, T(x), T(y), x, y, p) -
                   detail::pair_integrand(v, f, u0, t0, t0, x, y, p);
        };
        auto d = integrate_q_omega_err(dphi, om, sch, opt);
        out.delta = d.base.value - dpot;
        out.delta_error = d.error_estimate + dpot_err;
        // the contact integrand coincides with the energy integrand on u^{t0}
        auto cphi = [&](double x, double y) {
            const double b = u0(x) - u0(y);
            return detail::pair_integrand(v, f, u0, t0, t0, x, y, p) - 0.25 * p.c * b * b * detail::kernel_power(x - y, p);
        };
        auto cg = integrate_q_omega_err(cphi, om, sch, opt);
        out.contact_gap = cg.base.value;
        out.contact_error = cg.error_estimate;
        if (with_absolute) {
            auto aphi = [&](double x, double y) { return detail::pair_integrand(v, f, w, T(x), T(y), x, y, p); };
            QOptions aopt = opt;
            if (!bounded) aopt.tail_model_ratio = 2.0;
            auto a = integrate_q_omega_err(aphi, om, sch, aopt);
            auto [pot, perr] = potential_integral(w, om, F, sch);
            out.absolute.value = a.base.value - pot;
            out.absolute.error_estimate = a.error_estimate + perr;
            out.absolute.divergent = a.base.divergent;
            out.absolute.blocks = {{"omega_omega", a.base.omega_omega},
                                   {"omega_ext", a.base.omega_ext},
                                   {"ext_omega", a.base.ext_omega},
                                   {"potential", -pot}};
        }
        out.absolute.provenance = "pairwise candidate integrand over Q(Omega)";
        return out;
    }

    // F3: fractional-gradient pairing on Omega
    auto densities = [&](const QuadratureScheme& sc) {
        const auto nodes = domain_nodes(om, sc);
        const auto& xs = nodes.first;
        const auto& ws = nodes.second;
        struct Row {
            double abs_v, delta_v, contact_v, err;
        };
        auto rows = parallel::map<Row>(xs.size(), [&](std::size_t i) {
            const double x = xs[i];
            const double tx = T(x);
            auto gT = fractional_gradient(f.leaf_function(tx), x, sc, p);
            auto gw = fractional_gradient(w, x, sc, p);
            auto g0 = fractional_gradient(u0, x, sc, p);
            const double dens_w = gT.value * gw.value - 0.5 * gT.value * gT.value;
            const double dens_0 = 0.5 * g0.value * g0.value;
            const double err = (std::abs(gT.value) + std::abs(gw.value)) * (gT.error_estimate + gw.error_estimate) +
                               2 * std::abs(g0.value) * g0.error_estimate;
            return Row{dens_w, dens_w - dens_0, dens_0, err};
        });
        std::vector<double> a(xs.size()), d(xs.size()), c(xs.size()), e(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            a[i] = ws[i] * rows[i].abs_v;
            d[i] = ws[i] * rows[i].delta_v;
            c[i] = ws[i] * rows[i].contact_v;
            e[i] = ws[i] * rows[i].err;
        }
        return std::array<double, 4>{pairwise_sum(a), pairwise_sum(d), pairwise_sum(c), pairwise_sum(e)};
    };
    const auto base = densities(sch);
    const auto coarse = densities(sch.coarsened());
    out.delta = base[1] - dpot;
    out.delta_error = std::abs(base[1] - coarse[1]) + base[3] + dpot_err;
    EnergyValue e0 = energy_gagliardo(u0, om, sch, p);
    out.contact_gap = base[2] - e0.value;
    out.contact_error = std::abs(base[2] - coarse[2]) + base[3] + e0.error_estimate;
    auto [pot, perr] = potential_integral(w, om, F, sch);
    out.absolute.value = base[0] - pot;
    out.absolute.error_estimate = std::abs(base[0] - coarse[0]) + base[3] + perr;
    out.absolute.blocks = {{"gradient_pairing", base[0]}, {"potential", -pot}};
    out.absolute.provenance = "fractional-gradient pairing on Omega";
    return out;
}

struct IdentityResidual {
    double lhs = 0.0, rhs = 0.0, residual = 0.0, error_estimate = 0.0;
    std::string label = "inconclusive";
};

/// Measured difference between the limit transport integral and the product form (unproven identity).
inline IdentityResidual f1_identity_residual(const ExtremalField& f, double t0, const AdmissibleCompetitor& comp,
                                             Domain om, const QuadratureScheme& sch, const FracParams& p) {
    detail::require_growth(f, t0, p);
    const AmbientFunction& w = comp.w;
    const LeafIndex T(f, t0, w, om);
    auto transport = [&](double x, double y) {
        const double tx = T(x), ty = T(y);
        if (tx == ty) return 0.0;
        const int m = std::clamp(static_cast<int>(std::ceil(8.0 * std::abs(ty - tx))) + 3, 4, 12);
        const GaussRule& rule = gauss_legendre(m);
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
            const double t = 0.5 * (tx + ty) + 0.5 * (ty - tx) * rule.nodes[j];
            s += rule.weights[j] * (f.leaf(t, x) - f.leaf(t, y)) * f.dleaf_dt(t, y);
        }
        return 0.5 * (ty - tx) * s;
    };
    auto lhs_phi = [&](double x, double y) { return -transport(x, y) * detail::kernel_power(x - y, p); };
    auto rhs_phi = [&](double x, double y) {
        const double ux = f.leaf(T(x), y);
        return (w(x) - ux) * (ux - w(y)) * detail::kernel_power(x - y, p);
    };
    QOptions opt;
    if (detail::bounded_tail(f.tail(t0))) opt.tail_model_ratio = detail::bounded_ratio(p);
    auto l = integrate_q_omega_err(lhs_phi, om, sch, opt);
    auto r = integrate_q_omega_err(rhs_phi, om, sch, opt);
    IdentityResidual out;
    out.lhs = l.base.value;
    out.rhs = r.base.value;
    out.residual = out.lhs - out.rhs;
    out.error_estimate = l.error_estimate + r.error_estimate;
    return out;
}

} // namespace calib
