#pragma once

/**
 * @file verifier.hpp
 * @brief Seeded admissible perturbations, residual-sign profiles and the
 *        calibration property suite with JSON/CSV reports.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "extrapolation.hpp"
#include "nonlocal_calibration.hpp"

namespace calib {

enum class PerturbationShape { Bump, MultiBump, LeafModulation };

inline std::string shape_name(PerturbationShape s) {
    switch (s) {
    case PerturbationShape::Bump: return "bump";
    case PerturbationShape::MultiBump: return "multi-bump";
    case PerturbationShape::LeafModulation: return "leaf-modulation";
    }
    return "?";
}

inline PerturbationShape shape_by_name(const std::string& s) {
    if (s == "bump") return PerturbationShape::Bump;
    if (s == "multi-bump") return PerturbationShape::MultiBump;
    if (s == "leaf-modulation") return PerturbationShape::LeafModulation;
    throw ConfigError("unknown perturbation shape '" + s + "' (valid: bump, multi-bump, leaf-modulation)");
}

struct PerturbationSpec {
    std::uint64_t seed = 42;
    int count = 20;
    PerturbationShape shape = PerturbationShape::Bump;
    double amplitude_fraction = 0.5;
};

/// Leaf offset eta with its derivative; eta vanishes outside a compact subset of Omega.
struct Perturbation {
    std::function<double(double)> eta;
    std::function<double(double)> deta;
};

namespace detail {

// exp(1 - 1/(1 - xi^2)) on |xi| < 1, peak 1 at the center.
inline double bump(double x, double c, double r) {
    const double xi = (x - c) / r;
    if (std::abs(xi) >= 1) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - xi * xi));
}
inline double dbump(double x, double c, double r) {
    const double xi = (x - c) / r;
    if (std::abs(xi) >= 1) return 0.0;
    const double q = 1.0 - xi * xi;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * xi / (q * q)) / r;
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double a, double b) { return a + (b - a) * ((gen() >> 11) * 0x1.0p-53); }
};

struct BumpTerm {
    double amp, c, r;
};

inline Perturbation from_bumps(std::vector<BumpTerm> terms, double freq = 0.0, double x0 = 0.0) {
    auto eta = [terms, freq, x0](double x) {
        double v = 0.0;
        for (const auto& b : terms) v += b.amp * bump(x, b.c, b.r);
        return freq > 0 ? v * std::sin(freq * (x - x0)) : v;
    };
    auto deta = [terms, freq, x0](double x) {
        double v = 0.0, dv = 0.0;
        for (const auto& b : terms) {
            v += b.amp * bump(x, b.c, b.r);
            dv += b.amp * dbump(x, b.c, b.r);
        }
        return freq > 0 ? dv * std::sin(freq * (x - x0)) + v * freq * std::cos(freq * (x - x0)) : dv;
    };
    return {eta, deta};
}

} // namespace detail

/// Seeded offsets with |eta| <= max_amplitude, supported in a compact subset of Omega.
inline std::vector<Perturbation> generate_perturbations(Domain om, const PerturbationSpec& spec, double max_amplitude) {
    if (spec.count < 0) throw ConfigError("perturbation count must be nonnegative");
    detail::Rng rng(spec.seed);
    const double half = 0.5 * om.length(), mid = 0.5 * (om.lo + om.hi);
    std::vector<Perturbation> out;
    for (int i = 0; i < spec.count; ++i) {
        std::vector<detail::BumpTerm> terms;
        double freq = 0.0;
        switch (spec.shape) {
        case PerturbationShape::Bump: {
            const double r = half * rng.uniform(0.3, 0.9);
            const double c = rng.uniform(om.lo + r, om.hi - r);
            terms.push_back({max_amplitude * rng.uniform(-1.0, 1.0), c, r});
            break;
        }
        case PerturbationShape::MultiBump:
            for (int j = 0; j < 3; ++j) {
                const double r = half * rng.uniform(0.25, 0.5);
                const double c = rng.uniform(om.lo + r, om.hi - r);
                terms.push_back({max_amplitude * rng.uniform(-1.0, 1.0) / 3.0, c, r});
            }
            break;
        case PerturbationShape::LeafModulation: {
            const double k = std::floor(rng.uniform(1.0, 4.0));
            terms.push_back({max_amplitude * rng.uniform(-1.0, 1.0), mid, 0.95 * half});
            freq = k * std::numbers::pi / om.length();
            break;
        }
        }
        out.push_back(detail::from_bumps(std::move(terms), freq, om.lo));
    }
    return out;
}

/// Competitors w = u^{t0 + eta(x)}(x) built from seeded offsets.
inline std::vector<AdmissibleCompetitor> generate_admissible(const ExtremalField& f, double t0, Domain om,
                                                             const PerturbationSpec& spec) {
    if (!(spec.amplitude_fraction >= 0 && spec.amplitude_fraction < 1))
        throw ConfigError("amplitude_fraction must lie in [0,1)");
    if (!f.interval.contains(t0)) throw AdmissibilityError("t0 outside the parameter interval");
    const double room = std::min(t0 - f.interval.lo, f.interval.hi - t0);
    if (spec.amplitude_fraction > 0 && !(room > 0))
        throw AdmissibilityError("t0 lies on the boundary of the parameter interval; cannot perturb both ways");
    const double amp = spec.amplitude_fraction * (std::isfinite(room) ? room : 1.0);
    std::vector<AdmissibleCompetitor> out;
    int idx = 0;
    for (auto& pert : generate_perturbations(om, spec, amp)) {
        auto eta = pert.eta, deta = pert.deta;
        AmbientFunction w([f, t0, eta](double x) { return f.leaf(t0 + eta(x), x); }, f.tail(t0),
                          "w" + std::to_string(idx++));
        if (f.dleaf_dx)
            w.with_derivative([f, t0, eta, deta](double x) {
                const double t = t0 + eta(x);
                return f.dleaf_dx(t, x) + f.dleaf_dt(t, x) * deta(x);
            });
        out.push_back(make_competitor(f, t0, std::move(w), om, eta));
    }
    return out;
}

// ------------------------------------------------------------ profiles

struct ProfileRow {
    double t = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
    double error_estimate = 0.0;
};

struct ResidualProfile {
    std::vector<ProfileRow> rows;
    std::string classification; ///< extremal | one-sided | neither
    bool one_sided_certified = false;
    int x_points = 0;
};

/// min/max over x in Omega of (-Delta)^s u^t - F'(u^t) per t, and a classification about t0.
inline ResidualProfile residual_sign_profile(const ExtremalField& f, Domain om, const Potential& F,
                                             const std::vector<double>& tgrid, double t0,
                                             const QuadratureScheme& sch, const FracParams& p, int x_points = 41) {
    ResidualProfile prof;
    prof.x_points = x_points;
    const std::size_t nt = tgrid.size(), n = nt * static_cast<std::size_t>(x_points);
    auto vals = parallel::map<ValueWithError>(n, [&](std::size_t k) {
        const double t = tgrid[k / x_points];
        const int j = static_cast<int>(k % x_points);
        const double x = x_points > 1 ? om.lo + om.length() * j / (x_points - 1) : 0.5 * (om.lo + om.hi);
        return leaf_residual(f, t, x, F, sch, p);
    });
    bool extremal = true, lower = true, upper = true, certified = true;
    for (std::size_t i = 0; i < nt; ++i) {
        ProfileRow r{tgrid[i], inf, -inf, 0.0};
        for (int j = 0; j < x_points; ++j) {
            const auto& v = vals[i * x_points + j];
            r.min_residual = std::min(r.min_residual, v.value);
            r.max_residual = std::max(r.max_residual, v.value);
            r.error_estimate = std::max(r.error_estimate, v.error_estimate);
        }
        const double tol = std::max(3.0 * r.error_estimate, 1e-6);
        if (std::max(std::abs(r.min_residual), std::abs(r.max_residual)) > tol) extremal = false;
        if (r.t > t0) {
            if (r.min_residual < -tol) upper = false;
            if (!(r.min_residual + r.error_estimate > -tol)) certified = false;
        } else if (r.t < t0) {
            if (r.max_residual > tol) lower = false;
            if (!(r.max_residual - r.error_estimate < tol)) certified = false;
        }
        prof.rows.push_back(r);
    }
    prof.classification = extremal ? "extremal" : (lower && upper ? "one-sided" : "neither");
    prof.one_sided_certified = (extremal || (lower && upper)) && certified;
    return prof;
}

// --------------------------------------------------------- verification

enum class Verdict { Pass, Fail, Unverified, Inconclusive };

inline std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Unverified: return "unverified";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct PropertyVerdict {
    std::string property;
    double gap = 0.0;
    double error_estimate = 0.0;
    double tolerance = 0.0;
    Verdict verdict = Verdict::Unverified;
    std::string note;
};

struct CompetitorRow {
    int index = 0;
    double delta_c = 0.0, delta_c_error = 0.0;
    double delta_e = 0.0, delta_e_error = 0.0;
};

struct VerificationReport {
    nlohmann::ordered_json fixture;
    nlohmann::ordered_json scheme;
    std::vector<PropertyVerdict> properties;
    std::vector<CompetitorRow> competitors;
    ResidualProfile profile;

    bool all_pass() const {
        for (const auto& p : properties)
            if (p.verdict != Verdict::Pass) return false;
        return !properties.empty();
    }
    const PropertyVerdict* find(const std::string& name) const {
        for (const auto& p : properties)
            if (p.property == name) return &p;
        return nullptr;
    }
};

inline nlohmann::ordered_json scheme_json(const QuadratureScheme& s) {
    nlohmann::ordered_json j;
    j["eps"] = s.eps;
    j["h"] = s.h;
    j["outer_radius"] = s.outer_radius;
    j["gauss_order"] = s.gauss_order;
    j["grading"] = s.grading;
    auto l = nlohmann::ordered_json::array();
    for (const auto& st : s.ladder) l.push_back({{"eps", st.eps}, {"h", st.h}});
    j["ladder"] = l;
    return j;
}

/// Tolerance contract: |gap| <= max(3 err, rel * scale).
inline double tolerance(double err, double scale, double rel = 1e-6) {
    return std::max(3.0 * err, rel * std::max(1.0, std::abs(scale)));
}

/// Runs (C2), (C3), (C1) or (C1') and the minimality chain on seeded competitors.
inline VerificationReport check_calibration_properties(const ExtremalField& f, double t0, Domain om,
                                                       const Potential& F, const PerturbationSpec& spec,
                                                       const QuadratureScheme& sch, const FracParams& p,
                                                       int profile_t_points = 33) {
    VerificationReport rep;
    rep.fixture = {{"field", f.name},        {"potential", F.name},
                   {"s", p.s},               {"omega", {om.lo, om.hi}},
                   {"t0", t0},               {"seed", spec.seed},
                   {"count", spec.count},    {"shape", shape_name(spec.shape)},
                   {"amplitude_fraction", spec.amplitude_fraction}};
    rep.scheme = scheme_json(sch);

    // t-grid around t0 inside I, symmetric where possible
    std::vector<double> tgrid;
    const double room = std::min(t0 - f.interval.lo, f.interval.hi - t0);
    const double span = std::isfinite(room) && room > 0 ? room : 1.0;
    for (int i = 0; i < profile_t_points; ++i)
        tgrid.push_back(profile_t_points > 1 ? t0 - span + 2.0 * span * i / (profile_t_points - 1) : t0);
    rep.profile = residual_sign_profile(f, om, F, tgrid, t0, sch, p);

    const auto comps = generate_admissible(f, t0, om, spec);
    auto rows = parallel::map<CompetitorRow>(comps.size(), [&](std::size_t i) {
        CompetitorRow r;
        r.index = static_cast<int>(i);
        std::tie(r.delta_c, r.delta_c_error) = calibration_delta(f, t0, comps[i], om, F, sch, p);
        auto de = energy_difference(comps[i].w, f.leaf_function(t0), om, F, sch, p);
        r.delta_e = de.value;
        r.delta_e_error = de.error_estimate;
        return r;
    });
    rep.competitors = rows;

    EnergyValue e0 = energy_semilinear(f.leaf_function(t0), om, F, sch, p);
    const double scale = e0.divergent || !std::isfinite(e0.value) ? 1.0 : e0.value;
    rep.fixture["base_energy"] = e0.divergent ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e0.value);
    rep.fixture["base_energy_divergent"] = e0.divergent;

    // (C2): C(u^{t0}) - E(u^{t0}); the leafwise integrals are empty for w = u^{t0}.
    {
        auto c0 = calibration_delta(f, t0, base_competitor(f, t0, om), om, F, sch, p);
        PropertyVerdict v{"C2", c0.first, c0.second, tolerance(c0.second, scale), Verdict::Pass, "contact at the base leaf"};
        if (std::abs(v.gap) > v.tolerance) v.verdict = Verdict::Fail;
        rep.properties.push_back(v);
    }
    auto worst = [&](auto gap_of, auto err_of, bool signed_lower) {
        PropertyVerdict v;
        v.verdict = Verdict::Pass;
        double margin = inf;
        for (const auto& r : rows) {
            const double g = gap_of(r), e = err_of(r), tol = tolerance(e, scale);
            const double m = signed_lower ? g + tol : tol - std::abs(g);
            if (m < margin) {
                margin = m;
                v.gap = g;
                v.error_estimate = e;
                v.tolerance = tol;
            }
        }
        if (margin < 0) v.verdict = Verdict::Fail;
        return v;
    };
    // (C3): E(w) - C(w) >= -tol
    {
        auto v = worst([](const CompetitorRow& r) { return r.delta_e - r.delta_c; },
                       [](const CompetitorRow& r) { return r.delta_e_error + r.delta_c_error; }, true);
        v.property = "C3";
        v.note = "E(w) - C(w), worst competitor";
        rep.properties.push_back(v);
    }
    // (C1) for extremal fields, (C1') when the one-sided hypothesis is certified
    {
        const bool extremal = rep.profile.classification == "extremal";
        auto v = extremal ? worst([](const CompetitorRow& r) { return r.delta_c; },
                                  [](const CompetitorRow& r) { return r.delta_c_error; }, false)
                          : worst([](const CompetitorRow& r) { return r.delta_c; },
                                  [](const CompetitorRow& r) { return r.delta_c_error; }, true);
        v.property = extremal ? "C1" : "C1'";
        v.note = extremal ? "C(w) - C(u^t0), worst competitor" : "C(w) - C(u^t0) >= 0, worst competitor";
        if (!rep.profile.one_sided_certified) {
            v.verdict = Verdict::Unverified;
            v.note = "leaf residual sign hypothesis not certified on the t-grid";
        }
        rep.properties.push_back(v);
    }
    // minimality chain: E(u^t0) <= C(w) + tol <= E(w) + tol
    {
        auto v = worst([](const CompetitorRow& r) { return r.delta_e; },
                       [](const CompetitorRow& r) { return r.delta_e_error; }, true);
        v.property = "minimality";
        v.note = "E(w) - E(u^t0), worst competitor";
        rep.properties.push_back(v);
    }
    return rep;
}

inline nlohmann::ordered_json to_json(const ResidualProfile& pr) {
    nlohmann::ordered_json j;
    j["classification"] = pr.classification;
    j["one_sided_certified"] = pr.one_sided_certified;
    j["x_points"] = pr.x_points;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : pr.rows)
        rows.push_back({{"t", r.t}, {"min_residual", r.min_residual}, {"max_residual", r.max_residual},
                        {"error_estimate", r.error_estimate}});
    j["rows"] = rows;
    return j;
}

inline nlohmann::ordered_json to_json(const PropertyVerdict& v) {
    return {{"property", v.property}, {"gap", v.gap},       {"error_estimate", v.error_estimate},
            {"tolerance", v.tolerance}, {"verdict", verdict_name(v.verdict)}, {"note", v.note}};
}

inline nlohmann::ordered_json to_json(const VerificationReport& r) {
    nlohmann::ordered_json j;
    j["fixture"] = r.fixture;
    j["scheme"] = r.scheme;
    auto props = nlohmann::ordered_json::array();
    for (const auto& p : r.properties) props.push_back(to_json(p));
    j["properties"] = props;
    auto comps = nlohmann::ordered_json::array();
    for (const auto& c : r.competitors)
        comps.push_back({{"index", c.index},
                         {"delta_c", c.delta_c},
                         {"delta_c_error", c.delta_c_error},
                         {"delta_e", c.delta_e},
                         {"delta_e_error", c.delta_e_error}});
    j["competitors"] = comps;
    j["residual_profile"] = to_json(r.profile);
    j["all_pass"] = r.all_pass();
    return j;
}

/// property,gap,error,tolerance,verdict
inline std::string summary_csv(const VerificationReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "property,gap,error,tolerance,verdict\n";
    for (const auto& p : r.properties)
        os << p.property << ',' << p.gap << ',' << p.error_estimate << ',' << p.tolerance << ','
           << verdict_name(p.verdict) << '\n';
    return os.str();
}

} // namespace calib
