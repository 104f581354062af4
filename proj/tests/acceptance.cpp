// One line per acceptance criterion; nonzero exit if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "calib/experiment.hpp"

using namespace calib;
namespace fs = std::filesystem;

namespace {
int failures = 0;

void report(int k, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", k, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

QuadratureScheme scheme_for(const std::string& experiment, int grid, Domain om = {-1, 1}) {
    ExperimentConfig c;
    c.experiment = experiment;
    c.grid = grid;
    c.omega_lo = om.lo;
    c.omega_hi = om.hi;
    return make_scheme(c);
}

PerturbationSpec spec(int count, std::uint64_t seed = 42) {
    PerturbationSpec p;
    p.count = count;
    p.seed = seed;
    return p;
}

const Domain om{-1.0, 1.0};

void crit1() {
    const auto sch = scheme_for("flaplace", 64);
    double worst = 0, slowest = 0;
    for (double s : {0.25, 0.5, 0.75})
        for (double k : {1.0, 2.0})
            for (double x : {0.0, std::numbers::pi / 5}) {
                const auto t = std::chrono::steady_clock::now();
                AmbientFunction u = AmbientFunction([k](double y) { return std::cos(k * y); }, NoTail{}, "cos")
                                        .with_second_derivative([k](double y) { return -k * k * std::cos(k * y); });
                const auto r = frac_laplacian(u, x, sch, FracParams::make(s));
                worst = std::max(worst, std::abs(r.value - std::pow(k, 2 * s) * std::cos(k * x)));
                slowest = std::max(slowest, seconds_since(t));
            }
    report(1, worst <= 1e-3 && slowest < 10, "fractional Laplacian of cos(kx) vs symbol",
           "max abs error " + num(worst) + " over 12 points, slowest point " + num(slowest) + " s");
}

void crit2() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = make_peierls_nabarro_field();
    const auto sch = scheme_for("flaplace", 64);
    double worst = 0;
    for (double t : {-1.0, 0.0, 1.0})
        for (int i = 0; i <= 40; ++i) {
            const double x = -1.0 + 2.0 * i / 40;
            worst = std::max(worst, std::abs(leaf_residual(f, t, x, cosine_well(), sch, FracParams::make(0.5)).value));
        }
    const double secs = seconds_since(t0);
    report(2, worst <= 5e-3 && secs < 60, "Peierls-Nabarro leaves solve the half-Laplacian sine equation",
           "max residual " + num(worst) + " over 41 x 3 points in " + num(secs) + " s");
}

void crit3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = make_peierls_nabarro_field();
    const auto p = FracParams::make(0.5);
    const auto sch = scheme_for("verify", 128);
    const auto F = cosine_well();
    const double e0 = energy_semilinear(f.leaf_function(0.0), om, F, sch, p).value;
    const auto comps = generate_admissible(f, 0.0, om, spec(20));
    double worst_null = 0, worst_chain = inf;
    bool ok = true;
    for (const auto& c : comps) {
        const auto [dc, dce] = calibration_delta(f, 0.0, c, om, F, sch, p);
        const auto de = energy_difference(c.w, f.leaf_function(0.0), om, F, sch, p);
        const double tol_c = std::max(3 * dce, 1e-3 * std::abs(e0));
        const double tol_e = std::max(3 * (dce + de.error_estimate), 1e-3 * std::abs(e0));
        worst_null = std::max(worst_null, std::abs(dc) / tol_c);
        // E(u0) <= C(w) + tol and C(w) <= E(w) + tol
        const double chain = std::min(dc + tol_c, de.value - dc + tol_e);
        worst_chain = std::min(worst_chain, chain);
        ok = ok && std::abs(dc) <= tol_c && chain >= 0;
    }
    const double secs = seconds_since(t0);
    report(3, ok && secs < 600, "null-Lagrangian on 20 Peierls-Nabarro competitors",
           "max |dC|/tol " + num(worst_null) + ", min chain margin " + num(worst_chain) + ", E(u0) " + num(e0) +
               ", " + num(secs) + " s");
}

void crit4() {
    const auto f = make_peierls_nabarro_field();
    const auto sch = scheme_for("calibrate", 64);
    const auto comps = generate_admissible(f, 0.0, om, spec(5));
    double worst = 0;
    bool ok = true;
    for (double eps : {0.2, 0.1, 0.05, 0.025})
        for (const auto& c : comps) {
            const auto tc = calibration_C_eps_both(f, 0.0, c, om, eps, sch, FracParams::make(0.5));
            const double bound = 3 * (tc.direct_rel_err + tc.alt_rel_err);
            const double d = std::abs(tc.direct_rel - tc.alt_rel);
            worst = std::max(worst, d / bound);
            ok = ok && d <= bound;
        }
    report(4, ok, "truncated calibration: direct vs symmetrized form",
           "max |diff| / (3 x combined error) " + num(worst) + " over 4 cutoffs x 5 competitors");
}

void crit5() {
    const auto p = FracParams::make(0.5);
    const auto sch = scheme_for("calibrate", 64);
    double worst = inf;
    bool ok = true;
    for (const auto& f : {make_peierls_nabarro_field(), make_constant_field()})
        for (const auto& c : generate_admissible(f, 0.0, om, spec(20))) {
            const auto g = inequality_gap(f, 0.0, c, om, sch, p);
            worst = std::min(worst, g.gap + 3 * g.error_estimate);
            ok = ok && g.gap >= -3 * g.error_estimate;
        }
    report(5, ok, "E_s(w) - C_s(w) >= -3 x error on both bounded fixtures",
           "min of gap + 3 x error " + num(worst) + " over 40 competitors");
}

void crit6() {
    const auto f = make_constant_field();
    const auto rep = check_calibration_properties(f, 0.0, om, negative_quadratic(), spec(20), scheme_for("verify", 64),
                                                  FracParams::make(0.5));
    double prof = 0;
    for (const auto& r : rep.profile.rows)
        prof = std::max({prof, std::abs(r.min_residual - r.t), std::abs(r.max_residual - r.t)});
    bool ok = prof <= 1e-6 && rep.profile.one_sided_certified;
    double worst = inf;
    for (const auto& r : rep.competitors) {
        const double tc = tolerance(r.delta_c_error, 1.0), te = tolerance(r.delta_e_error, 1.0);
        worst = std::min({worst, r.delta_c + tc, r.delta_e + te});
        ok = ok && r.delta_c >= -tc && r.delta_e >= -te;
    }
    report(6, ok, "one-sided fixture: constant field with F = -u^2/2",
           "profile deviation from t " + num(prof) + ", min margin " + num(worst) + " over 20 competitors");
}

void crit7() {
    const auto sch = scheme_for("counterexample", 64);
    const auto lin = make_linear_field();
    const auto c2 = generate_admissible(lin, 0.0, om, spec(3));
    double best = 0;
    for (const auto& c : c2) {
        const auto v = candidate_functional(Candidate::F2, lin, 0.0, c, om, zero_potential(), sch, FracParams::make(0.75), false);
        best = std::max(best, std::abs(v.delta) / v.delta_error);
    }
    const auto pn = make_peierls_nabarro_field();
    const auto v3 = candidate_functional(Candidate::F3, pn, 0.0, base_competitor(pn, 0.0, om), om, cosine_well(), sch,
                                         FracParams::make(0.5));
    const double r3 = std::abs(v3.contact_gap) / v3.contact_error;
    const auto cw = generate_admissible(pn, 0.0, om, spec(1)).front();
    const auto v1 = candidate_functional(Candidate::F1, pn, 0.0, cw, om, cosine_well(), sch, FracParams::make(0.5), false);
    const auto id = f1_identity_residual(pn, 0.0, cw, om, sch, FracParams::make(0.5));
    const bool f1_ok = std::isfinite(v1.delta) && std::isfinite(v1.delta_error) && id.label == "inconclusive";
    report(7, best > 10 && r3 > 10 && f1_ok, "candidate functionals",
           "F2 |gap|/error " + num(best) + "; F3 contact |gap|/error " + num(r3) + "; F1 gap " + num(v1.delta) +
               " +- " + num(v1.delta_error) + " labelled " + id.label);
}

void crit8() {
    const Domain unit{0.0, 1.0};
    const auto f = make_linear_field();
    const auto sch = scheme_for("local", 64, unit);
    const auto comps = generate_admissible(f, 0.0, unit, spec(10));
    double worst_alt = 0, worst_dec = 0;
    bool ok = true;
    for (const auto& G : {make_dirichlet(), make_p_dirichlet(4)})
        for (const auto& c : comps) {
            const auto a = calibration_CL(G, f, c.w, unit, sch), b = calibration_CL_alt(G, f, 0.0, c.w, unit, sch);
            const double bound = 3 * (a.error_estimate + b.error_estimate);
            worst_alt = std::max(worst_alt, std::abs(a.value - b.value) / bound);
            const auto r = weierstrass_decomposition_residual(G, f, c.w, unit, sch);
            worst_dec = std::max(worst_dec, std::abs(r.value) / (3 * r.error_estimate));
            ok = ok && std::abs(a.value - b.value) <= bound && std::abs(r.value) <= 3 * r.error_estimate;
        }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-10, 10);
    double min_ex = inf;
    for (const auto& G : {make_dirichlet(), make_p_dirichlet(4)})
        for (int i = 0; i < 1000; ++i) {
            const double q = U(rng), qt = U(rng);
            const double e = excess(G, 0.0, 0.0, q, qt);
            const double scale = std::pow(std::max({1.0, std::abs(q), std::abs(qt)}), 4);
            min_ex = std::min(min_ex, e / scale);
            ok = ok && e >= -1e-8 * scale;
        }
    report(8, ok, "local calibration: alternative form, Weierstrass decomposition, excess sign",
           "max |C_L - C_L_alt|/(3 x error) " + num(worst_alt) + ", max |residual|/(3 x error) " + num(worst_dec) +
               ", min scaled excess " + num(min_ex));
}

void crit9() {
    const auto f = make_peierls_nabarro_field();
    const Domain o{-1, 1};
    const auto w = generate_admissible(f, 0.0, o, spec(1)).front().w;
    const double x = o.lo + 0.65 * o.length();
    std::vector<double> res;
    for (int k = 0; k < 4; ++k) res.push_back(std::abs(leaf_gradient_identity_residual(f, w, x, 0.05 / std::pow(2, k))));
    double worst = inf;
    std::string orders;
    for (int k = 1; k < 4; ++k) {
        const double o2 = std::log2(res[k - 1] / res[k]);
        worst = std::min(worst, o2);
        orders += (k > 1 ? ", " : "") + num(o2);
    }
    report(9, worst >= 1.8, "gradient identity residual decays at second order",
           "observed orders " + orders + " (residual " + num(res.front()) + " -> " + num(res.back()) + ")");
}

void crit10() {
    const auto fam = make_level_set_family(identity_profile());
    const KernelParams k{0.25, 1.0, 1};
    const auto E0 = IntervalSet::halfline_right(0.0);
    const auto P0 = nonlocal_perimeter(E0, om, k);
    const auto C0 = calibration_perimeter(fam, E0, om, k);
    bool ok = std::abs(C0.value - P0.value) <= 3 * (C0.error_estimate + P0.error_estimate);
    double worst_alt = 0, min_c3 = inf, min_min = inf;
    for (int i = 0; i < 20; ++i) {
        const auto F = random_interval_competitor(E0, om, 1000 + i, 1 + i % 3);
        const auto C = calibration_perimeter(fam, F, om, k), A = calibration_perimeter_alt(fam, F, om, k);
        const auto P = nonlocal_perimeter(F, om, k);
        const double bound = 3 * (C.error_estimate + A.error_estimate);
        const double tol = tolerance(C.error_estimate + P.error_estimate, P.value);
        worst_alt = std::max(worst_alt, std::abs(C.value - A.value) / bound);
        min_c3 = std::min(min_c3, P.value - C.value + tol);
        min_min = std::min(min_min, P.value - P0.value + tol);
        ok = ok && std::abs(C.value - A.value) <= bound && C.value <= P.value + tol && P0.value <= P.value + tol;
    }
    report(10, ok, "nonlocal perimeter calibration at s = 0.25",
           "C(E0) - P(E0) " + num(C0.value - P0.value) + ", max |C - C_alt|/(3 x error) " + num(worst_alt) +
               ", min C3 margin " + num(min_c3) + ", min minimality margin " + num(min_min));
}

int run_cli(const std::string& args, const std::string& env) {
    const std::string cmd = env + " " + CALIB_CLI_PATH + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void crit11() {
    const fs::path base = fs::temp_directory_path() / "calib_acceptance";
    fs::remove_all(base);
    bool ok = true;
    std::string detail;
    for (const std::string exp : {"verify --count 4", "calibrate --count 2 --cutoffs 0.2 0.1", "perimeter --s 0.25",
                                  "counterexample --candidate F1"}) {
        std::string first;
        for (int th : {1, 2, 4}) {
            const fs::path d = base / (std::to_string(th) + "_" + exp.substr(0, exp.find(' ')));
            const int code = run_cli(exp + " --grid 32 --seed 5 --out " + d.string(), "CALIB_THREADS=" + std::to_string(th));
            const std::string bytes = slurp(d / "report.json");
            if (code != 0 || bytes.empty()) ok = false;
            if (th == 1) first = bytes;
            else if (bytes != first) ok = false;
        }
        detail += (detail.empty() ? "" : ", ") + exp.substr(0, exp.find(' '));
    }
    fs::remove_all(base);
    report(11, ok, "reports identical under CALIB_THREADS = 1, 2, 4", detail);
}
} // namespace

int main() {
    try {
        crit1();
        crit2();
        crit3();
        crit4();
        crit5();
        crit6();
        crit7();
        crit8();
        crit9();
        crit10();
        crit11();
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
