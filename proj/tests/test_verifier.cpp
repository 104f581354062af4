#include <gtest/gtest.h>

#include <cmath>

#include "calib/verifier.hpp"

using namespace calib;

namespace {
const Domain om{-1.0, 1.0};

QuadratureScheme scheme(int grid = 32) {
    QuadratureScheme s;
    s.h = om.length() / grid;
    s.eps = std::max(s.eps, s.h);
    s.ladder = QuadratureScheme::geometric_ladder(0.04, 3);
    return s;
}

PerturbationSpec spec(int count, std::uint64_t seed = 42, PerturbationShape shape = PerturbationShape::Bump) {
    PerturbationSpec p;
    p.count = count;
    p.seed = seed;
    p.shape = shape;
    return p;
}
} // namespace

TEST(Shapes, Names) {
    for (auto s : {PerturbationShape::Bump, PerturbationShape::MultiBump, PerturbationShape::LeafModulation})
        EXPECT_EQ(shape_by_name(shape_name(s)), s);
    EXPECT_THROW(shape_by_name("spike"), ConfigError);
}

TEST(Generate, ZeroAmplitudeReproducesLeaf) {
    const auto f = make_peierls_nabarro_field();
    auto sp = spec(3);
    sp.amplitude_fraction = 0.0;
    for (const auto& c : generate_admissible(f, 0.0, om, sp))
        for (double x : {-0.9, 0.0, 0.4}) EXPECT_EQ(c.w(x), f.leaf(0.0, x));
}

TEST(Generate, PeierlsNabarroCompetitorsAreAdmissible) {
    const auto f = make_peierls_nabarro_field();
    for (auto shape : {PerturbationShape::Bump, PerturbationShape::MultiBump, PerturbationShape::LeafModulation}) {
        const auto comps = generate_admissible(f, 0.0, om, spec(5, 42, shape));
        ASSERT_EQ(comps.size(), 5u);
        for (const auto& c : comps) {
            EXPECT_TRUE(c.exterior_matches_leaf);
            EXPECT_TRUE(c.graph_in_G);
            for (double x : {-3.0, -1.0, 1.0, 2.5}) EXPECT_EQ(c.w(x), f.leaf(0.0, x));
            for (int i = 0; i <= 100; ++i) {
                const double x = -1.0 + 0.02 * i;
                EXPECT_TRUE(f.interval.contains(leaf_parameter(f, x, c.w(x))));
                EXPECT_LE(std::abs(c.eta(x)), 0.5 * 4.0 + 1e-12);
            }
        }
    }
}

TEST(Generate, ConstantFieldIsShiftedBump) {
    const auto f = make_constant_field();
    for (const auto& c : generate_admissible(f, 0.0, om, spec(4)))
        for (double x : {-0.5, 0.1, 0.6}) {
            EXPECT_NEAR(c.w(x), c.eta(x), 1e-15);
            EXPECT_TRUE(f.interval.contains(c.w(x)));
        }
}

TEST(Generate, Errors) {
    const auto f = make_constant_field();
    EXPECT_THROW(generate_admissible(f, 2.0, om, spec(1)), AdmissibilityError);
    auto sp = spec(1);
    sp.amplitude_fraction = 1.0;
    EXPECT_THROW(generate_admissible(f, 0.0, om, sp), ConfigError);
    sp.amplitude_fraction = 0.0;
    EXPECT_NO_THROW(generate_admissible(f, 2.0, om, sp));
}

TEST(Generate, Deterministic) {
    const auto f = make_peierls_nabarro_field();
    const auto a = generate_admissible(f, 0.0, om, spec(4, 9)), b = generate_admissible(f, 0.0, om, spec(4, 9));
    const auto c = generate_admissible(f, 0.0, om, spec(4, 10));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].w(0.1), b[i].w(0.1));
    EXPECT_NE(a[0].w(0.1), c[0].w(0.1));
}

TEST(Profile, Classification) {
    const std::vector<double> tg{-1.0, -0.5, 0.0, 0.5, 1.0};
    const auto sch = scheme();
    const auto pn = residual_sign_profile(make_peierls_nabarro_field(), om, cosine_well(), tg, 0.0, sch,
                                          FracParams::make(0.5), 11);
    EXPECT_EQ(pn.classification, "extremal");
    const auto c = residual_sign_profile(make_constant_field(), om, negative_quadratic(), tg, 0.0, sch,
                                         FracParams::make(0.5), 11);
    EXPECT_EQ(c.classification, "one-sided");
    EXPECT_TRUE(c.one_sided_certified);
    for (const auto& r : c.rows) {
        EXPECT_NEAR(r.min_residual, r.t, 1e-12);
        EXPECT_NEAR(r.max_residual, r.t, 1e-12);
    }
    const auto lin = residual_sign_profile(make_linear_field(), om, zero_potential(), tg, 0.0, sch,
                                           FracParams::make(0.75), 11);
    EXPECT_EQ(lin.classification, "extremal");
    const auto bad = residual_sign_profile(make_peierls_nabarro_field(), om, zero_potential(), tg, 0.0, sch,
                                           FracParams::make(0.5), 11);
    EXPECT_EQ(bad.classification, "neither");
    EXPECT_FALSE(bad.one_sided_certified);
}

TEST(Tolerance, Contract) {
    EXPECT_DOUBLE_EQ(tolerance(1e-3, 10.0), 3e-3);
    EXPECT_DOUBLE_EQ(tolerance(0.0, 10.0), 1e-5);
    EXPECT_EQ(tolerance(0.0, 0.1), 1e-6);
}

TEST(Properties, PeierlsNabarroPasses) {
    const auto rep = check_calibration_properties(make_peierls_nabarro_field(), 0.0, om, cosine_well(), spec(6),
                                                  scheme(), FracParams::make(0.5));
    for (const char* name : {"C2", "C3", "C1", "minimality"}) {
        ASSERT_NE(rep.find(name), nullptr) << name;
        EXPECT_EQ(rep.find(name)->verdict, Verdict::Pass) << name;
    }
    EXPECT_TRUE(rep.all_pass());
    EXPECT_EQ(rep.competitors.size(), 6u);
}

TEST(Properties, ConstantFieldUsesOneSidedForm) {
    const auto rep = check_calibration_properties(make_constant_field(), 0.0, om, negative_quadratic(), spec(6),
                                                  scheme(), FracParams::make(0.5));
    EXPECT_EQ(rep.find("C1"), nullptr);
    ASSERT_NE(rep.find("C1'"), nullptr);
    EXPECT_TRUE(rep.all_pass());
    for (const auto& r : rep.competitors) EXPECT_GE(r.delta_e, -tolerance(r.delta_e_error, 1.0));
}

TEST(Properties, UncertifiedHypothesisIsUnverified) {
    const auto rep = check_calibration_properties(make_peierls_nabarro_field(), 0.0, om, zero_potential(), spec(2),
                                                  scheme(), FracParams::make(0.5));
    ASSERT_NE(rep.find("C1'"), nullptr);
    EXPECT_EQ(rep.find("C1'")->verdict, Verdict::Unverified);
    EXPECT_FALSE(rep.all_pass());
}

TEST(Report, SeededBytesAreStable) {
    auto run = [](int threads) {
        parallel::set_threads(threads);
        const auto rep = check_calibration_properties(make_peierls_nabarro_field(), 0.0, om, cosine_well(), spec(4, 7),
                                                      scheme(), FracParams::make(0.5));
        return to_json(rep).dump() + summary_csv(rep);
    };
    const auto a = run(1), b = run(3), c = run(1);
    parallel::set_threads(0);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}
