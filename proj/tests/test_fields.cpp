#include <gtest/gtest.h>

#include <cmath>

#include "calib/fields.hpp"

using namespace calib;

TEST(LeafParameter, InvertsTheFoliation) {
    const auto pn = make_peierls_nabarro_field();
    for (double x : {-0.9, 0.0, 0.7})
        for (double t : {-3.0, -0.5, 0.0, 2.5}) {
            const double l = pn.leaf(t, x);
            EXPECT_NEAR(leaf_parameter(pn, x, l), t, 1e-10);
        }
    const auto lin = make_linear_field();
    EXPECT_NEAR(leaf_parameter(lin, 0.4, 1.1), 0.7, 1e-12);
    const auto c = make_constant_field();
    EXPECT_NEAR(leaf_parameter(c, 5.0, 0.3), 0.3, 1e-12);
}

TEST(LeafParameter, OutsideFoliatedRegion) {
    const auto lin = make_linear_field();
    EXPECT_THROW(leaf_parameter(lin, 0.0, 10.0), AdmissibilityError);
    EXPECT_THROW(leaf_parameter(lin, 0.0, -10.0), AdmissibilityError);
}

TEST(Fields, ConstantLeaves) {
    const auto c = make_constant_field();
    EXPECT_EQ(c.leaf(0.3, -7.0), 0.3);
    EXPECT_EQ(c.leaf(0.3, 11.0), 0.3);
}

TEST(Fields, TranslationFieldRejectsNonMonotoneProfile) {
    AmbientFunction bump([](double y) { return std::exp(-y * y); }, ConstantLimits{0.0, 0.0}, "gauss");
    EXPECT_THROW(make_translation_field(bump, {-1.0, 1.0}), ValidationError);
    EXPECT_NO_THROW(make_translation_field(tanh_profile(), {-1.0, 1.0}));
}

TEST(Validation, PeierlsNabarroPasses) {
    QuadratureScheme sch;
    auto rep = validate_field(make_peierls_nabarro_field(), {-1.0, 1.0}, sch, FracParams::make(0.5), Interval{-2.0, 2.0});
    for (const auto& c : rep.conditions) EXPECT_TRUE(c.pass) << c.condition;
}

TEST(Validation, LinearFieldFailsL1sAtSmallOrder) {
    QuadratureScheme sch;
    auto rep = validate_field(make_linear_field(), {-1.0, 1.0}, sch, FracParams::make(0.25));
    ASSERT_NE(rep.find("l1s-finite"), nullptr);
    EXPECT_FALSE(rep.find("l1s-finite")->pass);
    EXPECT_FALSE(rep.pass());
}

TEST(Validation, FlatPatchFlagsStrictness) {
    ExtremalField f = make_linear_field();
    f.leaf = [](double t, double x) { return std::abs(x) < 0.5 ? x : x + t; };
    f.dleaf_dt = [](double, double x) { return std::abs(x) < 0.5 ? 0.0 : 1.0; };
    QuadratureScheme sch;
    auto rep = validate_field(f, {-1.0, 1.0}, sch, FracParams::make(0.75));
    EXPECT_FALSE(rep.find("strictly-increasing-in-domain")->pass);
}

TEST(Potentials, RegistryAndConsistency) {
    EXPECT_EQ(potential_by_name("cosine-well").name, "cosine-well");
    try {
        potential_by_name("quartic");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cosine-well"), std::string::npos);
    }
    for (auto& [name, make] : potential_registry()) EXPECT_TRUE(potential_consistent(make(), -3.0, 3.0)) << name;
}
