#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "calib/quadrature.hpp"
#include "calib/sampled.hpp"

using namespace calib;
constexpr double pi = std::numbers::pi;

TEST(Normalization, HalfLaplacianInOneDimension) {
    EXPECT_NEAR(normalization_constant(1, 0.5), 1.0 / pi, 1e-15);
}

TEST(Normalization, MatchesReflectedGammaForm) {
    // |Gamma(-s)| = Gamma(1-s)/s
    for (double s = 0.05; s < 1.0; s += 0.05) {
        const double alt = s * std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(pi) * std::tgamma(1.0 - s));
        EXPECT_NEAR(normalization_constant(1, s), alt, 1e-13 * alt) << s;
        EXPECT_GT(normalization_constant(1, s), 0.0);
    }
}

TEST(Normalization, RejectsOrderOutsideUnitInterval) {
    EXPECT_THROW(normalization_constant(1, 0.0), DomainError);
    EXPECT_THROW(normalization_constant(1, 1.0), DomainError);
}

TEST(Kernel, Values) {
    const auto p = FracParams::make(0.5);
    EXPECT_NEAR(riesz_kernel(1.0, p), 1.0 / pi, 1e-15);
    EXPECT_NEAR(riesz_kernel(2.0, p), 1.0 / (4 * pi), 1e-15);
    EXPECT_THROW(riesz_kernel(0.0, p), DomainError);
}

TEST(GaussLegendre, ExactForPolynomials) {
    for (int n : {2, 5, 8, 16}) {
        const auto& g = gauss_legendre(n);
        double wsum = 0.0, mono = 0.0;
        for (int i = 0; i < n; ++i) {
            wsum += g.weights[i];
            mono += g.weights[i] * std::pow(g.nodes[i], 2 * n - 2);
        }
        EXPECT_NEAR(wsum, 2.0, 1e-14);
        EXPECT_NEAR(mono, 2.0 / (2 * n - 1), 1e-14);
    }
}

TEST(PairwiseSum, AccurateAndOrderFixed) {
    std::vector<double> v;
    long double exact = 0;
    for (int i = 1; i <= 100000; ++i) {
        v.push_back(1.0 / i);
        exact += 1.0L / i;
    }
    EXPECT_NEAR(pairwise_sum(v), static_cast<double>(exact), 1e-12);
    EXPECT_EQ(pairwise_sum(v), pairwise_sum(v));
}

TEST(Parallel, MapIsIndependentOfThreadCount) {
    auto run = [](int th) {
        parallel::set_threads(th);
        auto r = parallel::map(1000, [](std::size_t i) { return std::sin(0.01 * i); });
        return pairwise_sum(r);
    };
    const double a = run(1), b = run(3);
    parallel::set_threads(1);
    EXPECT_EQ(a, b);
}

TEST(Richardson, SquareLadder) {
    auto r = richardson_extrapolate({{1.0, 2.0}, {0.5, 1.25}, {0.25, 1.0625}});
    EXPECT_NEAR(r.limit, 1.0, 1e-12);
    EXPECT_NEAR(r.order, 2.0, 1e-9);
    EXPECT_FALSE(r.warning);
}

TEST(Richardson, ConstantLadder) {
    auto r = richardson_extrapolate({{1.0, 3.0}, {0.5, 3.0}, {0.25, 3.0}});
    EXPECT_EQ(r.limit, 3.0);
    EXPECT_EQ(r.error_estimate, 0.0);
}

TEST(Richardson, NonMonotoneLadderWarns) {
    auto r = richardson_extrapolate({{1.0, 1.0}, {0.5, 2.0}, {0.25, 0.5}});
    EXPECT_TRUE(r.warning);
    EXPECT_GT(r.error_estimate, 0.0);
}

TEST(Richardson, RejectsShortOrUnorderedLadders) {
    EXPECT_THROW(richardson_extrapolate({{1.0, 1.0}, {0.5, 1.0}}), ConfigError);
    EXPECT_THROW(richardson_extrapolate({{1.0, 1.0}, {2.0, 1.0}, {0.5, 1.0}}), ConfigError);
}

TEST(Scheme, Validation) {
    QuadratureScheme s;
    EXPECT_NO_THROW(s.validate(2.0));
    s.outer_radius = 5.0;
    EXPECT_THROW(s.validate(2.0), ConfigError);
    QuadratureScheme t;
    t.eps = 0.001;
    EXPECT_THROW(t.validate(2.0), ConfigError);
    QuadratureScheme u;
    u.ladder = {{0.01, 0.005}, {0.02, 0.01}};
    EXPECT_THROW(u.validate(2.0), ConfigError);
}

TEST(ShellTail, DivergenceAndGeometricTail) {
    auto d = shell_tail(1.0, 1.0, 1.0);
    EXPECT_TRUE(d.divergent);
    auto g = shell_tail(1.0, 0.5, 0.5);
    EXPECT_FALSE(g.divergent);
    EXPECT_NEAR(g.value, 0.5, 1e-15);
}

// ------------------------------------------------------------- operator

namespace {
AmbientFunction cosk(double k) {
    return AmbientFunction([k](double x) { return std::cos(k * x); }, NoTail{}, "cos")
        .with_second_derivative([k](double x) { return -k * k * std::cos(k * x); });
}
QuadratureScheme cos_scheme() {
    QuadratureScheme s;
    s.outer_radius = 2000.0;
    return s;
}
} // namespace

TEST(FracLaplacianEps, ConstantsAndOddFunctionsVanish) {
    QuadratureScheme s;
    const auto p = FracParams::make(0.5);
    EXPECT_EQ(frac_laplacian_eps(constant_function(7.0), 0.3, s, p), 0.0);
    AmbientFunction id([](double y) { return y; }, PowerLaw{1.0}, "id");
    EXPECT_NEAR(frac_laplacian_eps(id, 0.0, s, FracParams::make(0.75)), 0.0, 1e-12);
}

TEST(FracLaplacianEps, SmallCutoffNearSymbol) {
    QuadratureScheme s = cos_scheme();
    s.eps = 1e-3;
    s.h = 1e-3;
    const double v = frac_laplacian_eps(cosk(1.0), 0.0, s, FracParams::make(0.5));
    // truncation removes about c * eps * u''(0) = 1e-3 / pi
    EXPECT_NEAR(v, 1.0 - 1e-3 / pi, 2e-4);
}

TEST(FracLaplacianEps, NonFiniteValuesRaise) {
    AmbientFunction bad([](double y) { return y > 3 ? std::nan("") : 0.0; }, NoTail{}, "bad");
    EXPECT_THROW(frac_laplacian_eps(bad, 0.0, QuadratureScheme{}, FracParams::make(0.5)), NumericError);
}

TEST(FracLaplacian, SpectralOracleCosine) {
    const auto sch = cos_scheme();
    for (double s : {0.25, 0.5, 0.75})
        for (double k : {1.0, 2.0})
            for (double x : {0.0, pi / 5}) {
                const auto r = frac_laplacian(cosk(k), x, sch, FracParams::make(s));
                const double exact = std::pow(k, 2 * s) * std::cos(k * x);
                EXPECT_NEAR(r.value, exact, 1e-4) << "s=" << s << " k=" << k << " x=" << x;
                EXPECT_LT(r.error_estimate, 1e-3);
            }
    const auto r = frac_laplacian(cosk(1.0), pi / 3, sch, FracParams::make(0.75));
    EXPECT_NEAR(r.value, 0.5, 1e-4);
}

TEST(FracLaplacian, ArctanLayer) {
    QuadratureScheme sch;
    AmbientFunction u = AmbientFunction([](double y) { return 2 * std::atan(y); }, ConstantLimits{-pi, pi}, "2atan")
                            .with_second_derivative([](double y) { return -4 * y / ((1 + y * y) * (1 + y * y)); });
    const auto p = FracParams::make(0.5);
    EXPECT_NEAR(frac_laplacian(u, 0.0, sch, p).value, 0.0, 1e-10);
    EXPECT_NEAR(frac_laplacian(u, 1.0, sch, p).value, 1.0, 1e-6);
}

TEST(FracLaplacian, ShortLadderIsConfigError) {
    QuadratureScheme sch;
    sch.ladder = {{0.04, 0.02}};
    EXPECT_THROW(frac_laplacian(constant_function(1.0), 0.0, sch, FracParams::make(0.5)), ConfigError);
}

TEST(FracLaplacian, PointOutsideSmoothNeighborhood) {
    AmbientFunction u([](double y) { return y; }, PowerLaw{1.0}, "id", Box{-1.0, 1.0});
    EXPECT_THROW(frac_laplacian(u, 2.0, QuadratureScheme{}, FracParams::make(0.75)), DomainError);
}

TEST(L1s, Values) {
    QuadratureScheme sch;
    const auto half = FracParams::make(0.5);
    auto z = l1s_norm(constant_function(0.0), sch, half);
    EXPECT_TRUE(z.finite);
    EXPECT_EQ(z.value, 0.0);
    auto one = l1s_norm(constant_function(1.0), sch, half);
    EXPECT_TRUE(one.finite);
    EXPECT_NEAR(one.value, pi, 1e-8);
    AmbientFunction id([](double y) { return y; }, PowerLaw{1.0}, "id");
    EXPECT_FALSE(l1s_norm(id, sch, FracParams::make(0.25)).finite);
    EXPECT_TRUE(l1s_norm(id, sch, FracParams::make(0.75)).finite);
}

TEST(Sampled, HermiteReproducesCubicAndTails) {
    std::vector<double> xs, vs;
    for (int i = 0; i <= 40; ++i) {
        const double x = -2.0 + 0.1 * i;
        xs.push_back(x);
        vs.push_back(std::tanh(x));
    }
    auto f = make_sampled_function(xs, vs, ConstantLimits{-1.0, 1.0});
    EXPECT_NEAR(f(0.33), std::tanh(0.33), 1e-4);
    EXPECT_EQ(f(10.0), 1.0);
    EXPECT_EQ(f(-10.0), -1.0);
    EXPECT_THROW(make_sampled_function({0, 1}, {0, 1}, NoTail{}), ConfigError);
}

TEST(Sampled, CsvLoader) {
    const std::string path = ::testing::TempDir() + "calib_sample.csv";
    {
        std::ofstream o(path);
        o << "x,value\n";
        for (int i = 0; i <= 20; ++i) o << -1.0 + 0.1 * i << ',' << 2.0 * (-1.0 + 0.1 * i) << '\n';
    }
    auto f = load_csv_function(path, PowerLaw{1.0});
    EXPECT_NEAR(f(0.25), 0.5, 1e-12);
    EXPECT_NEAR(f(3.0), 6.0, 1e-9);
    EXPECT_THROW(load_csv_function(path + ".missing", NoTail{}), ConfigError);
    std::remove(path.c_str());
}
