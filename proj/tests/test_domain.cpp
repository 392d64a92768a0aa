#include <gtest/gtest.h>

#include "kfront/model.hpp"
#include "kfront/numeric.hpp"
#include "oracles.hpp"

using namespace kf;

TEST(Grid, OneDimensionalSpacing) {
    const auto g = make_grid(1, 20.0, 2048);
    EXPECT_DOUBLE_EQ(g.h1, 40.0 / 2047.0);
    EXPECT_NEAR(g.h1, 0.01955, 1e-5);
    EXPECT_EQ(g.size(), 2048u);
    EXPECT_EQ(g.pad, 0);
}

TEST(Grid, TwoAndThreeDimensional) {
    const auto g2 = make_grid(2, 10.0, 512, 1.0, 32);
    EXPECT_EQ(g2.size(), 512u * 32u);
    EXPECT_DOUBLE_EQ(g2.hp, 1.0 / 32.0);
    const auto g3 = make_grid(3, 5.0, 128, 1.0, 16);
    EXPECT_EQ(g3.size(), 128u * 16u * 16u);
}

TEST(Grid, RejectsBadParameters) {
    EXPECT_THROW(make_grid(0, 1.0, 64), GridError);
    EXPECT_THROW(make_grid(4, 1.0, 64), GridError);
    EXPECT_THROW(make_grid(1, -1.0, 64), GridError);
    EXPECT_THROW(make_grid(1, 1.0, 8), GridError);
    EXPECT_THROW(make_grid(2, 1.0, 64, 1.0, 2), GridError);
    EXPECT_THROW(make_grid(2, 1.0, 64, 0.0, 8), GridError);
}

TEST(Grid, KernelBindingSetsPad) {
    const Kernel K(make_grid(1, 10.0, 201));
    EXPECT_GE(K.grid().pad * K.grid().h1, K.spec().R - 1e-12);
}

TEST(Integrate, ZeroAndVolume) {
    const auto g = make_grid(2, 10.0, 512, 1.0, 32);
    EXPECT_EQ(integrate(Field(g, 0.0)), 0.0);
    EXPECT_NEAR(integrate(Field(g, 1.0)), 20.0, 1e-12);
    EXPECT_NEAR(integrate(Field(g, 1.0), Quadrature::cell), 20.0 + g.h1, 1e-12);
}

TEST(Integrate, GaussianAgainstAdaptiveQuadrature) {
    const auto g = make_grid(1, 10.0, 512);
    Field f(g);
    for (int i = 0; i < g.n1; ++i) f.v[i] = std::exp(-0.7 * (g.x1(i) - 0.3) * (g.x1(i) - 0.3));
    const double ref = oracle::adaptive_simpson([](double x) { return std::exp(-0.7 * (x - 0.3) * (x - 0.3)); }, -10, 10);
    EXPECT_NEAR(integrate(f), ref, 1e-10);
}

TEST(Calculus, ConstantsHaveZeroDerivatives) {
    const auto g = make_grid(2, 5.0, 64, 1.0, 8);
    const Field f(g, 0.3, 0.3, 0.3);
    for (const auto& c : gradient(f)) EXPECT_LT(oracle::max_abs(c.v), 1e-14);
    EXPECT_LT(oracle::max_abs(laplacian(f).v), 1e-12);
}

TEST(Calculus, TransverseSine) {
    for (int n : {16, 32}) {
        const auto g = make_grid(2, 2.0, 32, 1.0, n);
        Field f(g);
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.nt(); ++j) f.at(i, j) = std::sin(2 * M_PI * transverse_coord(g, j, 0));
        const auto gt = grad_transverse(f);
        ASSERT_EQ(gt.size(), 1u);
        double err = 0;
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.nt(); ++j)
                err = std::max(err, std::fabs(gt[0].at(i, j) - 2 * M_PI * std::cos(2 * M_PI * transverse_coord(g, j, 0))));
        // Centered difference error (2 pi)^3 hp^2 / 6.
        EXPECT_LT(err, 1.05 * std::pow(2 * M_PI, 3) / 6.0 / (n * n));
    }
}

TEST(Calculus, DivergenceOfGradientMatchesSecondDifferences) {
    std::mt19937_64 rng(3);
    const auto g = make_grid(2, 6.0, 121, 1.0, 16);
    const Field f = oracle::smooth_random(g, rng);
    const Field dg = divergence(gradient(f));
    // Oracle: wide 5-point stencil (spacing 2h) that div(grad) reduces to.
    const int n = g.nperp;
    double err = 0, scale = 0;
    auto at = [&](int i, int j) {
        if (i < 0 || i >= g.n1) return 0.0;
        return f.at(i, static_cast<std::size_t>((j % n + n) % n));
    };
    for (int i = 2; i < g.n1 - 2; ++i)
        for (int j = 0; j < n; ++j) {
            const double ax = (at(i + 2, j) - 2 * at(i, j) + at(i - 2, j)) / (4 * g.h1 * g.h1);
            const double tr = (at(i, j + 2) - 2 * at(i, j) + at(i, j - 2)) / (4 * g.hp * g.hp);
            err = std::max(err, std::fabs(dg.at(i, j) - ax - tr));
            scale = std::max(scale, std::fabs(ax + tr));
        }
    EXPECT_LT(err, 1e-10 * scale);
    // And both approximate the compact Laplacian to second order.
    const Field lap = laplacian(f);
    double d = 0;
    for (std::size_t k = 0; k < f.size(); ++k) d = std::max(d, std::fabs(lap.v[k] - dg.v[k]));
    EXPECT_LT(d, 0.05 * scale);
}

TEST(Calculus, DivergenceRejectsWrongComponentCount) {
    const auto g = make_grid(2, 2.0, 32, 1.0, 8);
    EXPECT_THROW(divergence({Field(g)}), GridError);
    EXPECT_THROW(calculus(Calculus::divergence, {}), GridError);
}

TEST(Calculus, DiscreteIntegrationByParts) {
    const auto g = make_grid(1, 8.0, 401);
    Field f(g), h(g);
    for (int i = 0; i < g.n1; ++i) {
        const double x = g.x1(i);
        f.v[i] = std::exp(-x * x);
        h.v[i] = x * std::exp(-0.5 * x * x);
    }
    const Field fx = grad_axial(f), hx = grad_axial(h);
    EXPECT_NEAR(inner(fx, h), -inner(f, hx), 1e-10);
}

TEST(Convolve, PreservesConstants) {
    for (int D : {1, 2, 3}) {
        const Kernel K(make_grid(D, 4.0, 64, 1.0, 8));
        const Field c(K.grid(), 0.37, 0.37, 0.37);
        for (ConvMethod m : {ConvMethod::direct, ConvMethod::fft}) {
            const Field r = K.convolve(c, m);
            for (double x : r.v) EXPECT_NEAR(x, 0.37, 1e-14);
        }
    }
}

TEST(Convolve, MatchesDirectDoubleLoopOn128Points) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int D : {1, 2}) {
        const Kernel K(make_grid(D, 3.0, 128, 1.0, 8));
        Field f(K.grid(), 0.0, -0.4, 0.7);
        for (double& x : f.v) x = U(rng);
        const Field ref = oracle::direct_convolution(f, K.J());
        EXPECT_LE(oracle::max_abs_diff(K.convolve(f, ConvMethod::fft).v, ref.v), 1e-10);
        EXPECT_LE(oracle::max_abs_diff(K.convolve(f, ConvMethod::direct).v, ref.v), 1e-12);
    }
}

TEST(Convolve, StaysWithinRangeOfValuesAndFarField) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    const Kernel K(make_grid(2, 4.0, 96, 1.0, 8));
    Field f(K.grid(), 0.0, -0.9, 0.9);
    for (double& x : f.v) x = U(rng);
    for (double x : K.convolve(f).v) {
        EXPECT_GE(x, -0.9 - 1e-14);
        EXPECT_LE(x, 0.9 + 1e-14);
    }
}

TEST(Convolve, RejectsMismatchedGrid) {
    const Kernel K(make_grid(1, 4.0, 96));
    EXPECT_THROW(K.convolve(Field(make_grid(1, 4.0, 97))), GridError);
}

TEST(Spectral, DerivativeOfGaussian) {
    const auto g = make_grid(1, 12.0, 513);
    Field f(g);
    for (int i = 0; i < g.n1; ++i) f.v[i] = std::exp(-g.x1(i) * g.x1(i));
    const Field d = spectral_axial_derivative(f);
    double err = 0;
    for (int i = 0; i < g.n1; ++i) err = std::max(err, std::fabs(d.v[i] + 2 * g.x1(i) * f.v[i]));
    EXPECT_LT(err, 1e-10);
}

TEST(Numeric, CompensatedSumIsOrderRobust) {
    CompensatedSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    EXPECT_EQ(s.value(), 1.0);
}
