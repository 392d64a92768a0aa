#include <gtest/gtest.h>

#include "kfront/instanton.hpp"
#include "oracles.hpp"

using namespace kf;

TEST(Equilibrium, MatchesBisectionOracle) {
    EXPECT_NEAR(equilibrium_magnetization(2.0), oracle::mbeta_bisection(2.0), 1e-14);
    EXPECT_NEAR(equilibrium_magnetization(2.0), 0.9575040240772688, 1e-14);
    const double m15 = equilibrium_magnetization(1.5);
    EXPECT_GT(m15, 0.85);
    EXPECT_LT(m15, 0.86);
    EXPECT_NEAR(m15, oracle::mbeta_bisection(1.5), 1e-14);
}

TEST(Equilibrium, NearCriticalAndResidual) {
    // Near the bifurcation m_beta^2 ~ 3 (beta - 1) / beta^3.
    const double m = equilibrium_magnetization(1.0001);
    EXPECT_GT(m, 0.0);
    EXPECT_NEAR(m, oracle::mbeta_bisection(1.0001), 1e-14);
    EXPECT_NEAR(m, std::sqrt(3e-4 / std::pow(1.0001, 3)), 1e-4);
    EXPECT_LT(equilibrium_magnetization(1.0 + 1e-7), 1e-3);
    for (double b : {1.2, 1.5, 2.0, 3.0}) {
        const double mb = equilibrium_magnetization(b);
        EXPECT_LE(std::fabs(mb - std::tanh(b * mb)), 1e-12);
    }
    EXPECT_THROW(equilibrium_magnetization(1.0), ModelError);
    EXPECT_THROW(equilibrium_magnetization(0.9), ModelError);
}

TEST(Params, CachedQuantities) {
    const ModelParams P = make_params(2.0);
    EXPECT_DOUBLE_EQ(P.sigma_beta, 2.0 * (1 - P.mbeta * P.mbeta));
    EXPECT_GT(P.sigma_beta, 0.0);
    EXPECT_LT(P.sigma_beta, 1.0);
    EXPECT_NEAR(P.alpha_tilde, 1.0 / P.sigma_beta - 1.0, 1e-15);
    EXPECT_NEAR(mobility(P.mbeta, 2.0), P.sigma_beta, 1e-15);
}

TEST(DoubleWell, ValuesAndSymmetry) {
    EXPECT_NEAR(double_well(0.0, 2.0), -std::log(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(double_well(1.0, 2.0), -0.5, 1e-15);
    EXPECT_NEAR(double_well(-1.0, 2.0), -0.5, 1e-15);
    for (double m : {0.1, 0.33, 0.7, 0.99}) EXPECT_DOUBLE_EQ(double_well(m, 2.0), double_well(-m, 2.0));
    EXPECT_THROW(double_well(1.01, 2.0), ModelError);
}

TEST(DoubleWell, MinimizedAtEquilibrium) {
    const double mb = equilibrium_magnetization(2.0);
    const double fmin = double_well(mb, 2.0);
    for (int k = -10000; k <= 10000; ++k) {
        const double m = k / 10000.0;
        if (std::fabs(std::fabs(m) - mb) < 1e-4) continue;
        EXPECT_GT(double_well(m, 2.0), fmin) << m;
    }
}

TEST(Mobility, Values) {
    EXPECT_EQ(mobility(1.0, 2.0), 0.0);
    EXPECT_EQ(mobility(-1.0, 2.0), 0.0);
    EXPECT_EQ(mobility(0.0, 2.0), 2.0);
    // Face mobility tends to the pointwise one.
    EXPECT_NEAR(face_mobility(0.3, 0.3 + 1e-9, 2.0), mobility(0.3, 2.0), 1e-8);
    const double a = 0.2, b = 0.6;
    EXPECT_NEAR(face_mobility(a, b, 2.0), 2.0 * (b - a) / (std::atanh(b) - std::atanh(a)), 1e-14);
}

TEST(Kernel, NormalizedSymmetricAndSupported) {
    for (int D : {1, 2, 3}) {
        const Kernel K(make_grid(D, 4.0, 81, 1.0, 8));
        double s = 0;
        for (double w : K.J().w) {
            EXPECT_GE(w, 0.0);
            s += w;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        const Axial jb = projected_kernel(K);
        double sb = 0;
        for (std::size_t o = 0; o < jb.size(); ++o) {
            sb += jb[o] * K.grid().h1;
            EXPECT_DOUBLE_EQ(jb[o], jb[jb.size() - 1 - o]);
        }
        EXPECT_NEAR(sb, 1.0, 1e-12);
    }
}

TEST(Kernel, ProjectedKernelMatchesTransverseQuadrature) {
    // Fine transverse sampling so the lattice sum of the C^3 bump is converged.
    const Kernel K(make_grid(2, 3.0, 61, 1.0, 256));
    const double h1 = K.grid().h1;
    for (int o = 0; o <= K.pad(); ++o) {
        const double x = o * h1;
        const double half = std::sqrt(std::max(0.0, 1 - x * x));
        const double ref = half > 0 ? oracle::adaptive_simpson(
                                          [x](double y) {
                                              const double s = 1 - x * x - y * y;
                                              return s > 0 ? std::pow(s, 4) : 0.0;
                                          },
                                          -half, half)
                                    : 0.0;
        // Closed form of the same integral: (1 - x^2)^{9/2} * 256/315.
        EXPECT_NEAR(ref, std::pow(half, 9) * 256.0 / 315.0, 1e-12);
        EXPECT_NEAR(K.jbar_value(o), K.c() * ref, 1e-10);
    }
}

TEST(FreeEnergy, ConstantStates) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(2, 5.0, 128, 1.0, 8));
    EXPECT_NEAR(free_energy(Field(K.grid(), P.mbeta, P.mbeta, P.mbeta), P, K), 0.0, 1e-12);
    // m = 0 inside, zero far field: only the local term survives.
    const double f = free_energy(Field(K.grid(), 0.0, 0.0, 0.0), P, K);
    const double ref = (double_well(0, 2.0) - double_well(P.mbeta, 2.0)) * K.grid().n1 * K.grid().h1;
    EXPECT_NEAR(f, ref, 1e-10 * std::fabs(ref));
    EXPECT_THROW(free_energy(Field(K.grid(), 1.5), P, K), ModelError);
}

TEST(FreeEnergy, SingleConvolutionFormMatchesDoubleSum) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.03, 0.03);
    const ModelParams P = make_params(2.0);
    for (int D : {1, 2}) {
        const Kernel K(make_grid(D, 4.0, 64, 1.0, 8));
        const FrontFamily fam(solve_instanton(P, K));
        Field m = shifted_front(fam, 0.2, K.grid());
        for (double& x : m.v) x += U(rng);
        const double a = free_energy(m, P, K), b = free_energy_double_sum(m, P, K);
        EXPECT_NEAR(a, b, 1e-12 * std::fabs(b));
    }
}

TEST(FreeEnergy, TransverseReductionToOneDimension) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(2, 10.0, 512, 1.0, 16));
    const FrontFamily fam(solve_instanton(P, K));
    const Field m = shifted_front(fam, 0.0, K.grid());
    const double F = free_energy(m, P, K), F1 = free_energy_1d(fam.base().m, P, K);
    EXPECT_GT(F1, 0.0);
    EXPECT_NEAR(F, K.grid().cross_area() * F1, 1e-8 * F1);
}

TEST(FreeEnergy, InstantonBelowTanhProfile) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(1, 20.0, 2048));
    const Profile1D p = solve_instanton(P, K);
    Axial t(p.m.size());
    for (int i = 0; i < K.grid().n1; ++i) t[i] = P.mbeta * std::tanh(P.beta * P.mbeta * K.grid().x1(i));
    EXPECT_LT(free_energy_1d(p.m, P, K), free_energy_1d(t, P, K));
}

TEST(FreeEnergy, ReflectionAndLatticeShiftInvariance) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-0.02, 0.02);
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(1, 10.0, 401));
    const FrontFamily fam(solve_instanton(P, K));
    Field m = shifted_front(fam, 0.0, K.grid());
    for (int i = 150; i < 250; ++i) m.v[i] += U(rng);
    Field r = m;
    for (int i = 0; i < K.grid().n1; ++i) r.v[i] = -m.v[K.grid().n1 - 1 - i];
    EXPECT_NEAR(free_energy(r, P, K), free_energy(m, P, K), 1e-13);
    Field s = m;
    for (int i = K.grid().n1 - 1; i >= 3; --i) s.v[i] = m.v[i - 3];
    for (int i = 0; i < 3; ++i) s.v[i] = m.v[0];
    const Dissipation d0 = dissipation(m, P, K), d1 = dissipation(s, P, K);
    EXPECT_NEAR(free_energy(s, P, K), free_energy(m, P, K), 1e-12);
    EXPECT_NEAR(d1.total, d0.total, 1e-10 * d0.total);
}

TEST(FirstVariation, AnalyticConstants) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(1, 5.0, 64));
    const Variation v = first_variation(Field(K.grid(), 0.5, 0.5, 0.5), P, K);
    for (double x : v.mu.v) EXPECT_NEAR(x, std::atanh(0.5) / 2.0 - 0.5, 1e-14);
    const Variation e = first_variation(Field(K.grid(), P.mbeta, P.mbeta, P.mbeta), P, K);
    for (double x : e.mu.v) EXPECT_NEAR(x, 0.0, 1e-14);
    EXPECT_FALSE(e.clipped);
    const Variation c = first_variation(Field(K.grid(), 1.0, 1.0, 1.0), P, K);
    EXPECT_TRUE(c.clipped);
}

TEST(FirstVariation, VanishesOnTheFront) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(1, 20.0, 1024));
    const FrontFamily fam(solve_instanton(P, K));
    const Variation v = first_variation(shifted_front(fam, 0.0, K.grid()), P, K);
    EXPECT_LT(oracle::max_abs(v.mu.v), 1e-11);
    for (int s : {-5, 7}) {
        const Variation w = first_variation(shifted_front(fam, s * K.grid().h1, K.grid()), P, K);
        EXPECT_LT(oracle::max_abs(w.mu.v), 1e-10);
    }
}

TEST(Dissipation, ZeroAtStationaryStates) {
    const ModelParams P = make_params(2.0);
    const Kernel K(make_grid(2, 10.0, 256, 1.0, 8));
    const FrontFamily fam(solve_instanton(P, K));
    EXPECT_EQ(dissipation(Field(K.grid(), P.mbeta, P.mbeta, P.mbeta), P, K).total, 0.0);
    const Dissipation d = dissipation(shifted_front(fam, 0.0, K.grid()), P, K);
    EXPECT_LT(d.total, 1e-20);
    EXPECT_EQ(d.transverse, 0.0);
}
