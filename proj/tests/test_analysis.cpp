#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "kfront/analysis.hpp"
#include "oracles.hpp"

using namespace kf;

namespace {

struct Case {
    ModelParams P = make_params(2.0);
    Kernel K;
    FrontFamily fam;
    Case(int D, double X, int n1, int nperp = 1, double L = 1.0)
        : K(make_grid(D, X, n1, L, nperp)), fam(solve_instanton(P, K)) {}
};

const Case& one_d() {
    static const Case s(1, 20.0, 1024);
    return s;
}

// Brute-force squared distance from m1 to m_bar_a, uniform weights.
double dist(const Axial& m1, const FrontFamily& fam, double a) {
    const Axial r = fam.values(a);
    double d = 0;
    for (std::size_t i = 0; i < r.size(); ++i) d += (m1[i] - r[i]) * (m1[i] - r[i]);
    return d;
}

}  // namespace

TEST(Tracking, RecoversOffLatticeShift) {
    const auto& s = one_d();
    const Field m = shifted_front(s.fam, 0.37, s.K.grid());
    const FrontFit f = track_front(m, s.fam, 0.0);
    EXPECT_NEAR(f.a, 0.37, 1e-8);
    EXPECT_TRUE(f.convex);
    EXPECT_NEAR(scan_front(m, s.fam), 0.37, s.K.grid().h1);
}

TEST(Tracking, SymmetricPerturbationKeepsCenter) {
    // An odd perturbation preserves m(x) = -m(-x), so the nearest front stays at 0.
    const auto& s = one_d();
    Field m = shifted_front(s.fam, 0.0, s.K.grid());
    for (int i = 0; i < s.K.grid().n1; ++i) {
        const double x = s.K.grid().x1(i);
        m.v[i] += 0.02 * x * std::exp(-x * x);
    }
    EXPECT_NEAR(track_front(m, s.fam, 0.1).a, 0.0, 1e-8);
}

TEST(Tracking, AgreesWithFineScan) {
    const auto& s = one_d();
    const auto& g = s.K.grid();
    Field m = shifted_front(s.fam, -0.81, g);
    for (int i = 0; i < g.n1; ++i) m.v[i] += 0.03 * std::exp(-(g.x1(i) - 0.4) * (g.x1(i) - 0.4));
    const FrontFit f = track_front(m, s.fam, -0.8);
    const double step = g.h1 / 8;
    double best = 0, bd = INFINITY;
    for (int k = -200; k <= 200; ++k) {
        const double a = -0.8 + k * step, d = dist(m.v, s.fam, a);
        if (d < bd) {
            bd = d;
            best = a;
        }
    }
    EXPECT_NEAR(f.a, best, step);
    EXPECT_LE(dist(m.v, s.fam, f.a), bd * (1 + 1e-12));
}

TEST(Split, MeanAndOrthogonalPart) {
    const Case s(2, 4.0, 64, 8);
    std::mt19937_64 rng(3);
    const Field v = oracle::smooth_random(s.K.grid(), rng);
    const Split sp = split_field(v);
    const Axial wm = transverse_mean(sp.w);
    EXPECT_LT(oracle::max_abs(wm), 1e-15);
    for (int i = 0; i < v.grid.n1; ++i)
        for (std::size_t j = 0; j < v.grid.nt(); ++j) EXPECT_NEAR(sp.v1[i] + sp.w.at(i, j), v.at(i, j), 1e-15);
    // Pythagoras in L2.
    const Field v1 = extend_axial(v.grid, sp.v1, 0, 0);
    EXPECT_NEAR(inner(v, v), inner(v1, v1) + inner(sp.w, sp.w), 1e-12 * inner(v, v));
}

TEST(Energy, ExcessVanishesOnFrontAndIsPositiveOtherwise) {
    const Case s(2, 10.0, 256, 8);
    const double Fr = reference_free_energy(s.fam, s.P, s.K);
    EXPECT_NEAR(excess_free_energy(shifted_front(s.fam, 0.0, s.K.grid()), s.P, s.K, Fr), 0.0, 1e-9);
    Field m = shifted_front(s.fam, 0.0, s.K.grid());
    std::mt19937_64 rng(1);
    const Field b = oracle::smooth_random(s.K.grid(), rng, 0.01);
    for (std::size_t k = 0; k < m.size(); ++k) m.v[k] += b.v[k];
    EXPECT_GT(excess_free_energy(m, s.P, s.K, Fr), 0.0);
}

TEST(Moments, PhiOfZeroIsCrossArea) {
    const Case s(2, 6.0, 96, 8, 2.0);
    const OperatorContext ctx = make_context(s.P, s.K, s.fam, 0.0);
    const Field z(s.K.grid(), 0.0);
    EXPECT_DOUBLE_EQ(moment_phi(z, ctx), 2.0);
    EXPECT_DOUBLE_EQ(moment_phi(z, ctx, PhiVariant::unweighted), 2.0);
    std::mt19937_64 rng(2);
    const Field v = oracle::smooth_random(s.K.grid(), rng);
    EXPECT_GT(moment_phi(v, ctx), 2.0);
    EXPECT_GT(moment_phi(v, ctx, PhiVariant::unweighted), moment_phi(v, ctx));
}

TEST(Mass, ShiftFromMassOfTranslatedFront) {
    const auto& s = one_d();
    for (double b : {0.0, 0.25, -1.1}) EXPECT_NEAR(shift_from_mass(shifted_front(s.fam, b, s.K.grid()), s.fam, s.P), b, 1e-6);
}

TEST(Perturbation, ZeroAtTheFront) {
    const auto& s = one_d();
    const Field v = perturbation(shifted_front(s.fam, 0.5, s.K.grid()), s.fam, 0.5);
    EXPECT_LT(oracle::max_abs(v.v), 1e-15);
    EXPECT_EQ(boundary_activity(v), 0.0);
}

TEST(Fit, SyntheticPowerLaw) {
    std::vector<double> t, y;
    for (int k = 0; k <= 400; ++k) {
        t.push_back(0.25 * k);
        y.push_back(3.0 * std::pow(1 + t.back(), -0.7));
    }
    const ExponentFit f = fit_decay_exponent(t, y, 0.0, 1e300);
    EXPECT_NEAR(f.q, 0.7, 1e-3);
    EXPECT_NEAR(f.c1, 1.0, 1e-2);
    EXPECT_GT(f.r2, 0.999999);
    EXPECT_EQ(f.n, 401);
}

TEST(Fit, ConstantSeriesAndErrors) {
    std::vector<double> t{0, 1, 2, 3, 4}, y(5, 2.0);
    EXPECT_NEAR(fit_decay_exponent(t, y, 0, 10).q, 0.0, 1e-12);
    EXPECT_THROW(fit_decay_exponent(t, y, 10, 20), FitError);
    y[2] = -1;
    EXPECT_THROW(fit_decay_exponent(t, y, 0, 10), FitError);
}

TEST(TimeDerivative, ExactOnQuartics) {
    std::vector<double> t, y;
    double tt = 0;
    for (int k = 0; k < 30; ++k) {
        t.push_back(tt);
        y.push_back(1 - tt + 0.5 * tt * tt * tt - 0.1 * tt * tt * tt * tt);
        tt += 0.05 + 0.01 * (k % 3);
    }
    const auto d = time_derivative(t, y);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double x = t[k];
        EXPECT_NEAR(d[k], -1 + 1.5 * x * x - 0.4 * x * x * x, 1e-9) << k;
    }
}

TEST(Log, CsvRoundTrip) {
    TrajectoryLog log;
    for (int k = 0; k < 4; ++k) {
        TrajectoryRow r;
        r.t = 0.1 * k;
        r.excess_F = 1.0 / (k + 3);
        r.a_t = -0.3 * k;
        r.phi = 1 + k;
        r.x1_v0 = 1e-17 * k;
        log.rows.push_back(r);
    }
    const auto path = (std::filesystem::temp_directory_path() / "kfront_log_roundtrip.csv").string();
    log.write_csv(path);
    const TrajectoryLog back = TrajectoryLog::read(path);
    ASSERT_EQ(back.rows.size(), 4u);
    for (const auto& c : TrajectoryLog::columns()) EXPECT_EQ(back.column(c), log.column(c)) << c;
    const CsvTable tab = read_csv(path);
    EXPECT_TRUE(tab.has("excess_F"));
    EXPECT_EQ(tab.header.size(), TrajectoryLog::columns().size());
    EXPECT_THROW(log.column("nope"), LogError);
    std::remove(path.c_str());
}

TEST(Simulate, LogsRowsAndTracksSmallBump) {
    const Case s(1, 10.0, 256);
    Field m0 = shifted_front(s.fam, 0.0, s.K.grid());
    for (int i = 0; i < s.K.grid().n1; ++i) m0.v[i] += 0.01 * std::exp(-std::pow(s.K.grid().x1(i) - 2, 2));
    IntegratorConfig cfg;
    cfg.t_end = 0.5;
    cfg.output_every = 0.1;
    SimState fin;
    const TrajectoryLog log = simulate(m0, cfg, s.P, s.K, s.fam, &fin);
    // Rows every round(0.1 / dt) steps plus the final state.
    ASSERT_GE(log.rows.size(), 6u);
    ASSERT_LE(log.rows.size(), 7u);
    EXPECT_EQ(log.rows.front().t, 0.0);
    EXPECT_NEAR(log.rows.back().t, 0.5, 1e-12);
    for (std::size_t k = 1; k < log.rows.size(); ++k) {
        EXPECT_LE(log.rows[k].excess_F, log.rows[k - 1].excess_F + 1e-12);
        EXPECT_NEAR(log.rows[k].mass_defect, log.rows[0].mass_defect, 1e-12);
    }
    EXPECT_LT(std::fabs(log.rows.back().a_t), 0.1);
    EXPECT_NEAR(fin.t, 0.5, 1e-12);
}
