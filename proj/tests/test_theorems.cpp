#include <gtest/gtest.h>

#include "kfront/theorems.hpp"
#include "oracles.hpp"

using namespace kf;

namespace {

struct Ctx {
    ModelParams P = make_params(2.0);
    Kernel K;
    FrontFamily fam;
    OperatorContext ctx;
    Ctx(int D, double X, int n1, int nperp = 1)
        : K(make_grid(D, X, n1, 1.0, nperp)), fam(solve_instanton(P, K)), ctx(make_context(P, K, fam, 0.0)) {}
};

const Ctx& two_d() {
    static const Ctx c(2, 10.0, 512, 8);
    return c;
}

Field orthogonal(const Ctx& c, Rng& rng, double l2) {
    Field v = random_smooth_field(c.K.grid(), rng, 1.0);
    v = project_off(make_projection(c.ctx.dmbar, c.K.grid().h1), v);
    const double n = norm2(v);
    for (double& x : v.v) x *= l2 / n;
    return v;
}

}  // namespace

TEST(Report, MarginAndSlack) {
    const CheckReport a = make_report("x", "d", 1.0, 2.0, 0.0);
    EXPECT_TRUE(a.pass);
    EXPECT_DOUBLE_EQ(a.margin, 1.0);
    EXPECT_FALSE(make_report("x", "d", 2.0, 1.0, 0.5).pass);
    EXPECT_TRUE(make_report("x", "d", 1.5, 1.0, 0.5).pass);
    const std::string j = a.to_json();
    EXPECT_EQ(j.find('\n'), std::string::npos);
    EXPECT_NE(j.find("\"check\":\"x\""), std::string::npos);
}

TEST(Uncertainty, ZeroExtremalAndScaling) {
    const auto g = make_grid(1, 16.0, 4097);
    const CheckReport z = check_uncertainty(g, Axial(g.n1, 0.0), Constraint::mean_zero);
    EXPECT_TRUE(z.pass);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_DOUBLE_EQ(uncertainty_ratio(z), 1.0);
    // x e^{-x^2/2} is odd, so both constraints hold, and it attains the constant.
    Axial psi(g.n1);
    for (int i = 0; i < g.n1; ++i) psi[i] = g.x1(i) * std::exp(-0.5 * g.x1(i) * g.x1(i));
    for (Constraint c : {Constraint::mean_zero, Constraint::vanishes_at_0}) {
        const CheckReport r = check_uncertainty(g, psi, c);
        EXPECT_TRUE(r.pass);
        EXPECT_NEAR(uncertainty_ratio(r), 1.0, 1e-8);
    }
    Rng rng(5);
    const Axial q = random_constrained_psi(g, rng, Constraint::mean_zero);
    Axial q2 = q;
    for (double& x : q2) x *= 3.7;
    const double r1 = uncertainty_ratio(check_uncertainty(g, q, Constraint::mean_zero));
    EXPECT_GE(r1, 1.0);
    EXPECT_NEAR(uncertainty_ratio(check_uncertainty(g, q2, Constraint::mean_zero)), r1, 1e-10 * r1);
}

TEST(Uncertainty, RejectsUnconstrainedInput) {
    const auto g = make_grid(1, 16.0, 1025);
    Axial psi(g.n1);
    for (int i = 0; i < g.n1; ++i) psi[i] = std::exp(-0.5 * g.x1(i) * g.x1(i));
    EXPECT_THROW(check_uncertainty(g, psi, Constraint::mean_zero), CheckError);
    EXPECT_THROW(check_uncertainty(g, psi, Constraint::vanishes_at_0), CheckError);
}

TEST(Interpolation, ConstantAndZeroField) {
    // delta = 1: s = 1, C^2 = L^d sqrt(pi) Gamma(1/2) / Gamma(1) = L^d pi.
    EXPECT_NEAR(interpolation_constant(1.0, 2.0, 2), std::sqrt(2.0 * M_PI), 1e-13);
    EXPECT_NEAR(interpolation_constant(1.0, 1.0, 1), std::sqrt(M_PI), 1e-13);
    const auto g = make_grid(2, 8.0, 128, 1.0, 8);
    EXPECT_TRUE(check_l1_interpolation(Field(g, 0.0), 0.5).pass);
    Rng rng(1);
    for (int k = 0; k < 5; ++k) EXPECT_TRUE(check_l1_interpolation(random_smooth_field(g, rng, 0.1), 0.5).pass);
}

TEST(Ode, BoundProperties) {
    const double A = 4.5, B = 2.0;
    const OdeBound b0 = ode_comparison_bound(0.3, 1.7, A, B, 0.0);
    EXPECT_NEAR(b0.f, 0.3, 1e-15);
    EXPECT_NEAR(b0.phi, 1.7, 1e-15);
    EXPECT_DOUBLE_EQ(b0.q, 9.0 / 13.0);
    double prev = b0.f;
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
        const OdeBound b = ode_comparison_bound(0.3, 1.7, A, B, t);
        EXPECT_LT(b.f, prev);
        prev = b.f;
    }
    EXPECT_LT(ode_comparison_bound(0.2, 1.7, A, B, 5.0).f, ode_comparison_bound(0.3, 1.7, A, B, 5.0).f);
    // Large-time rate: f ~ t^{-q}.
    const double r = std::log(ode_comparison_bound(0.3, 1.7, A, B, 2e6).f / ode_comparison_bound(0.3, 1.7, A, B, 1e6).f) /
                     std::log(2.0);
    EXPECT_NEAR(r, -9.0 / 13.0, 1e-5);
}

TEST(Ode, EqualityPathMatchesAndStrictPathStaysBelow) {
    const double A = 4.5, B = 2.0;
    const OdePath eq = rk4_comparison(1.0, 1.0, A, B, 20.0, 1e-3);
    for (const auto& r : check_ode_path(eq, A, B, 1e-9)) EXPECT_TRUE(r.pass) << r.name;
    const OdePath st = rk4_comparison(1.0, 1.0, A, B, 20.0, 1e-3, 1.3, 0.7);
    for (const auto& r : check_ode_path(st, A, B, 0.0)) EXPECT_TRUE(r.pass) << r.name;
    // Closed form along the equality path.
    const OdeBound b = ode_comparison_bound(1.0, 1.0, A, B, 20.0);
    EXPECT_NEAR(eq.f.back(), b.f, 1e-9 * b.f);
}

TEST(Sandwich, ZeroAndSmallPerturbations) {
    const auto& c = two_d();
    const GapReport gr = spectral_gap(c.ctx);
    SandwichOptions o;
    o.gamma = gr.gamma;
    for (const auto& r : check_sandwich(Field(c.K.grid(), 0.0), c.ctx, o)) EXPECT_TRUE(r.pass) << r.name;
    Rng rng(3);
    const Field v = orthogonal(c, rng, 1.0);
    // dF / <v, Bv> tends to 1/2 as the amplitude shrinks.
    double prev = INFINITY;
    for (double s : {3e-2, 1e-2, 3e-3, 1e-3}) {
        Field w = v;
        for (double& x : w.v) x *= s;
        const auto rs = check_sandwich(w, c.ctx, o);
        for (const auto& r : rs) {
            if (r.name == "sandwich_ratio") {
                const double dev = r.lhs;
                EXPECT_LE(dev, prev * 1.0001 + 1e-12);
                prev = dev;
            }
            if (s <= 1e-2) EXPECT_TRUE(r.pass) << r.name << " at " << s;
        }
    }
}

TEST(Sandwich, RejectsNonOrthogonalPerturbation) {
    const auto& c = two_d();
    Field v = extend_axial(c.K.grid(), c.ctx.dmbar, 0, 0);
    for (double& x : v.v) x *= 1e-3;
    EXPECT_THROW(check_sandwich(v, c.ctx, SandwichOptions{}), CheckError);
}

TEST(SmootherDefect, AllSmoothersOnRandomFields) {
    const auto& c = two_d();
    Rng rng(8);
    for (int k = 0; k < 3; ++k) {
        const Field v = random_smooth_field(c.K.grid(), rng, 0.1);
        for (Rho r : {Rho::J, Rho::Jbar, Rho::smearing}) EXPECT_TRUE(check_smoother_defect(v, c.ctx, r).pass) << rho_name(r);
    }
    EXPECT_TRUE(check_smoother_defect(Field(c.K.grid(), 0.0), c.ctx, Rho::J).pass);
}

TEST(Identities, HoldToRoundoff) {
    const auto& c = two_d();
    Rng rng(2);
    const Field v = orthogonal(c, rng, 1e-2);
    for (const auto& r : check_identities(v, c.ctx)) EXPECT_TRUE(r.pass) << r.name << " " << r.to_json();
}

TEST(Chain, CutoffAndZeroPerturbation) {
    EXPECT_EQ(cutoff_phi(0.5, 2.0), 0.0);
    EXPECT_EQ(cutoff_phi(5.0, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(cutoff_phi(-3.0, 2.0), cutoff_phi(3.0, 2.0));
    EXPECT_GT(cutoff_phi(3.0, 2.0), 0.0);
    EXPECT_LT(cutoff_phi(3.0, 2.0), 1.0);
    // Derivative against a centered difference.
    const double h = 1e-6;
    EXPECT_NEAR(cutoff_dphi(2.7, 2.0), (cutoff_phi(2.7 + h, 2.0) - cutoff_phi(2.7 - h, 2.0)) / (2 * h), 1e-6);
    const auto& c = two_d();
    const ChainTerms t = dissipation_chain_terms(Field(c.K.grid(), 0.0), c.ctx, ChainOptions{});
    // m = m_bar up to the instanton residual.
    EXPECT_LT(t.I, 1e-20);
    EXPECT_LT(std::fabs(t.G), 1e-20);
    EXPECT_EQ(t.sobolev, 0.0);
    for (const auto& r : check_dissipation_chain(Field(c.K.grid(), 0.0), c.ctx, ChainOptions{}))
        EXPECT_TRUE(r.pass) << r.name;
}

TEST(Chain, SobolevNormIncreasesWithOrder) {
    const auto& c = two_d();
    Rng rng(4);
    const Field v = random_smooth_field(c.K.grid(), rng, 0.1);
    double prev = 0;
    for (int k = 0; k <= 4; ++k) {
        const double s = sobolev_norm2(v, k);
        EXPECT_GT(s, prev);
        prev = s;
    }
    EXPECT_NEAR(sobolev_norm2(v, 0), inner(v, v, Quadrature::cell), 1e-12 * prev);
}

TEST(Trajectory, StationaryLogHasNoFirstRegimeRows) {
    TrajectoryLog log;
    for (int k = 0; k < 20; ++k) {
        TrajectoryRow r;
        r.t = 0.1 * k;
        r.phi = 1.0;
        log.rows.push_back(r);
    }
    TrajectoryCheckSummary s;
    const auto rs = check_trajectory_inequalities(log, make_params(2.0), TrajectoryCheckOptions{}, &s);
    EXPECT_FALSE(rs.empty());
    EXPECT_EQ(s.classified_first, 0);
    EXPECT_EQ(s.B_measured, 0.0);
    TrajectoryLog tiny;
    tiny.rows.resize(3);
    EXPECT_THROW(check_trajectory_inequalities(tiny, make_params(2.0), TrajectoryCheckOptions{}), CheckError);
}

TEST(Suites, NamesAndUnknown) {
    const auto& n = suite_names();
    for (const char* s : {"uncertainty", "interpolation", "sandwich", "operators", "dissipation_chain", "ode",
                          "trajectory", "smoothing"})
        EXPECT_NE(std::find(n.begin(), n.end(), s), n.end()) << s;
    EXPECT_THROW(run_suite("bogus", SuiteConfig{}), CheckError);
}

TEST(Suites, OdeSuitePasses) {
    SuiteConfig cfg;
    cfg.samples = 4;
    for (const auto& r : run_suite("ode", cfg)) EXPECT_TRUE(r.pass) << r.to_json();
}
