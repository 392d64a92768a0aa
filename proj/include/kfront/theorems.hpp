#pragma once
// Numerical certificates: one CheckReport per inequality or identity instance.

#include <cstdint>
#include <random>
#include <string>

#include "kfront/analysis.hpp"

namespace kf {

// pass iff margin = rhs - lhs >= -slack.
struct CheckReport {
    std::string name;
    std::string digest;
    double lhs = 0.0, rhs = 0.0, margin = 0.0, slack = 0.0;
    bool pass = false;
    std::string note;

    std::string to_json() const;  // one line, fixed field order
};

CheckReport make_report(std::string name, std::string digest, double lhs, double rhs, double slack,
                        std::string note = "");

struct CheckError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Deterministic uniform draws on top of mt19937_64 (the standard distributions
// are implementation defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * ((g_() >> 11) * 0x1.0p-53); }
    int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)) % (hi - lo + 1); }

private:
    std::mt19937_64 g_;
};

// Sum of a few Gaussian bumps near the axis origin, with transverse modes for D >= 2.
// Far field zero.
Field random_smooth_field(const CylinderGrid& g, Rng& rng, double amplitude, double center_span = 3.0);

// ---- uncertainty principle

enum class Constraint { mean_zero, vanishes_at_0 };

// (int psi'^2)(int x^2 psi^2) >= 9/4 (int psi^2)^2; psi' by spectral differentiation.
CheckReport check_uncertainty(const CylinderGrid& g1, const Axial& psi, Constraint c);
double uncertainty_ratio(const CheckReport& r);  // rhs / lhs, 1 when both vanish

// Random constrained combinations of Gaussians.
Axial random_constrained_psi(const CylinderGrid& g1, Rng& rng, Constraint c);

// ---- L1 interpolation

double interpolation_constant(double delta, double L, int D);
CheckReport check_l1_interpolation(const Field& w, double delta);

// ---- sandwich, operator approximation, identities

struct SandwichOptions {
    double gamma = 0.0;      // spectral gap of B
    double c_upper = 0.0;    // <= 0 selects (max weight + 1) / 2 * 1.1
    double ratio_eps = 0.1;  // allowed |dF / (<v, Bv>/2) - 1|
};
std::vector<CheckReport> check_sandwich(const Field& v, const OperatorContext& ctx, const SandwichOptions& o);

enum class Rho { J, Jbar, smearing };
const char* rho_name(Rho r);
// ||v - rho * v|| <= (sum |y| rho) ||grad v||, forward differences, cell quadrature.
CheckReport check_smoother_defect(const Field& v, const OperatorContext& ctx, Rho rho);

struct OperatorRatios {
    double alpha_part = 0.0;  // ||Bv - alpha_tilde v|| / ||grad v||
    double mobility_part = 0.0;  // ||(sigma(m_bar) - sigma(m_beta)) v|| / ||grad v||
};
OperatorRatios operator_ratios(const Field& v, const OperatorContext& ctx);
std::vector<CheckReport> check_operator_approx(const Field& v, const OperatorContext& ctx);
// Odd dilated bumps v_l(x) = (x/l) exp(-x^2/(2 l^2)); the ratios must not grow with l.
std::vector<CheckReport> check_operator_family(const OperatorContext& ctx, const std::vector<double>& widths);

// x1 (Bw) - B(x1 w) + Cw = 0, d1(Bw) = g w + B(d1 w), Dv = Bv - g_tilde v, and
// the split of the axial dissipation into A v1 and B w parts.
std::vector<CheckReport> check_identities(const Field& v, const OperatorContext& ctx);

// ---- dissipation chain

// phi_N^2 rises from 0 at |x1| = N to 1 at |x1| = 2N (quintic smoothstep in |x1|).
double cutoff_phi(double x1, double N);
double cutoff_dphi(double x1, double N);

// sum_{j <= k} ||(-Laplacian)^{j/2} v||^2 by finite differences.
double sobolev_norm2(const Field& v, int k);

struct ChainOptions {
    double eps = 0.1;
    double N = 2.0;
    double eps0 = 1e-4;  // smallness budget for ||v||_{W^{s+1,2}}^2
};

struct ChainTerms {
    double I = 0, linear = 0, linear_x1 = 0, G = 0, U2 = 0, cutoff = 0, sobolev = 0;
    int s = 1;
};
ChainTerms dissipation_chain_terms(const Field& v, const OperatorContext& ctx, const ChainOptions& o);
std::vector<CheckReport> check_dissipation_chain(const Field& v, const OperatorContext& ctx, const ChainOptions& o);

// ---- ODE comparison

struct OdeBound {
    double f = 0, phi = 0, q = 0;
};
OdeBound ode_comparison_bound(double f0, double phi0, double A, double B, double t);

struct OdePath {
    std::vector<double> t, f, phi;
};
// RK4 for f' = -cA A f^2 / phi, phi' = cB B f.
OdePath rk4_comparison(double f0, double phi0, double A, double B, double T, double dt, double cA = 1.0,
                       double cB = 1.0);
std::vector<CheckReport> check_ode_path(const OdePath& p, double A, double B, double rel_slack = 1e-9);

// ---- trajectories

struct TrajectoryCheckOptions {
    double eps = 0.5;
    double eps1 = 0.0;  // <= 0 selects the median of I / f
    double min_fraction = 0.9;
    double identity_tol = 1e-3;  // |df/dt + I| <= tol * max(I, 1e-12)
};
struct TrajectoryCheckSummary {
    double eps1 = 0, B_measured = 0;
    int classified_first = 0, first_pass_f = 0, first_pass_phi = 0, first_pass_both = 0, identity_fail = 0;
};
std::vector<CheckReport> check_trajectory_inequalities(const TrajectoryLog& log, const ModelParams& P,
                                                       const TrajectoryCheckOptions& o,
                                                       TrajectoryCheckSummary* summary = nullptr);

struct SmoothingOptions {
    double t_min = 1e-3;
    double fit_lo = 1e-3, fit_hi = 1e-1;
    double p_lo = 0.8, p_hi = 1.2;
    double horizon = 1.0;
};
struct SmoothingSummary {
    double p = 0, r2 = 0, C1 = 0, C2 = 0, moment_factor = 0;
};
std::vector<CheckReport> check_smoothing(const TrajectoryLog& log, const SmoothingOptions& o,
                                         SmoothingSummary* summary = nullptr);

// ---- suites

struct SuiteConfig {
    int D = 2;
    double X = 10.0;
    int n1 = 512;
    double L = 1.0;
    int nperp = 32;
    double beta = 2.0;
    KernelSpec kernel;
    std::uint64_t seed = 42;
    int samples = 100;
    double eps = 0.5;
    double eps1 = 0.0;
    double delta = 0.5;
    double chain_eps = 0.1;
    double N_cutoff = 2.0;
    double eps0 = 1e-4;
    std::string trajectory_csv;  // trajectory / smoothing suites read this log
};

const std::vector<std::string>& suite_names();
std::vector<CheckReport> run_suite(const std::string& name, const SuiteConfig& cfg);

}  // namespace kf
