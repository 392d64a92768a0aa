#pragma once
// Trajectory diagnostics: front tracking, excess free energy, moments, norms,
// logs and decay-exponent fits.

#include <string>

#include "kfront/dynamics.hpp"
#include "kfront/linops.hpp"

namespace kf {

struct TrajectoryRow {
    double t = 0;
    double excess_F = 0;
    double dissipation_I_axial = 0, dissipation_I_transverse = 0, dissipation_I_total = 0;
    double a_t = 0;
    double mass_defect = 0;
    double phi = 0;             // weighted moment
    double phi_unweighted = 0;  // unweighted moment
    double l1_v = 0, l2_v = 0;
    double h1_v = 0;  // ||grad v||_2
    double h2_v = 0;  // ||Laplacian v||_2
    double x1_v = 0;  // ||x1 v||_2
    double x1_v0 = 0; // ||x1 (m - m_bar_{a(0)})||_2
    double linf_m = 0;
    double boundary_activity = 0;
    double overshoot_count = 0;
};

struct LogError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TrajectoryLog {
public:
    static const std::vector<std::string>& columns();
    std::vector<TrajectoryRow> rows;

    std::vector<double> column(const std::string& name) const;  // throws LogError if unknown
    void write_csv(const std::string& path) const;
    // Rebuilds a log from a CSV written by write_csv; missing columns read as 0.
    static TrajectoryLog read(const std::string& path);
};

// Reads any CSV with a header row into named columns.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    const std::vector<double>& column(const std::string& name) const;
    bool has(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);
std::string format_double(double x);  // 17 significant digits

struct FrontFit {
    double a = 0.0;
    double d = 0.0;   // squared L2 distance to m_bar_a (transverse mean, uniform weights)
    double d1 = 0.0;  // d'(a)
    double d2 = 0.0;  // d''(a)
    bool convex = false;
    int iterations = 0;
    bool fallback = false;
};

struct TrackingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

FrontFit track_front(const Field& m, const FrontFamily& fam, double a_prev);
// Lattice shift in [-X/4, X/4] closest to m, used to seed the first tracking.
double scan_front(const Field& m, const FrontFamily& fam);

struct Split {
    Axial v1;
    Field w;
};
Split split_field(const Field& v);

// F(m) of the reference front, L^d F_1(m_bar_0).
double reference_free_energy(const FrontFamily& fam, const ModelParams& P, const Kernel& K);
double excess_free_energy(const Field& m, const ModelParams& P, const Kernel& K, double F_ref);

enum class PhiVariant { weighted, unweighted };
double moment_phi(const Field& v, const OperatorContext& ctx, PhiVariant var = PhiVariant::weighted);

double shift_from_mass(const Field& m0, const FrontFamily& fam, const ModelParams& P);

// v = m - m_bar_a on the grid of m.
Field perturbation(const Field& m, const FrontFamily& fam, double a);

struct ExponentFit {
    double q = 0.0, c1 = 0.0, r2 = 0.0, log_y0 = 0.0;
    int n = 0;
};
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least squares of log y = log y0 - q log(1 + c1 t) over t in [t0, t1].
ExponentFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1);
ExponentFit fit_decay_exponent(const TrajectoryLog& log, const std::string& column, double t0, double t1);

// dy/dt at every sample from the five nearest samples (Fornberg weights);
// centered in the interior, one-sided at the ends.
std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& y);

// Max |v| over the outer `rows` axial rows at each end.
double boundary_activity(const Field& v, int rows = 4);

// Computes TrajectoryRow values for successive states of one run.
class Diagnostics {
public:
    Diagnostics(const ModelParams& P, const Kernel& K, const FrontFamily& fam, const Field& m0);
    TrajectoryRow measure(const SimState& s);
    double a_pred() const { return a_pred_; }
    double a0() const { return a0_; }
    double F_ref() const { return F_ref_; }

private:
    ModelParams P_;
    const Kernel* K_;
    const FrontFamily* fam_;
    double F_ref_ = 0, a_pred_ = 0, a0_ = 0, a_prev_ = 0, mass_ref_ = 0;
    bool first_ = true;
};

// Runs the flow and logs a row at every observer call. A tracked shift moving
// more than 10 h1 between rows raises TrackingError.
TrajectoryLog simulate(const Field& m0, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K,
                       const FrontFamily& fam, SimState* final_state = nullptr);

}  // namespace kf
