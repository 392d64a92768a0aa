#pragma once
// Planar front m_bar_0 = tanh(beta J_bar * m_bar_0), its shifted family and
// tail-decay diagnostics.

#include <string>

#include "kfront/model.hpp"

namespace kf {

struct Profile1D {
    CylinderGrid grid;  // one-dimensional axial grid
    Axial m, dm, d2m;   // profile and centered-difference derivatives
    double mbeta = 0.0;
    double a = 0.0;
    double residual = 0.0;  // sup |m - tanh(beta J_bar * m)|
    int iterations = 0;
    double theta = 1.0;  // damping in use at exit
    std::vector<double> history;
};

struct InstantonError : std::runtime_error {
    double last_residual;
    int iterations;
    InstantonError(const std::string& what, double r, int it)
        : std::runtime_error(what), last_residual(r), iterations(it) {}
};

Profile1D solve_instanton(const ModelParams& P, const Kernel& K, double tol = 1e-12, int max_iter = 2000);

// Residual of the fixed point equation for an arbitrary axial profile.
double instanton_residual(const Axial& m, const ModelParams& P, const Kernel& K);

// Eight-point Lagrange evaluation of a lattice function at fractional index s,
// with constant extension lo / hi outside the grid. Returns value and first
// two derivatives with respect to s.
struct Interp3 {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
};
Interp3 lagrange8(const Axial& f, double lo, double hi, double s);

class FrontFamily {
public:
    explicit FrontFamily(Profile1D base);

    const Profile1D& base() const { return base_; }
    double h() const { return base_.grid.h1; }
    double mbeta() const { return base_.mbeta; }

    // m_bar_0(x - a) at the axial nodes, with interpolant derivatives in x.
    Axial values(double a) const;
    void eval(double a, Axial& val, Axial& d1, Axial& d2) const;
    // Cached centered-difference derivative, shifted.
    Axial derivative(double a) const;
    Axial second_derivative(double a) const;
    // m_bar_0' at an arbitrary point x (zero beyond the grid).
    double derivative_at(double x) const;

private:
    Profile1D base_;
};

struct ShiftError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

Field shifted_front(const FrontFamily& fam, double a, const CylinderGrid& g);

struct DecayFit {
    double C = 0.0, alpha = 0.0, r2 = 0.0;       // from log(m_beta^2 - m^2)
    double alpha_d1 = 0.0, r2_d1 = 0.0;          // from log m'
    double alpha_d2 = 0.0, r2_d2 = 0.0;          // from log |m''|
    int window = 0;
    bool increasing = false;
    bool pass = false;
};

struct DecayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DecayFit verify_decay(const Profile1D& p);

}  // namespace kf
