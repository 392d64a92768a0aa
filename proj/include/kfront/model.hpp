#pragma once
// Thermodynamics of the flow: kernel J and its projection, double well,
// m_beta, mobility, free energies, first variation and dissipation.

#include <memory>

#include "kfront/domain.hpp"

namespace kf {

struct KernelSpec {
    double p = 4.0;  // bump exponent
    double R = 1.0;  // support radius
};

// J(x) = c (1 - |x|^2/R^2)^p on |x| < R, renormalized on the bound grid.
class Kernel {
public:
    Kernel(const CylinderGrid& g, KernelSpec spec = {});

    const CylinderGrid& grid() const { return g_; }  // pad width set
    const KernelSpec& spec() const { return spec_; }
    double c() const { return c_; }
    int pad() const { return g_.pad; }

    // Weights of J, of y1 J(y), and of the projected kernel on the axial line.
    const Stencil& J() const { return convJ_->stencil(); }
    const Stencil& Jbar() const { return convJbar_->stencil(); }
    const Stencil& Cmom() const { return convC_->stencil(); }

    Field convolve(const Field& f, ConvMethod m = ConvMethod::automatic) const { return convJ_->apply(f, m); }
    Axial convolve_bar(const Axial& a, double lo, double hi, ConvMethod m = ConvMethod::automatic) const;
    Field convolve_moment(const Field& f) const { return convC_->apply(f); }

    // Projected kernel value J_bar(x1) = sum over transverse nodes of J h_perp^d
    // at the lattice offset o.
    double jbar_value(int o) const;

    double abs_x1_moment() const { return m1abs_; }  // sum |y1| J
    double x1sq_moment() const { return m2_; }       // sum y1^2 J
    double abs_moment() const { return mabs_; }      // sum |y| J
    double abs_moment_bar() const;                   // sum |y1| J_bar

    // Raw (unnormalized) profile (1 - r^2/R^2)^p.
    double shape(double r2) const;

    // Fraction of kernel mass reaching the left / right far field from row i.
    double left_reach(int i) const { return omega_lo_[i]; }
    double right_reach(int i) const { return omega_hi_[i]; }

    const Convolver& convolver() const { return *convJ_; }

private:
    CylinderGrid g_;
    CylinderGrid g1_;
    KernelSpec spec_;
    double c_ = 0.0;
    double m1abs_ = 0.0, m2_ = 0.0, mabs_ = 0.0;
    std::unique_ptr<Convolver> convJ_, convC_, convJbar_;
    std::vector<double> omega_lo_, omega_hi_;
};

struct ModelParams {
    double beta = 2.0;
    double mbeta = 0.0;
    double sigma_beta = 0.0;  // beta (1 - mbeta^2)
    double alpha_tilde = 0.0;
};

struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

double equilibrium_magnetization(double beta);
ModelParams make_params(double beta);

double double_well(double m, double beta);
double mobility(double m, double beta);

// Face mobility of the flux form: beta (m_b - m_a) / (atanh m_b - atanh m_a),
// which tends to beta (1 - m^2) as m_b -> m_a.
double face_mobility(double a, double b, double beta);

Axial projected_kernel(const Kernel& K);

double free_energy(const Field& m, const ModelParams& P, const Kernel& K);
double free_energy_1d(const Axial& m, const ModelParams& P, const Kernel& K);

// O(N^2) double-sum form of the interaction energy, kept for testing.
double free_energy_double_sum(const Field& m, const ModelParams& P, const Kernel& K);

constexpr double kClip = 1e-9;

struct Variation {
    Field mu;
    bool clipped = false;
};

Variation first_variation(const Field& m, const ModelParams& P, const Kernel& K);

struct Dissipation {
    double axial = 0.0;
    double transverse = 0.0;
    double total = 0.0;
    bool clipped = false;
};

Dissipation dissipation(const Field& m, const ModelParams& P, const Kernel& K);

}  // namespace kf
