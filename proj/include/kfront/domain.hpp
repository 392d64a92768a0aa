#pragma once
// Grids, fields, quadrature, finite differences and nonlocal convolution on
// the truncated cylinder [-X, X] x (L-torus)^(D-1).

#include <algorithm>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace kf {

struct CylinderGrid {
    int D = 1;
    double X = 0.0;
    int n1 = 0;
    double L = 1.0;
    int nperp = 1;
    double h1 = 0.0;
    double hp = 1.0;
    int pad = 0;  // far-field pad width in axial points, set when a kernel is bound

    int d() const { return D - 1; }
    std::size_t nt() const;  // transverse nodes per axial row, nperp^(D-1)
    std::size_t size() const { return static_cast<std::size_t>(n1) * nt(); }
    double x1(int i) const { return -X + i * h1; }
    double cell() const;        // h1 * hp^d
    double cross_area() const;  // L^d
    double hmin() const { return D == 1 ? h1 : std::min(h1, hp); }
    bool same_shape(const CylinderGrid& o) const;
};

CylinderGrid make_grid(int D, double X, int n1, double L = 1.0, int nperp = 1);

// Row-major: index = i * nt + jt, axial index slowest.
struct Field {
    CylinderGrid grid;
    std::vector<double> v;
    double lo = 0.0;  // far-field value for x1 < -X
    double hi = 0.0;  // far-field value for x1 > X

    Field() = default;
    Field(const CylinderGrid& g, double value = 0.0, double lo_ = 0.0, double hi_ = 0.0)
        : grid(g), v(g.size(), value), lo(lo_), hi(hi_) {}

    double& at(int i, std::size_t jt) { return v[static_cast<std::size_t>(i) * grid.nt() + jt]; }
    double at(int i, std::size_t jt) const { return v[static_cast<std::size_t>(i) * grid.nt() + jt]; }
    std::size_t size() const { return v.size(); }
};

// Axial-only field: one value per axial node.
using Axial = std::vector<double>;

Field extend_axial(const CylinderGrid& g, const Axial& a, double lo, double hi);
Axial transverse_mean(const Field& f);

// Transverse coordinate of component k (0-based) for transverse index jt.
double transverse_coord(const CylinderGrid& g, std::size_t jt, int k);

enum class Quadrature { trapezoid, cell };

// Trapezoid weights in x1 (half weight on the two end rows) or uniform control
// volumes, times hp^d transversally.
double integrate(const Field& f, Quadrature q = Quadrature::trapezoid);
double integrate_axial(const Axial& a, double h1, Quadrature q = Quadrature::trapezoid);
double inner(const Field& a, const Field& b, Quadrature q = Quadrature::trapezoid);
double norm2(const Field& f, Quadrature q = Quadrature::trapezoid);

enum class Calculus { grad_axial, grad_transverse, divergence, laplacian };

// Centered second order differences. The axial boundary rows use the far-field
// constants as ghost values; transverse directions wrap.
Field grad_axial(const Field& f);
std::vector<Field> grad_transverse(const Field& f);  // one Field per transverse direction
std::vector<Field> gradient(const Field& f);          // axial first, then transverse
Field divergence(const std::vector<Field>& comps);
Field laplacian(const Field& f);
std::vector<Field> calculus(Calculus kind, const std::vector<Field>& in);

// Spectral derivative in x1 of a field that decays to zero at both ends.
Field spectral_axial_derivative(const Field& f);

double grad_norm2(const Field& f);  // sum over directions of ||d_k f||^2

// Convolution weights: w[(o + P) * nt + jt] already include the cell volume, so
// (K * f)(i, j) = sum_{o, t} w(o, t) f(i - o, j - t).
struct Stencil {
    int P = 0;
    std::size_t nt = 1;
    std::vector<double> w;
    std::vector<double> rowsum;  // sum over t of w(o, t), indexed by o + P

    double operator()(int o, std::size_t t) const { return w[static_cast<std::size_t>(o + P) * nt + t]; }
    void finalize();
};

enum class ConvMethod { automatic, direct, fft };

// Holds transform plans for one (grid, stencil) pair. Output rows -ext .. n1-1+ext.
class Convolver {
public:
    Convolver(const CylinderGrid& g, Stencil s, int ext = 0);
    ~Convolver();
    Convolver(const Convolver&) = delete;
    Convolver& operator=(const Convolver&) = delete;

    // Extended output has (n1 + 2 ext) rows.
    std::vector<double> apply_ext(const Field& f, ConvMethod m = ConvMethod::automatic) const;
    Field apply(const Field& f, ConvMethod m = ConvMethod::automatic) const;
    const Stencil& stencil() const { return st_; }
    const CylinderGrid& grid() const { return g_; }
    bool prefers_fft() const { return prefer_fft_; }

private:
    std::vector<double> direct(const Field& f) const;
    std::vector<double> viafft(const Field& f) const;
    void build_plans() const;

    CylinderGrid g_;
    Stencil st_;
    int ext_;
    bool prefer_fft_;
    int M_ = 0;  // padded axial transform length
    struct Plans;
    mutable std::unique_ptr<Plans> plans_;
    mutable std::mutex mu_;
};

struct GridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace kf
