#include "kfront/domain.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "kfront/numeric.hpp"

namespace kf {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

int good_fft_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

int worker_threads() {
    const char* s = std::getenv("KFRNT_THREADS");
    if (!s) return 1;
    int n = std::atoi(s);
    return n > 0 ? n : 1;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
    auto p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t digest_doubles(const std::vector<double>& v, std::uint64_t h) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- grid

std::size_t CylinderGrid::nt() const {
    std::size_t n = 1;
    for (int k = 1; k < D; ++k) n *= static_cast<std::size_t>(nperp);
    return n;
}

double CylinderGrid::cell() const { return h1 * std::pow(hp, D - 1); }
double CylinderGrid::cross_area() const { return std::pow(L, D - 1); }

bool CylinderGrid::same_shape(const CylinderGrid& o) const {
    return D == o.D && n1 == o.n1 && nperp == o.nperp && X == o.X && L == o.L;
}

CylinderGrid make_grid(int D, double X, int n1, double L, int nperp) {
    if (D < 1 || D > 3) throw GridError("dimension must be 1, 2 or 3");
    if (!(X > 0)) throw GridError("half-length X must be positive");
    if (n1 < 16) throw GridError("need at least 16 axial points");
    CylinderGrid g;
    g.D = D;
    g.X = X;
    g.n1 = n1;
    g.h1 = 2.0 * X / (n1 - 1);
    if (D == 1) {
        g.L = 1.0;
        g.nperp = 1;
        g.hp = 1.0;
    } else {
        if (!(L > 0)) throw GridError("transverse side L must be positive");
        if (nperp < 4) throw GridError("need at least 4 transverse points");
        g.L = L;
        g.nperp = nperp;
        g.hp = L / nperp;
    }
    return g;
}

Field extend_axial(const CylinderGrid& g, const Axial& a, double lo, double hi) {
    if (static_cast<int>(a.size()) != g.n1) throw GridError("axial profile length mismatch");
    Field f(g, 0.0, lo, hi);
    const std::size_t nt = g.nt();
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) f.at(i, j) = a[i];
    return f;
}

Axial transverse_mean(const Field& f) {
    const std::size_t nt = f.grid.nt();
    Axial a(f.grid.n1);
    for (int i = 0; i < f.grid.n1; ++i) {
        CompensatedSum s;
        for (std::size_t j = 0; j < nt; ++j) s.add(f.at(i, j));
        a[i] = s.value() / static_cast<double>(nt);
    }
    return a;
}

double transverse_coord(const CylinderGrid& g, std::size_t jt, int k) {
    if (g.D == 2) return static_cast<double>(jt) * g.hp;
    if (g.D == 3) {
        std::size_t j2 = jt / g.nperp, j3 = jt % g.nperp;
        return static_cast<double>(k == 0 ? j2 : j3) * g.hp;
    }
    return 0.0;
}

// ---------------------------------------------------------------- quadrature

static double row_weight(int i, int n1, Quadrature q) {
    if (q == Quadrature::trapezoid && (i == 0 || i == n1 - 1)) return 0.5;
    return 1.0;
}

double integrate(const Field& f, Quadrature q) {
    const auto& g = f.grid;
    const std::size_t nt = g.nt();
    CompensatedSum s;
    for (int i = 0; i < g.n1; ++i) {
        CompensatedSum r;
        for (std::size_t j = 0; j < nt; ++j) r.add(f.at(i, j));
        s.add(row_weight(i, g.n1, q) * r.value());
    }
    return s.value() * g.cell();
}

double integrate_axial(const Axial& a, double h1, Quadrature q) {
    CompensatedSum s;
    const int n = static_cast<int>(a.size());
    for (int i = 0; i < n; ++i) s.add(row_weight(i, n, q) * a[i]);
    return s.value() * h1;
}

double inner(const Field& a, const Field& b, Quadrature q) {
    const auto& g = a.grid;
    if (a.size() != b.size()) throw GridError("inner product of fields on different grids");
    const std::size_t nt = g.nt();
    CompensatedSum s;
    for (int i = 0; i < g.n1; ++i) {
        CompensatedSum r;
        for (std::size_t j = 0; j < nt; ++j) r.add(a.at(i, j) * b.at(i, j));
        s.add(row_weight(i, g.n1, q) * r.value());
    }
    return s.value() * g.cell();
}

double norm2(const Field& f, Quadrature q) { return std::sqrt(std::max(0.0, inner(f, f, q))); }

// ---------------------------------------------------------------- calculus

namespace {

// Neighbour index in transverse direction k (0 or 1), shifted by s with wrap.
std::size_t tshift(const CylinderGrid& g, std::size_t jt, int k, int s) {
    const int n = g.nperp;
    if (g.D == 2) return static_cast<std::size_t>(((static_cast<int>(jt) + s) % n + n) % n);
    int j2 = static_cast<int>(jt / n), j3 = static_cast<int>(jt % n);
    if (k == 0)
        j2 = ((j2 + s) % n + n) % n;
    else
        j3 = ((j3 + s) % n + n) % n;
    return static_cast<std::size_t>(j2 * n + j3);
}

double axial_value(const Field& f, int i, std::size_t j) {
    if (i < 0) return f.lo;
    if (i >= f.grid.n1) return f.hi;
    return f.at(i, j);
}

}  // namespace

Field grad_axial(const Field& f) {
    const auto& g = f.grid;
    Field out(g, 0.0, 0.0, 0.0);
    const std::size_t nt = g.nt();
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j)
            out.at(i, j) = (axial_value(f, i + 1, j) - axial_value(f, i - 1, j)) / (2.0 * g.h1);
    return out;
}

std::vector<Field> grad_transverse(const Field& f) {
    const auto& g = f.grid;
    std::vector<Field> out;
    const std::size_t nt = g.nt();
    for (int k = 0; k < g.d(); ++k) {
        Field c(g, 0.0, 0.0, 0.0);
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j)
                c.at(i, j) = (f.at(i, tshift(g, j, k, 1)) - f.at(i, tshift(g, j, k, -1))) / (2.0 * g.hp);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<Field> gradient(const Field& f) {
    std::vector<Field> out;
    out.push_back(grad_axial(f));
    for (auto& c : grad_transverse(f)) out.push_back(std::move(c));
    return out;
}

Field divergence(const std::vector<Field>& comps) {
    if (comps.empty()) throw GridError("divergence needs at least one component");
    const auto& g = comps[0].grid;
    if (static_cast<int>(comps.size()) != g.D) throw GridError("divergence: component count must equal D");
    Field out = grad_axial(comps[0]);
    const std::size_t nt = g.nt();
    for (int k = 0; k < g.d(); ++k) {
        const Field& c = comps[k + 1];
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j)
                out.at(i, j) += (c.at(i, tshift(g, j, k, 1)) - c.at(i, tshift(g, j, k, -1))) / (2.0 * g.hp);
    }
    return out;
}

Field laplacian(const Field& f) {
    const auto& g = f.grid;
    Field out(g, 0.0, 0.0, 0.0);
    const std::size_t nt = g.nt();
    const double a = 1.0 / (g.h1 * g.h1), b = 1.0 / (g.hp * g.hp);
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            double c = f.at(i, j);
            double s = a * (axial_value(f, i + 1, j) - 2.0 * c + axial_value(f, i - 1, j));
            for (int k = 0; k < g.d(); ++k)
                s += b * (f.at(i, tshift(g, j, k, 1)) - 2.0 * c + f.at(i, tshift(g, j, k, -1)));
            out.at(i, j) = s;
        }
    return out;
}

std::vector<Field> calculus(Calculus kind, const std::vector<Field>& in) {
    if (in.empty()) throw GridError("calculus: no input");
    switch (kind) {
        case Calculus::grad_axial: return {grad_axial(in[0])};
        case Calculus::grad_transverse: return grad_transverse(in[0]);
        case Calculus::divergence: return {divergence(in)};
        case Calculus::laplacian: return {laplacian(in[0])};
    }
    return {};
}

double grad_norm2(const Field& f) {
    double s = 0.0;
    for (const auto& c : gradient(f)) s += inner(c, c);
    return s;
}

Field spectral_axial_derivative(const Field& f) {
    const auto& g = f.grid;
    const int n = g.n1;
    const std::size_t nt = g.nt();
    const int nc = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* sp = fftw_alloc_complex(nc);
    fftw_plan fw, bw;
    {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex());
        fw = fftw_plan_dft_r2c_1d(n, in, sp, FFTW_ESTIMATE);
        bw = fftw_plan_dft_c2r_1d(n, sp, in, FFTW_ESTIMATE);
    }
    Field out(g, 0.0, 0.0, 0.0);
    const double len = n * g.h1;
    for (std::size_t j = 0; j < nt; ++j) {
        for (int i = 0; i < n; ++i) in[i] = f.at(i, j);
        fftw_execute(fw);
        for (int k = 0; k < nc; ++k) {
            double kk = 2.0 * M_PI * k / len;
            if (n % 2 == 0 && k == n / 2) kk = 0.0;
            double re = sp[k][0], im = sp[k][1];
            sp[k][0] = -kk * im;
            sp[k][1] = kk * re;
        }
        fftw_execute(bw);
        for (int i = 0; i < n; ++i) out.at(i, j) = in[i] / n;
    }
    {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex());
        fftw_destroy_plan(fw);
        fftw_destroy_plan(bw);
    }
    fftw_free(in);
    fftw_free(sp);
    return out;
}

// ---------------------------------------------------------------- convolution

void Stencil::finalize() {
    rowsum.assign(2 * P + 1, 0.0);
    for (int o = -P; o <= P; ++o) {
        CompensatedSum s;
        for (std::size_t t = 0; t < nt; ++t) s.add((*this)(o, t));
        rowsum[o + P] = s.value();
    }
}

struct Convolver::Plans {
    int M = 0;
    std::size_t nt = 1;
    std::size_t ncomplex = 0;
    double* buf = nullptr;
    fftw_complex* spec = nullptr;
    fftw_complex* kspec = nullptr;
    fftw_plan fw = nullptr, bw = nullptr;
    ~Plans() {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex());
        if (fw) fftw_destroy_plan(fw);
        if (bw) fftw_destroy_plan(bw);
        fftw_free(buf);
        fftw_free(spec);
        fftw_free(kspec);
    }
};

Convolver::Convolver(const CylinderGrid& g, Stencil s, int ext) : g_(g), st_(std::move(s)), ext_(ext) {
    if (st_.nt != g.nt()) throw GridError("stencil transverse size does not match grid");
    if (st_.rowsum.empty()) st_.finalize();
    const int Ne = g.n1 + 2 * (st_.P + ext_);
    M_ = good_fft_size(Ne);
    const double rows = g.n1 + 2.0 * ext_;
    const double nt = static_cast<double>(g.nt());
    const double cost_direct = rows * (2.0 * st_.P + 1) * nt * nt;
    const double cost_fft = 6.0 * M_ * nt * (std::log2(M_ * nt) + 1.0);
    prefer_fft_ = cost_direct > 4.0 * cost_fft;
}

Convolver::~Convolver() = default;

void Convolver::build_plans() const {
    if (plans_) return;
    auto p = std::make_unique<Plans>();
    const int n = g_.nperp;
    p->M = M_;
    p->nt = g_.nt();
    const std::size_t last = (g_.D == 1) ? static_cast<std::size_t>(M_ / 2 + 1) : static_cast<std::size_t>(n / 2 + 1);
    std::size_t nc = last;
    if (g_.D == 2) nc = static_cast<std::size_t>(M_) * last;
    if (g_.D == 3) nc = static_cast<std::size_t>(M_) * n * last;
    p->ncomplex = nc;
    const std::size_t nreal = static_cast<std::size_t>(M_) * p->nt;
    p->buf = fftw_alloc_real(nreal);
    p->spec = fftw_alloc_complex(nc);
    p->kspec = fftw_alloc_complex(nc);
    int dims[3] = {M_, n, n};
    {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex());
        p->fw = fftw_plan_dft_r2c(g_.D, dims, p->buf, p->spec, FFTW_ESTIMATE);
        p->bw = fftw_plan_dft_c2r(g_.D, dims, p->spec, p->buf, FFTW_ESTIMATE);
    }
    // Kernel placed circularly.
    std::fill(p->buf, p->buf + nreal, 0.0);
    for (int o = -st_.P; o <= st_.P; ++o) {
        int q = ((o % M_) + M_) % M_;
        for (std::size_t t = 0; t < p->nt; ++t) p->buf[static_cast<std::size_t>(q) * p->nt + t] = st_(o, t);
    }
    fftw_execute_dft_r2c(p->fw, p->buf, p->kspec);
    plans_ = std::move(p);
}

std::vector<double> Convolver::direct(const Field& f) const {
    const int n1 = g_.n1, P = st_.P, rows = n1 + 2 * ext_;
    const std::size_t nt = g_.nt();
    const int n = g_.nperp;
    std::vector<double> out(static_cast<std::size_t>(rows) * nt, 0.0);
    for (int r = -ext_; r < n1 + ext_; ++r) {
        double* orow = &out[static_cast<std::size_t>(r + ext_) * nt];
        for (int o = -P; o <= P; ++o) {
            const int s = r - o;
            if (s < 0 || s >= n1) {
                const double c = (s < 0 ? f.lo : f.hi) * st_.rowsum[o + P];
                for (std::size_t j = 0; j < nt; ++j) orow[j] += c;
                continue;
            }
            const double* frow = &f.v[static_cast<std::size_t>(s) * nt];
            const double* w = &st_.w[static_cast<std::size_t>(o + P) * nt];
            if (g_.D == 1) {
                orow[0] += w[0] * frow[0];
            } else if (g_.D == 2) {
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int t = 0; t < n; ++t) acc += w[t] * frow[(j - t + n) % n];
                    orow[j] += acc;
                }
            } else {
                for (int j2 = 0; j2 < n; ++j2)
                    for (int j3 = 0; j3 < n; ++j3) {
                        double acc = 0.0;
                        for (int t2 = 0; t2 < n; ++t2) {
                            const int s2 = (j2 - t2 + n) % n;
                            for (int t3 = 0; t3 < n; ++t3)
                                acc += w[t2 * n + t3] * frow[s2 * n + (j3 - t3 + n) % n];
                        }
                        orow[j2 * n + j3] += acc;
                    }
            }
        }
    }
    return out;
}

std::vector<double> Convolver::viafft(const Field& f) const {
    std::lock_guard<std::mutex> lk(mu_);
    build_plans();
    auto& p = *plans_;
    const int n1 = g_.n1, P = st_.P, off = P + ext_;
    const int Ne = n1 + 2 * off;
    const std::size_t nt = p.nt;
    double* b = p.buf;
    std::fill(b, b + static_cast<std::size_t>(p.M) * nt, 0.0);
    for (int q = 0; q < Ne; ++q) {
        const int s = q - off;
        double* row = b + static_cast<std::size_t>(q) * nt;
        if (s < 0)
            std::fill(row, row + nt, f.lo);
        else if (s >= n1)
            std::fill(row, row + nt, f.hi);
        else
            std::copy(&f.v[static_cast<std::size_t>(s) * nt], &f.v[static_cast<std::size_t>(s) * nt] + nt, row);
    }
    fftw_execute_dft_r2c(p.fw, b, p.spec);
    for (std::size_t k = 0; k < p.ncomplex; ++k) {
        const double ar = p.spec[k][0], ai = p.spec[k][1];
        const double kr = p.kspec[k][0], ki = p.kspec[k][1];
        p.spec[k][0] = ar * kr - ai * ki;
        p.spec[k][1] = ar * ki + ai * kr;
    }
    fftw_execute_dft_c2r(p.bw, p.spec, b);
    const double scale = 1.0 / (static_cast<double>(p.M) * static_cast<double>(nt));
    const int rows = n1 + 2 * ext_;
    std::vector<double> out(static_cast<std::size_t>(rows) * nt);
    for (int r = 0; r < rows; ++r) {
        const double* src = b + static_cast<std::size_t>(r + P) * nt;
        for (std::size_t j = 0; j < nt; ++j) out[static_cast<std::size_t>(r) * nt + j] = src[j] * scale;
    }
    return out;
}

std::vector<double> Convolver::apply_ext(const Field& f, ConvMethod m) const {
    if (!f.grid.same_shape(g_)) throw GridError("convolve: field grid does not match kernel grid");
    bool use_fft = (m == ConvMethod::fft) || (m == ConvMethod::automatic && prefer_fft_);
    return use_fft ? viafft(f) : direct(f);
}

Field Convolver::apply(const Field& f, ConvMethod m) const {
    auto ext = apply_ext(f, m);
    Field out(f.grid, 0.0, f.lo, f.hi);
    const std::size_t nt = g_.nt();
    std::copy(ext.begin() + static_cast<std::ptrdiff_t>(ext_ * nt),
              ext.begin() + static_cast<std::ptrdiff_t>((ext_ + g_.n1) * nt), out.v.begin());
    return out;
}

}  // namespace kf
