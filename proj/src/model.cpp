#include "kfront/model.hpp"

#include <cmath>

#include "kfront/numeric.hpp"

namespace kf {

// ---------------------------------------------------------------- kernel

double Kernel::shape(double r2) const {
    const double s = 1.0 - r2 / (spec_.R * spec_.R);
    return s > 0.0 ? std::pow(s, spec_.p) : 0.0;
}

Kernel::Kernel(const CylinderGrid& g, KernelSpec spec) : g_(g), spec_(spec) {
    if (!(spec.R > 0) || !(spec.p > 0)) throw ModelError("kernel needs R > 0 and p > 0");
    const int P = static_cast<int>(std::ceil(spec.R / g.h1 - 1e-12));
    g_.pad = P;
    g1_ = make_grid(1, g.X, g.n1);
    g1_.pad = P;

    const std::size_t nt = g.nt();
    const int n = g.nperp;
    const int Q = g.D == 1 ? 0 : static_cast<int>(std::ceil(spec.R / g.hp - 1e-12));
    const int Q3 = g.D == 3 ? Q : 0;
    const int Q2 = g.D >= 2 ? Q : 0;
    std::vector<long double> raw(static_cast<std::size_t>(2 * P + 1) * nt, 0.0L);
    long double total = 0, m1 = 0, m2 = 0, mabs = 0;
    for (int o = -P; o <= P; ++o) {
        const double y1 = o * g.h1;
        for (int t2 = -Q2; t2 <= Q2; ++t2)
            for (int t3 = -Q3; t3 <= Q3; ++t3) {
                const double y2 = t2 * g.hp, y3 = t3 * g.hp;
                const double r2 = y1 * y1 + y2 * y2 + y3 * y3;
                const double val = shape(r2);
                if (val == 0.0) continue;
                std::size_t jt = 0;
                if (g.D == 2) jt = static_cast<std::size_t>(((t2 % n) + n) % n);
                if (g.D == 3) jt = static_cast<std::size_t>((((t2 % n) + n) % n) * n + ((t3 % n) + n) % n);
                raw[static_cast<std::size_t>(o + P) * nt + jt] += val;
                total += val;
                m1 += val * std::fabs(y1);
                m2 += val * y1 * y1;
                mabs += val * std::sqrt(r2);
            }
    }
    const double cell = g.cell();
    c_ = static_cast<double>(1.0L / (total * cell));
    m1abs_ = static_cast<double>(m1 / total);
    m2_ = static_cast<double>(m2 / total);
    mabs_ = static_cast<double>(mabs / total);

    auto neg = [&](std::size_t jt) -> std::size_t {
        if (g.D == 1) return 0;
        if (g.D == 2) return (n - static_cast<int>(jt)) % n;
        int j2 = static_cast<int>(jt) / n, j3 = static_cast<int>(jt) % n;
        return static_cast<std::size_t>(((n - j2) % n) * n + (n - j3) % n);
    };
    Stencil SJ, SC, SB;
    SJ.P = SC.P = SB.P = P;
    SJ.nt = SC.nt = nt;
    SB.nt = 1;
    SJ.w.assign(raw.size(), 0.0);
    SC.w.assign(raw.size(), 0.0);
    SB.w.assign(2 * P + 1, 0.0);
    const long double norm = 1.0L / total;
    for (int o = -P; o <= P; ++o)
        for (std::size_t jt = 0; jt < nt; ++jt) {
            // Symmetrize exactly: w(o, t) = w(-o, -t).
            const long double a = raw[static_cast<std::size_t>(o + P) * nt + jt];
            const long double b = raw[static_cast<std::size_t>(-o + P) * nt + neg(jt)];
            const double w = static_cast<double>(0.5L * (a + b) * norm);
            SJ.w[static_cast<std::size_t>(o + P) * nt + jt] = w;
            SC.w[static_cast<std::size_t>(o + P) * nt + jt] = w * (o * g.h1);
        }
    SJ.finalize();
    SC.finalize();
    for (int o = -P; o <= P; ++o) SB.w[o + P] = SJ.rowsum[o + P];
    // Even projected stencil.
    for (int o = 1; o <= P; ++o) {
        const double s = 0.5 * (SB.w[o + P] + SB.w[-o + P]);
        SB.w[o + P] = SB.w[-o + P] = s;
    }
    SB.finalize();

    omega_lo_.assign(g.n1, 0.0);
    omega_hi_.assign(g.n1, 0.0);
    for (int i = 0; i < g.n1; ++i) {
        CompensatedSum lo, hi;
        for (int o = i + 1; o <= P; ++o) lo.add(SB.w[o + P]);
        for (int o = -P; o <= i - g.n1; ++o) hi.add(SB.w[o + P]);
        omega_lo_[i] = lo.value();
        omega_hi_[i] = hi.value();
    }

    convJ_ = std::make_unique<Convolver>(g_, std::move(SJ));
    convC_ = std::make_unique<Convolver>(g_, std::move(SC));
    convJbar_ = std::make_unique<Convolver>(g1_, std::move(SB));
}

Axial Kernel::convolve_bar(const Axial& a, double lo, double hi, ConvMethod m) const {
    Field f(g1_, 0.0, lo, hi);
    f.v = a;
    return convJbar_->apply(f, m).v;
}

double Kernel::jbar_value(int o) const {
    const auto& s = convJbar_->stencil();
    if (o < -s.P || o > s.P) return 0.0;
    return s.w[o + s.P] / g_.h1;
}

double Kernel::abs_moment_bar() const {
    const auto& s = convJbar_->stencil();
    CompensatedSum m;
    for (int o = -s.P; o <= s.P; ++o) m.add(std::fabs(o * g_.h1) * s.w[o + s.P]);
    return m.value();
}

// ---------------------------------------------------------------- scalars

double equilibrium_magnetization(double beta) {
    if (!(beta > 1.0)) throw ModelError("no positive root of m = tanh(beta m) for beta <= 1");
    auto g = [beta](double m) { return m - std::tanh(beta * m); };
    double lo = 1e-12, hi = 1.0;
    while (g(lo) >= 0.0 && lo < 1e-3) lo *= 10.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    double m = 0.5 * (lo + hi);
    for (int it = 0; it < 5; ++it) {
        const double t = std::tanh(beta * m);
        const double d = 1.0 - beta * (1.0 - t * t);
        if (d == 0.0) break;
        const double step = (m - t) / d;
        if (!std::isfinite(step)) break;
        const double next = m - step;
        if (next <= lo || next >= hi) break;
        m = next;
    }
    return m;
}

ModelParams make_params(double beta) {
    ModelParams P;
    P.beta = beta;
    P.mbeta = equilibrium_magnetization(beta);
    P.sigma_beta = beta * (1.0 - P.mbeta * P.mbeta);
    P.alpha_tilde = 1.0 / P.sigma_beta - 1.0;
    return P;
}

static double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double double_well(double m, double beta) {
    if (std::fabs(m) > 1.0) throw ModelError("magnetization outside [-1, 1]");
    return -0.5 * m * m + (xlogx(0.5 * (1.0 + m)) + xlogx(0.5 * (1.0 - m))) / beta;
}

double mobility(double m, double beta) { return beta * (1.0 - m * m); }

double face_mobility(double a, double b, double beta) {
    const double den = 1.0 - a * b;
    if (!(den > 0.0)) return 0.0;
    const double z = (b - a) / den;
    if (std::fabs(z) >= 1.0) return 0.0;
    double phi;
    if (std::fabs(z) < 1e-4) {
        const double z2 = z * z;
        phi = 1.0 - z2 / 3.0 - 4.0 * z2 * z2 / 45.0;
    } else {
        phi = z / std::atanh(z);
    }
    return beta * den * phi;
}

Axial projected_kernel(const Kernel& K) {
    const int P = K.pad();
    Axial a(2 * P + 1);
    for (int o = -P; o <= P; ++o) a[o + P] = K.jbar_value(o);
    return a;
}

// ---------------------------------------------------------------- energies

namespace {

void check_range(const std::vector<double>& v) {
    for (double x : v)
        if (!(std::fabs(x) <= 1.0)) throw ModelError("magnetization outside [-1, 1]");
}

// Shared by the D-dimensional and the axial energies: uniform node weights,
// interaction split into grid-grid pairs and grid-far-field pairs.
double energy_core(const std::vector<double>& m, const std::vector<double>& Jm, const std::vector<double>& Jm2,
                   std::size_t nt, int n1, double lo, double hi, const ModelParams& P, const Kernel& K,
                   double cell) {
    const double fb = double_well(P.mbeta, P.beta);
    CompensatedSum loc, inter;
    for (int i = 0; i < n1; ++i) {
        const double wl = K.left_reach(i), wh = K.right_reach(i);
        for (std::size_t j = 0; j < nt; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * nt + j;
            const double x = m[k];
            loc.add(double_well(x, P.beta) - fb);
            inter.add(x * x - 2.0 * x * Jm[k] + Jm2[k]);
            if (wl != 0.0) inter.add((x - lo) * (x - lo) * wl);
            if (wh != 0.0) inter.add((x - hi) * (x - hi) * wh);
        }
    }
    return cell * (loc.value() + 0.25 * inter.value());
}

}  // namespace

double free_energy(const Field& m, const ModelParams& P, const Kernel& K) {
    check_range(m.v);
    Field sq(m.grid, 0.0, m.lo * m.lo, m.hi * m.hi);
    for (std::size_t k = 0; k < m.size(); ++k) sq.v[k] = m.v[k] * m.v[k];
    const Field Jm = K.convolve(m);
    const Field Jm2 = K.convolve(sq);
    return energy_core(m.v, Jm.v, Jm2.v, m.grid.nt(), m.grid.n1, m.lo, m.hi, P, K, m.grid.cell());
}

double free_energy_1d(const Axial& m, const ModelParams& P, const Kernel& K) {
    check_range(m);
    const double lo = -P.mbeta, hi = P.mbeta;
    Axial sq(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) sq[k] = m[k] * m[k];
    const Axial Jm = K.convolve_bar(m, lo, hi);
    const Axial Jm2 = K.convolve_bar(sq, lo * lo, hi * hi);
    return energy_core(m, Jm, Jm2, 1, static_cast<int>(m.size()), lo, hi, P, K, K.grid().h1);
}

double free_energy_double_sum(const Field& m, const ModelParams& P, const Kernel& K) {
    check_range(m.v);
    const auto& g = m.grid;
    const std::size_t nt = g.nt();
    const int n = g.nperp;
    const int Pw = K.pad();
    const Stencil& S = K.J();
    const double fb = double_well(P.mbeta, P.beta);
    auto val = [&](int i, std::size_t j) { return i < 0 ? m.lo : (i >= g.n1 ? m.hi : m.at(i, j)); };
    auto tsub = [&](std::size_t j, std::size_t t) -> std::size_t {
        if (g.D == 1) return 0;
        if (g.D == 2) return static_cast<std::size_t>((static_cast<int>(j) - static_cast<int>(t) + n) % n);
        int j2 = static_cast<int>(j) / n, j3 = static_cast<int>(j) % n;
        int t2 = static_cast<int>(t) / n, t3 = static_cast<int>(t) % n;
        return static_cast<std::size_t>(((j2 - t2 + n) % n) * n + (j3 - t3 + n) % n);
    };
    CompensatedSum loc, inter;
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) loc.add(double_well(m.at(i, j), P.beta) - fb);
    for (int i = -Pw; i < g.n1 + Pw; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            const double x = val(i, j);
            for (int o = -Pw; o <= Pw; ++o)
                for (std::size_t t = 0; t < nt; ++t) {
                    const double w = S(o, t);
                    if (w == 0.0) continue;
                    const double y = val(i - o, tsub(j, t));
                    inter.add(w * (x - y) * (x - y));
                }
        }
    return g.cell() * (loc.value() + 0.25 * inter.value());
}

Variation first_variation(const Field& m, const ModelParams& P, const Kernel& K) {
    Variation r;
    r.mu = K.convolve(m);
    const double cap = 1.0 - kClip;
    for (std::size_t k = 0; k < m.size(); ++k) {
        double x = m.v[k];
        if (std::fabs(x) > cap) {
            r.clipped = true;
            x = std::copysign(cap, x);
        }
        r.mu.v[k] = std::atanh(x) / P.beta - r.mu.v[k];
    }
    r.mu.lo = r.mu.hi = 0.0;
    return r;
}

Dissipation dissipation(const Field& m0, const ModelParams& P, const Kernel& K) {
    Dissipation d;
    Field m = m0;
    const double cap = 1.0 - kClip;
    for (double& x : m.v)
        if (std::fabs(x) > cap) {
            d.clipped = true;
            x = std::copysign(cap, x);
        }
    const Field c = K.convolve(m);
    const auto& g = m.grid;
    const std::size_t nt = g.nt();
    const int n = g.nperp;
    auto face = [&](double a, double b, double ca, double cb, double h) {
        const double s = face_mobility(a, b, P.beta);
        const double dmu = (std::atanh((b - a) / (1.0 - a * b)) / P.beta - (cb - ca)) / h;
        return s * dmu * dmu;
    };
    CompensatedSum ax, tr;
    for (int i = 0; i + 1 < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j)
            ax.add(face(m.at(i, j), m.at(i + 1, j), c.at(i, j), c.at(i + 1, j), g.h1));
    for (int k = 0; k < g.d(); ++k)
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                std::size_t jn;
                if (g.D == 2)
                    jn = (j + 1) % n;
                else {
                    int j2 = static_cast<int>(j) / n, j3 = static_cast<int>(j) % n;
                    if (k == 0)
                        j2 = (j2 + 1) % n;
                    else
                        j3 = (j3 + 1) % n;
                    jn = static_cast<std::size_t>(j2 * n + j3);
                }
                tr.add(face(m.at(i, j), m.at(i, jn), c.at(i, j), c.at(i, jn), g.hp));
            }
    d.axial = ax.value() * g.cell();
    d.transverse = tr.value() * g.cell();
    d.total = d.axial + d.transverse;
    return d;
}

}  // namespace kf
