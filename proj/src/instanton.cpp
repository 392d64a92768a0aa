#include "kfront/instanton.hpp"

#include <array>
#include <cmath>

#include "kfront/numeric.hpp"

namespace kf {

namespace {

constexpr int kLo = -3, kNodes = 8;

// Monomial coefficients of the eight Lagrange basis polynomials on nodes -3..4.
const std::array<std::array<double, kNodes>, kNodes>& basis() {
    static const auto B = [] {
        std::array<std::array<double, kNodes>, kNodes> b{};
        for (int r = 0; r < kNodes; ++r) {
            std::array<double, kNodes> poly{};
            poly[0] = 1.0;
            int deg = 0;
            double den = 1.0;
            for (int l = 0; l < kNodes; ++l) {
                if (l == r) continue;
                const double xl = kLo + l;
                // poly *= (t - xl)
                for (int k = deg + 1; k >= 1; --k) poly[k] = poly[k - 1] - xl * poly[k];
                poly[0] = -xl * poly[0];
                ++deg;
                den *= (kLo + r) - xl;
            }
            for (int k = 0; k < kNodes; ++k) b[r][k] = poly[k] / den;
        }
        return b;
    }();
    return B;
}

Axial centered_diff(const Axial& m, double lo, double hi, double h) {
    const int n = static_cast<int>(m.size());
    Axial d(n);
    for (int i = 0; i < n; ++i) {
        const double a = i > 0 ? m[i - 1] : lo;
        const double b = i + 1 < n ? m[i + 1] : hi;
        d[i] = (b - a) / (2.0 * h);
    }
    return d;
}

Axial second_diff(const Axial& m, double lo, double hi, double h) {
    const int n = static_cast<int>(m.size());
    Axial d(n);
    for (int i = 0; i < n; ++i) {
        const double a = i > 0 ? m[i - 1] : lo;
        const double b = i + 1 < n ? m[i + 1] : hi;
        d[i] = (b - 2.0 * m[i] + a) / (h * h);
    }
    return d;
}

}  // namespace

Interp3 lagrange8(const Axial& f, double lo, double hi, double s) {
    const int n = static_cast<int>(f.size());
    const double fl = std::floor(s);
    const int k = static_cast<int>(fl);
    const double t = s - fl;
    const auto& B = basis();
    Interp3 r;
    for (int q = 0; q < kNodes; ++q) {
        const int idx = k + kLo + q;
        const double fv = idx < 0 ? lo : (idx >= n ? hi : f[idx]);
        if (fv == 0.0) continue;
        double p = 0.0, dp = 0.0, d2p = 0.0;
        for (int c = kNodes - 1; c >= 0; --c) {
            d2p = d2p * t + 2.0 * dp;
            dp = dp * t + p;
            p = p * t + B[q][c];
        }
        r.v += p * fv;
        r.d1 += dp * fv;
        r.d2 += d2p * fv;
    }
    return r;
}

double instanton_residual(const Axial& m, const ModelParams& P, const Kernel& K) {
    const Axial c = K.convolve_bar(m, -P.mbeta, P.mbeta);
    double r = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) r = std::max(r, std::fabs(m[i] - std::tanh(P.beta * c[i])));
    return r;
}

Profile1D solve_instanton(const ModelParams& P, const Kernel& K, double tol, int max_iter) {
    if (!(P.beta > 1.0)) throw InstantonError("no front below the critical temperature (beta <= 1)", NAN, 0);
    Profile1D p;
    p.grid = make_grid(1, K.grid().X, K.grid().n1);
    p.grid.pad = K.pad();
    p.mbeta = P.mbeta;
    const int n = p.grid.n1;
    Axial m(n), next(n);
    for (int i = 0; i < n; ++i) m[i] = P.mbeta * std::tanh(p.grid.x1(i));
    double theta = 1.0, prev = INFINITY, res = INFINITY;
    int it = 0;
    for (;; ++it) {
        const Axial c = K.convolve_bar(m, -P.mbeta, P.mbeta);
        res = 0.0;
        for (int i = 0; i < n; ++i) {
            next[i] = std::tanh(P.beta * c[i]);
            res = std::max(res, std::fabs(m[i] - next[i]));
        }
        p.history.push_back(res);
        if (!std::isfinite(res)) throw InstantonError("fixed point iteration produced a non-finite residual", res, it);
        if (res <= tol) break;
        if (res > prev) {
            if (theta == 1.0)
                theta = 0.5;
            else
                throw InstantonError("residual increased under damped iteration", res, it);
        }
        if (it >= max_iter) throw InstantonError("fixed point iteration did not converge", res, it);
        prev = res;
        for (int i = 0; i < n; ++i) m[i] = (1.0 - theta) * m[i] + theta * next[i];
    }
    // Pin the a = 0 representative at the zero crossing.
    double c0 = 0.0;
    for (int i = 0; i + 1 < n; ++i)
        if (m[i] < 0.0 && m[i + 1] >= 0.0) {
            c0 = p.grid.x1(i) - m[i] * p.grid.h1 / (m[i + 1] - m[i]);
            break;
        }
    if (c0 != 0.0) {
        Axial shifted(n);
        for (int i = 0; i < n; ++i) shifted[i] = lagrange8(m, -P.mbeta, P.mbeta, i + c0 / p.grid.h1).v;
        m = shifted;
        res = instanton_residual(m, P, K);
    }
    p.m = m;
    p.residual = res;
    p.iterations = it;
    p.theta = theta;
    p.dm = centered_diff(m, -P.mbeta, P.mbeta, p.grid.h1);
    p.d2m = second_diff(m, -P.mbeta, P.mbeta, p.grid.h1);
    return p;
}

// ---------------------------------------------------------------- family

FrontFamily::FrontFamily(Profile1D base) : base_(std::move(base)) {}

void FrontFamily::eval(double a, Axial& val, Axial& d1, Axial& d2) const {
    const int n = base_.grid.n1;
    const double h = base_.grid.h1;
    val.resize(n);
    d1.resize(n);
    d2.resize(n);
    for (int i = 0; i < n; ++i) {
        const Interp3 r = lagrange8(base_.m, -base_.mbeta, base_.mbeta, i - a / h);
        val[i] = r.v;
        d1[i] = r.d1 / h;
        d2[i] = r.d2 / (h * h);
    }
}

Axial FrontFamily::values(double a) const {
    const int n = base_.grid.n1;
    const double h = base_.grid.h1;
    Axial v(n);
    for (int i = 0; i < n; ++i) v[i] = lagrange8(base_.m, -base_.mbeta, base_.mbeta, i - a / h).v;
    return v;
}

Axial FrontFamily::derivative(double a) const {
    const int n = base_.grid.n1;
    const double h = base_.grid.h1;
    Axial v(n);
    for (int i = 0; i < n; ++i) v[i] = lagrange8(base_.dm, 0.0, 0.0, i - a / h).v;
    return v;
}

Axial FrontFamily::second_derivative(double a) const {
    const int n = base_.grid.n1;
    const double h = base_.grid.h1;
    Axial v(n);
    for (int i = 0; i < n; ++i) v[i] = lagrange8(base_.d2m, 0.0, 0.0, i - a / h).v;
    return v;
}

double FrontFamily::derivative_at(double x) const {
    const auto& g = base_.grid;
    if (x < -g.X - 4 * g.h1 || x > g.X + 4 * g.h1) return 0.0;
    return lagrange8(base_.dm, 0.0, 0.0, (x + g.X) / g.h1).v;
}

Field shifted_front(const FrontFamily& fam, double a, const CylinderGrid& g) {
    const auto& b = fam.base().grid;
    if (g.n1 != b.n1 || g.X != b.X) throw ShiftError("front family and target grid differ axially");
    if (!(std::fabs(a) <= 0.5 * g.X)) throw ShiftError("shift too large for the truncation margin");
    return extend_axial(g, fam.values(a), -fam.mbeta(), fam.mbeta());
}

// ---------------------------------------------------------------- decay

namespace {

struct LineFit {
    double slope = 0, intercept = 0, r2 = 0;
    int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.n = static_cast<int>(x.size());
    if (f.n < 2) return f;
    double mx = 0, my = 0;
    for (int i = 0; i < f.n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= f.n;
    my /= f.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

// Fit log q against |x| over the tail: values between 1e-2 and 1e-10 of the
// peak, so the fit starts past the core and stops above round-off.
LineFit tail_fit(const CylinderGrid& g, const Axial& q) {
    double qmax = 0.0;
    for (double v : q) qmax = std::max(qmax, std::fabs(v));
    if (qmax == 0.0) return {};
    std::vector<double> xs, ys;
    for (int i = 0; i < g.n1; ++i) {
        const double v = std::fabs(q[i]);
        if (v >= 1e-10 * qmax && v <= 1e-2 * qmax) {
            xs.push_back(std::fabs(g.x1(i)));
            ys.push_back(std::log(v));
        }
    }
    return fit_line(xs, ys);
}

}  // namespace

DecayFit verify_decay(const Profile1D& p) {
    const auto& g = p.grid;
    Axial q0(g.n1);
    for (int i = 0; i < g.n1; ++i) q0[i] = p.mbeta * p.mbeta - p.m[i] * p.m[i];
    const LineFit f0 = tail_fit(g, q0), f1 = tail_fit(g, p.dm), f2 = tail_fit(g, p.d2m);
    if (f0.n < 4 || f1.n < 4 || f2.n < 4) throw DecayError("decay fit window empty");
    DecayFit d;
    d.alpha = -f0.slope;
    d.C = std::exp(f0.intercept);
    d.r2 = f0.r2;
    d.alpha_d1 = -f1.slope;
    d.r2_d1 = f1.r2;
    d.alpha_d2 = -f2.slope;
    d.r2_d2 = f2.r2;
    d.window = f0.n;
    // Strict where m differs from m_beta in double precision; in the saturated
    // tails differences are round-off and only need to stay above -1e-14.
    d.increasing = true;
    for (int i = 1; i + 1 < g.n1; ++i) {
        const bool resolved = p.mbeta - std::fabs(p.m[i]) > 1e-14;
        if (p.dm[i] * g.h1 < -1e-14 || (resolved && !(p.dm[i] > 0.0))) d.increasing = false;
    }
    d.pass = d.alpha > 0 && d.alpha_d1 > 0 && d.alpha_d2 > 0 && d.r2 >= 0.99 && d.r2_d1 >= 0.99 && d.r2_d2 >= 0.99;
    return d;
}

}  // namespace kf
