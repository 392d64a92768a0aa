#include "kfront/analysis.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kfront/numeric.hpp"

namespace kf {

// ---------------------------------------------------------------- log

namespace {

struct ColumnRef {
    const char* name;
    double TrajectoryRow::*ptr;
};

const std::vector<ColumnRef>& column_refs() {
    static const std::vector<ColumnRef> c = {
        {"t", &TrajectoryRow::t},
        {"excess_F", &TrajectoryRow::excess_F},
        {"dissipation_I_axial", &TrajectoryRow::dissipation_I_axial},
        {"dissipation_I_transverse", &TrajectoryRow::dissipation_I_transverse},
        {"dissipation_I_total", &TrajectoryRow::dissipation_I_total},
        {"a_t", &TrajectoryRow::a_t},
        {"mass_defect", &TrajectoryRow::mass_defect},
        {"phi", &TrajectoryRow::phi},
        {"phi_unweighted", &TrajectoryRow::phi_unweighted},
        {"l1_v", &TrajectoryRow::l1_v},
        {"l2_v", &TrajectoryRow::l2_v},
        {"h1_v", &TrajectoryRow::h1_v},
        {"h2_v", &TrajectoryRow::h2_v},
        {"x1_v", &TrajectoryRow::x1_v},
        {"x1_v0", &TrajectoryRow::x1_v0},
        {"linf_m", &TrajectoryRow::linf_m},
        {"boundary_activity", &TrajectoryRow::boundary_activity},
        {"overshoot_count", &TrajectoryRow::overshoot_count},
    };
    return c;
}

}  // namespace

const std::vector<std::string>& TrajectoryLog::columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& c : column_refs()) n.push_back(c.name);
        return n;
    }();
    return names;
}

std::vector<double> TrajectoryLog::column(const std::string& name) const {
    for (const auto& c : column_refs())
        if (name == c.name) {
            std::vector<double> out;
            out.reserve(rows.size());
            for (const auto& r : rows) out.push_back(r.*(c.ptr));
            return out;
        }
    throw LogError("unknown column: " + name);
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void TrajectoryLog::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw LogError("cannot open " + path);
    const auto& refs = column_refs();
    for (std::size_t k = 0; k < refs.size(); ++k) os << (k ? "," : "") << refs[k].name;
    os << "\r\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < refs.size(); ++k) os << (k ? "," : "") << format_double(r.*(refs[k].ptr));
        os << "\r\n";
    }
    if (!os) throw LogError("write failed: " + path);
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return cols[k];
    throw LogError("missing column: " + name);
}

bool CsvTable::has(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LogError("cannot open " + path);
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        bool quoted = false;
        for (char ch : s) {
            if (ch == '"')
                quoted = !quoted;
            else if (ch == ',' && !quoted) {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r')
                cur += ch;
        }
        out.push_back(cur);
        return out;
    };
    if (!std::getline(is, line)) throw LogError("empty CSV: " + path);
    t.header = split(line);
    t.cols.resize(t.header.size());
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (f.size() != t.header.size()) throw LogError("ragged CSV row in " + path);
        for (std::size_t k = 0; k < f.size(); ++k) t.cols[k].push_back(std::strtod(f[k].c_str(), nullptr));
    }
    return t;
}

TrajectoryLog TrajectoryLog::read(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (!t.has("t")) throw LogError("missing column: t");
    TrajectoryLog log;
    log.rows.resize(t.column("t").size());
    for (const auto& c : column_refs()) {
        if (!t.has(c.name)) continue;
        const auto& col = t.column(c.name);
        for (std::size_t k = 0; k < log.rows.size(); ++k) log.rows[k].*(c.ptr) = col[k];
    }
    return log;
}

// ---------------------------------------------------------------- tracking

namespace {

struct DistEval {
    double d, d1, d2;
};

DistEval distance(const Axial& m1, const FrontFamily& fam, double b) {
    Axial v, dv, d2v;
    fam.eval(b, v, dv, d2v);
    CompensatedSum s0, s1, s2;
    for (std::size_t i = 0; i < m1.size(); ++i) {
        const double r = m1[i] - v[i];
        s0.add(r * r);
        s1.add(r * dv[i]);
        s2.add(dv[i] * dv[i] - r * d2v[i]);
    }
    const double h = fam.h();
    return {s0.value() * h, 2.0 * s1.value() * h, 2.0 * s2.value() * h};
}

double distance_only(const Axial& m1, const FrontFamily& fam, double b) {
    const Axial v = fam.values(b);
    CompensatedSum s;
    for (std::size_t i = 0; i < m1.size(); ++i) s.add((m1[i] - v[i]) * (m1[i] - v[i]));
    return s.value() * fam.h();
}

}  // namespace

FrontFit track_front(const Field& m, const FrontFamily& fam, double a_prev) {
    const Axial m1 = transverse_mean(m);
    if (m1.size() != fam.base().m.size()) throw TrackingError("field and front family differ axially");
    const double h = fam.h();
    const double reach = 10.0 * h;
    FrontFit fit;
    // Newton from a_prev.
    double b = a_prev;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
        const DistEval e = distance(m1, fam, b);
        fit.iterations = it + 1;
        if (!(e.d2 > 0.0)) break;
        const double step = e.d1 / e.d2;
        b -= step;
        if (!std::isfinite(b) || std::fabs(b - a_prev) > 2.0 * h) break;
        if (std::fabs(step) <= 1e-13 * std::max(1.0, std::fabs(b))) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        // Golden section on [c - 2h, c + 2h], recentred while the minimum sits on an edge.
        fit.fallback = true;
        double c = a_prev;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int rounds = 0;; ++rounds) {
            double lo = c - 2.0 * h, hi = c + 2.0 * h;
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = distance_only(m1, fam, x1), f2 = distance_only(m1, fam, x2);
            while (hi - lo > 1e-12 * std::max(1.0, std::fabs(c))) {
                if (f1 < f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = distance_only(m1, fam, x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = distance_only(m1, fam, x2);
                }
                ++fit.iterations;
            }
            const double nb = 0.5 * (lo + hi);
            const bool edge = std::fabs(nb - c) > 2.0 * h * (1.0 - 1e-6);
            c = nb;
            if (!edge) break;
            if (std::fabs(c - a_prev) > reach || rounds > 8) throw TrackingError("front moved more than 10 h1");
        }
        b = c;
    }
    if (std::fabs(b - a_prev) > reach) throw TrackingError("front moved more than 10 h1");
    const DistEval e = distance(m1, fam, b);
    fit.a = b;
    fit.d = e.d;
    fit.d1 = e.d1;
    fit.d2 = e.d2;
    fit.convex = e.d2 > 0.0;
    if (!fit.convex) throw TrackingError("ambiguous front: distance not convex at the minimizer");
    return fit;
}

double scan_front(const Field& m, const FrontFamily& fam) {
    const Axial m1 = transverse_mean(m);
    const double h = fam.h(), X = fam.base().grid.X;
    const int k = static_cast<int>(std::floor(0.25 * X / h));
    double best = 0.0, bd = INFINITY;
    for (int i = -k; i <= k; ++i) {
        const double d = distance_only(m1, fam, i * h);
        if (d < bd) {
            bd = d;
            best = i * h;
        }
    }
    return best;
}

Split split_field(const Field& v) {
    Split s;
    s.v1 = transverse_mean(v);
    s.w = v;
    const std::size_t nt = v.grid.nt();
    for (int i = 0; i < v.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) s.w.at(i, j) -= s.v1[i];
    s.w.lo = s.w.hi = 0.0;
    return s;
}

// ---------------------------------------------------------------- energies and moments

double reference_free_energy(const FrontFamily& fam, const ModelParams& P, const Kernel& K) {
    return K.grid().cross_area() * free_energy_1d(fam.base().m, P, K);
}

double excess_free_energy(const Field& m, const ModelParams& P, const Kernel& K, double F_ref) {
    return free_energy(m, P, K) - F_ref;
}

double moment_phi(const Field& v, const OperatorContext& ctx, PhiVariant var) {
    Field Bv = apply_B(ctx, v);
    const auto& g = v.grid;
    const std::size_t nt = g.nt();
    for (int i = 0; i < g.n1; ++i) {
        const double x = g.x1(i);
        const double w = var == PhiVariant::weighted ? x * x * ctx.sigma[i] : x * x;
        for (std::size_t j = 0; j < nt; ++j) Bv.at(i, j) = w * Bv.at(i, j) * Bv.at(i, j);
    }
    return g.cross_area() + integrate(Bv);
}

double shift_from_mass(const Field& m0, const FrontFamily& fam, const ModelParams& P) {
    return -conserved_mass_defect(m0, fam, 0.0) / (2.0 * P.mbeta * m0.grid.cross_area());
}

Field perturbation(const Field& m, const FrontFamily& fam, double a) {
    const Axial ref = fam.values(a);
    Field v = m;
    const std::size_t nt = m.grid.nt();
    for (int i = 0; i < m.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) v.at(i, j) -= ref[i];
    v.lo = v.hi = 0.0;
    return v;
}

double boundary_activity(const Field& v, int rows) {
    const auto& g = v.grid;
    const std::size_t nt = g.nt();
    double mx = 0.0;
    for (int r = 0; r < std::min(rows, g.n1); ++r)
        for (std::size_t j = 0; j < nt; ++j)
            mx = std::max({mx, std::fabs(v.at(r, j)), std::fabs(v.at(g.n1 - 1 - r, j))});
    return mx;
}

// ---------------------------------------------------------------- fits

namespace {

struct LinFit {
    double slope = 0, icpt = 0, sse = 0, sst = 0;
};

LinFit lsq(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.icpt = my - f.slope * mx;
    f.sst = syy;
    f.sse = std::max(0.0, syy - f.slope * sxy);
    return f;
}

}  // namespace

ExponentFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
    std::vector<double> ts, ly;
    for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        if (!(y[i] > 0.0)) throw FitError("non-positive value in fit window");
        ts.push_back(t[i]);
        ly.push_back(std::log(y[i]));
    }
    if (ts.size() < 3) throw FitError("fewer than three points in fit window");
    auto sse_at = [&](double lc, LinFit* out) {
        const double c = std::exp(lc);
        std::vector<double> x(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) x[i] = std::log1p(c * ts[i]);
        const LinFit f = lsq(x, ly);
        if (out) *out = f;
        return f.sse;
    };
    // Coarse scan of log c1, then golden refinement around the best node.
    const double lmin = std::log(1e-6), lmax = std::log(1e6);
    const int nscan = 241;
    double best = lmin, bsse = INFINITY;
    for (int k = 0; k < nscan; ++k) {
        const double lc = lmin + (lmax - lmin) * k / (nscan - 1);
        const double s = sse_at(lc, nullptr);
        if (s < bsse) {
            bsse = s;
            best = lc;
        }
    }
    const double step = (lmax - lmin) / (nscan - 1);
    double lo = best - step, hi = best + step;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = sse_at(x1, nullptr), f2 = sse_at(x2, nullptr);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = sse_at(x1, nullptr);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = sse_at(x2, nullptr);
        }
    }
    double lc = 0.5 * (lo + hi);
    if (sse_at(lc, nullptr) > bsse) lc = best;
    LinFit f;
    sse_at(lc, &f);
    ExponentFit r;
    r.q = -f.slope;
    r.c1 = std::exp(lc);
    r.log_y0 = f.icpt;
    r.r2 = f.sst > 0 ? 1.0 - f.sse / f.sst : 1.0;
    r.n = static_cast<int>(ts.size());
    if (f.sst == 0.0) r.q = 0.0;
    return r;
}

ExponentFit fit_decay_exponent(const TrajectoryLog& log, const std::string& column, double t0, double t1) {
    return fit_decay_exponent(log.column("t"), log.column(column), t0, t1);
}

namespace {

// First-derivative weights at x0 for nodes x (Fornberg's recursion).
std::vector<double> fornberg_d1(double x0, const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

}  // namespace

std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& y) {
    const int n = static_cast<int>(t.size());
    if (n < 2 || y.size() != t.size()) throw FitError("time derivative needs at least two samples");
    const int width = std::min(n, 5);
    std::vector<double> d(n);
    for (int k = 0; k < n; ++k) {
        const int lo = std::clamp(k - width / 2, 0, n - width);
        const std::vector<double> xs(t.begin() + lo, t.begin() + lo + width);
        const auto w = fornberg_d1(t[k], xs);
        CompensatedSum s;
        for (int q = 0; q < width; ++q) s.add(w[q] * y[lo + q]);
        d[k] = s.value();
    }
    return d;
}

// ---------------------------------------------------------------- diagnostics

Diagnostics::Diagnostics(const ModelParams& P, const Kernel& K, const FrontFamily& fam, const Field& m0)
    : P_(P), K_(&K), fam_(&fam) {
    F_ref_ = reference_free_energy(fam, P, K);
    a_pred_ = shift_from_mass(m0, fam, P);
    a_prev_ = a_pred_;
}

TrajectoryRow Diagnostics::measure(const SimState& s) {
    const Field& m = s.m;
    const auto& g = m.grid;
    TrajectoryRow r;
    r.t = s.t;
    if (first_) a_prev_ = scan_front(m, *fam_);
    const FrontFit fit = track_front(m, *fam_, a_prev_);
    a_prev_ = fit.a;
    if (first_) {
        a0_ = fit.a;
        first_ = false;
    }
    r.a_t = fit.a;
    r.excess_F = excess_free_energy(m, P_, *K_, F_ref_);
    const Dissipation I = dissipation(m, P_, *K_);
    r.dissipation_I_axial = I.axial;
    r.dissipation_I_transverse = I.transverse;
    r.dissipation_I_total = I.total;
    r.mass_defect = conserved_mass_defect(m, *fam_, a_pred_);

    const Field v = perturbation(m, *fam_, fit.a);
    const OperatorContext ctx = make_context(P_, *K_, *fam_, fit.a);
    r.phi = moment_phi(v, ctx, PhiVariant::weighted);
    r.phi_unweighted = moment_phi(v, ctx, PhiVariant::unweighted);
    Field av = v, xv = v;
    const Field v0 = perturbation(m, *fam_, a0_);
    Field xv0 = v0;
    const std::size_t nt = g.nt();
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            av.at(i, j) = std::fabs(v.at(i, j));
            xv.at(i, j) = g.x1(i) * v.at(i, j);
            xv0.at(i, j) = g.x1(i) * v0.at(i, j);
        }
    r.l1_v = integrate(av);
    r.l2_v = norm2(v);
    r.h1_v = std::sqrt(grad_norm2(v));
    r.h2_v = norm2(laplacian(v));
    r.x1_v = norm2(xv);
    r.x1_v0 = norm2(xv0);
    double linf = 0.0;
    for (double x : m.v) linf = std::max(linf, std::fabs(x));
    r.linf_m = linf;
    r.boundary_activity = boundary_activity(v);
    r.overshoot_count = static_cast<double>(s.overshoots);
    return r;
}

TrajectoryLog simulate(const Field& m0, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K,
                       const FrontFamily& fam, SimState* final_state) {
    Diagnostics diag(P, K, fam, m0);
    TrajectoryLog log;
    const SimState s = run(m0, cfg, P, K, [&](const SimState& st) { log.rows.push_back(diag.measure(st)); });
    if (final_state) *final_state = s;
    return log;
}

}  // namespace kf
