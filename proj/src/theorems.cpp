#include "kfront/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kfront/numeric.hpp"

namespace kf {

// ---------------------------------------------------------------- reports

CheckReport make_report(std::string name, std::string digest, double lhs, double rhs, double slack,
                        std::string note) {
    CheckReport r;
    r.name = std::move(name);
    r.digest = std::move(digest);
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs - lhs;
    r.slack = slack;
    r.pass = r.margin >= -slack;
    r.note = std::move(note);
    return r;
}

namespace {

std::string json_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '"' || c == '\\') o += '\\';
        if (c == '\n') {
            o += "\\n";
            continue;
        }
        o += c;
    }
    return o;
}

std::string json_number(double x) {
    if (std::isnan(x)) return "\"nan\"";
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    return format_double(x);
}

std::string digest_of(std::initializer_list<const std::vector<double>*> parts, std::uint64_t extra = 0) {
    std::uint64_t h = fnv1a(&extra, sizeof extra);
    for (const auto* p : parts) h = digest_doubles(*p, h);
    return hex64(h);
}

}  // namespace

std::string CheckReport::to_json() const {
    std::ostringstream os;
    os << "{\"check\":\"" << json_escape(name) << "\",\"digest\":\"" << digest << "\",\"lhs\":" << json_number(lhs)
       << ",\"rhs\":" << json_number(rhs) << ",\"margin\":" << json_number(margin)
       << ",\"slack\":" << json_number(slack) << ",\"pass\":" << (pass ? "true" : "false") << ",\"note\":\""
       << json_escape(note) << "\"}";
    return os.str();
}

// ---------------------------------------------------------------- random fields

Field random_smooth_field(const CylinderGrid& g, Rng& rng, double amplitude, double center_span) {
    Field f(g, 0.0);
    const int nb = rng.integer(2, 4);
    const std::size_t nt = g.nt();
    for (int b = 0; b < nb; ++b) {
        const double c = rng.uniform(-center_span, center_span);
        const double s = rng.uniform(0.3, 0.7);
        const double a = rng.uniform(-1.0, 1.0);
        int k2 = 0, k3 = 0;
        double th = 0.0, tw = 0.0;
        if (g.D >= 2) {
            k2 = rng.integer(0, 2);
            k3 = g.D == 3 ? rng.integer(0, 2) : 0;
            th = rng.uniform(0.0, 2.0 * M_PI);
            tw = rng.uniform(0.0, 1.0);
        }
        for (int i = 0; i < g.n1; ++i) {
            const double x = g.x1(i) - c;
            const double e = a * std::exp(-0.5 * x * x / (s * s));
            for (std::size_t j = 0; j < nt; ++j) {
                double tr = 1.0;
                if (g.D >= 2) {
                    const double y2 = transverse_coord(g, j, 0);
                    const double y3 = g.D == 3 ? transverse_coord(g, j, 1) : 0.0;
                    tr += tw * std::cos(2.0 * M_PI * (k2 * y2 + k3 * y3) / g.L + th);
                }
                f.at(i, j) += e * tr;
            }
        }
    }
    double mx = 0.0;
    for (double x : f.v) mx = std::max(mx, std::fabs(x));
    if (mx > 0.0)
        for (double& x : f.v) x *= amplitude / mx;
    return f;
}

// ---------------------------------------------------------------- uncertainty

namespace {

double value_at_zero(const CylinderGrid& g1, const Axial& psi) {
    return lagrange8(psi, 0.0, 0.0, g1.X / g1.h1).v;
}

}  // namespace

CheckReport check_uncertainty(const CylinderGrid& g1, const Axial& psi, Constraint c) {
    if (g1.D != 1 || static_cast<int>(psi.size()) != g1.n1) throw CheckError("uncertainty check needs a 1D field");
    double amax = 0.0, aint = 0.0;
    for (double x : psi) {
        amax = std::max(amax, std::fabs(x));
        aint += std::fabs(x) * g1.h1;
    }
    if (c == Constraint::mean_zero) {
        const double m = integrate_axial(psi, g1.h1);
        if (std::fabs(m) > 1e-10 * std::max(aint, 1e-300) && amax > 0) throw CheckError("psi does not have mean zero");
    } else {
        if (std::fabs(value_at_zero(g1, psi)) > 1e-10 * amax && amax > 0) throw CheckError("psi does not vanish at 0");
    }
    Field f(g1, 0.0);
    f.v = psi;
    const Field d = spectral_axial_derivative(f);
    Axial d2(psi.size()), x2(psi.size()), p2(psi.size());
    for (int i = 0; i < g1.n1; ++i) {
        const double x = g1.x1(i);
        d2[i] = d.v[i] * d.v[i];
        x2[i] = x * x * psi[i] * psi[i];
        p2[i] = psi[i] * psi[i];
    }
    const double a = integrate_axial(d2, g1.h1), b = integrate_axial(x2, g1.h1), n = integrate_axial(p2, g1.h1);
    const double lhs = 2.25 * n * n, rhs = a * b;
    return make_report(c == Constraint::mean_zero ? "uncertainty_mean_zero" : "uncertainty_vanishes_at_0",
                       digest_of({&psi}), lhs, rhs, 1e-6 * lhs);
}

double uncertainty_ratio(const CheckReport& r) { return r.lhs == 0.0 ? 1.0 : r.rhs / r.lhs; }

Axial random_constrained_psi(const CylinderGrid& g1, Rng& rng, Constraint c) {
    const int nb = rng.integer(1, 4);
    std::vector<double> cen(nb), wid(nb), amp(nb);
    for (int b = 0; b < nb; ++b) {
        cen[b] = rng.uniform(-3.0, 3.0);
        wid[b] = rng.uniform(0.3, 2.0);
        amp[b] = rng.uniform(-1.0, 1.0);
    }
    auto raw = [&](double x) {
        double s = 0.0;
        for (int b = 0; b < nb; ++b) s += amp[b] * std::exp(-0.5 * (x - cen[b]) * (x - cen[b]) / (wid[b] * wid[b]));
        return s;
    };
    Axial psi(g1.n1), gs(g1.n1);
    for (int i = 0; i < g1.n1; ++i) {
        const double x = g1.x1(i);
        psi[i] = raw(x);
        gs[i] = std::exp(-0.5 * x * x);
    }
    // Remove the constraint violation along exp(-x^2/2).
    const double k = c == Constraint::mean_zero ? integrate_axial(psi, g1.h1) / integrate_axial(gs, g1.h1) : raw(0.0);
    for (int i = 0; i < g1.n1; ++i) psi[i] -= k * gs[i];
    return psi;
}

// ---------------------------------------------------------------- L1 interpolation

double interpolation_constant(double delta, double L, int D) {
    // int_R (1 + x^2)^{-s} dx = sqrt(pi) Gamma(s - 1/2) / Gamma(s), s = (1 + delta) / 2.
    const double s = 0.5 * (1.0 + delta);
    const double line = std::sqrt(M_PI) * std::tgamma(s - 0.5) / std::tgamma(s);
    return std::sqrt(std::pow(L, D - 1) * line);
}

CheckReport check_l1_interpolation(const Field& w, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw CheckError("delta must lie in (0, 1)");
    const auto& g = w.grid;
    Field a = w, b = w, c = w;
    const std::size_t nt = g.nt();
    for (int i = 0; i < g.n1; ++i) {
        const double x = g.x1(i);
        for (std::size_t j = 0; j < nt; ++j) {
            const double v = w.at(i, j);
            a.at(i, j) = std::fabs(v);
            b.at(i, j) = (1.0 + x * x) * v * v;
            c.at(i, j) = v * v;
        }
    }
    const double l1 = integrate(a);
    const double wn = std::sqrt(integrate(b)), n2 = std::sqrt(integrate(c));
    const double C = interpolation_constant(delta, g.L, g.D);
    const double rhs = C * std::pow(wn, 0.5 * (1 + delta)) * std::pow(n2, 0.5 * (1 - delta));
    std::ostringstream note;
    note << "C=" << format_double(C);
    return make_report("l1_interpolation", digest_of({&w.v}), l1, rhs, 1e-6 * rhs, note.str());
}

// ---------------------------------------------------------------- sandwich

namespace {

void require_orthogonal(const Field& v, const OperatorContext& ctx) {
    const Axial v1 = transverse_mean(v);
    CompensatedSum dot, vv, mm;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        dot.add(v1[i] * ctx.dmbar[i]);
        vv.add(v1[i] * v1[i]);
        mm.add(ctx.dmbar[i] * ctx.dmbar[i]);
    }
    if (std::fabs(dot.value()) > 1e-8 * std::sqrt(vv.value() * mm.value()) + 1e-300)
        throw CheckError("v is not orthogonal to m_bar'");
}

Field front_plus(const OperatorContext& ctx, const Field& v) {
    Field m = extend_axial(v.grid, ctx.mbar, -ctx.P.mbeta, ctx.P.mbeta);
    for (std::size_t k = 0; k < m.size(); ++k) m.v[k] += v.v[k];
    return m;
}

}  // namespace

std::vector<CheckReport> check_sandwich(const Field& v, const OperatorContext& ctx, const SandwichOptions& o) {
    require_orthogonal(v, ctx);
    const std::string dg = digest_of({&v.v});
    const Field m0 = extend_axial(v.grid, ctx.mbar, -ctx.P.mbeta, ctx.P.mbeta);
    const double dF = free_energy(front_plus(ctx, v), ctx.P, *ctx.K) - free_energy(m0, ctx.P, *ctx.K);
    const Field Bv = apply_B(ctx, v);
    const double quad = 0.5 * inner(v, Bv, Quadrature::cell);
    const double n2 = inner(v, v, Quadrature::cell);
    double c = o.c_upper;
    if (c <= 0.0) c = 0.5 * (*std::max_element(ctx.weight.begin(), ctx.weight.end()) + 1.0) * 1.1;
    const double scale = std::max(std::fabs(dF), 1e-300);
    std::vector<CheckReport> r;
    r.push_back(make_report("sandwich_lower", dg, 0.25 * o.gamma * n2, dF, 1e-6 * scale));
    r.push_back(make_report("sandwich_upper", dg, dF, c * n2, 1e-6 * scale, "c=" + format_double(c)));
    const double ratio = quad != 0.0 ? dF / quad : (dF == 0.0 ? 1.0 : INFINITY);
    r.push_back(make_report("sandwich_ratio", dg, std::fabs(ratio - 1.0), o.ratio_eps, 0.0,
                            "ratio=" + format_double(ratio)));
    return r;
}

// ---------------------------------------------------------------- operator remainders

const char* rho_name(Rho r) {
    switch (r) {
        case Rho::J:
            return "J";
        case Rho::Jbar:
            return "Jbar";
        default:
            return "smearing";
    }
}

namespace {

// Forward differences over all faces, including the two faces to the zero far field.
double forward_grad_norm2(const Field& v) {
    const auto& g = v.grid;
    const std::size_t nt = g.nt();
    CompensatedSum s;
    for (int i = -1; i < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            const double a = i >= 0 ? v.at(i, j) : 0.0;
            const double b = i + 1 < g.n1 ? v.at(i + 1, j) : 0.0;
            s.add((b - a) * (b - a) / (g.h1 * g.h1));
        }
    const int n = g.nperp;
    for (int k = 0; k < g.d(); ++k)
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                std::size_t jn;
                if (g.D == 2)
                    jn = (j + 1) % n;
                else {
                    int j2 = static_cast<int>(j) / n, j3 = static_cast<int>(j) % n;
                    (k == 0 ? j2 : j3) = ((k == 0 ? j2 : j3) + 1) % n;
                    jn = static_cast<std::size_t>(j2 * n + j3);
                }
                const double d = v.at(i, jn) - v.at(i, j);
                s.add(d * d / (g.hp * g.hp));
            }
    return s.value() * g.cell();
}

}  // namespace

CheckReport check_smoother_defect(const Field& v, const OperatorContext& ctx, Rho rho) {
    const std::string dg = digest_of({&v.v}, static_cast<std::uint64_t>(rho));
    double diff2 = 0.0, grad2 = 0.0, moment = 0.0;
    if (rho == Rho::J) {
        Field z = v;
        z.lo = z.hi = 0.0;
        const Field c = ctx.K->convolve(z);
        Field d = z;
        for (std::size_t k = 0; k < d.size(); ++k) d.v[k] -= c.v[k];
        diff2 = inner(d, d, Quadrature::cell);
        grad2 = forward_grad_norm2(z);
        moment = ctx.K->abs_moment();
    } else {
        const Axial v1 = transverse_mean(v);
        const Axial c = rho == Rho::Jbar ? ctx.K->convolve_bar(v1, 0.0, 0.0) : apply_S(ctx, v1);
        Axial d(v1.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = (v1[i] - c[i]) * (v1[i] - c[i]);
        diff2 = integrate_axial(d, ctx.grid.h1, Quadrature::cell);
        const CylinderGrid g1 = make_grid(1, ctx.grid.X, ctx.grid.n1);
        Field f(g1, 0.0);
        f.v = v1;
        grad2 = forward_grad_norm2(f);
        moment = rho == Rho::Jbar ? ctx.K->abs_moment_bar() : smearing_abs_moment(ctx);
    }
    const double den = std::sqrt(grad2) * moment;
    const double ratio = den > 0.0 ? std::sqrt(diff2) / den : 0.0;
    return make_report(std::string("smoother_defect_") + rho_name(rho), dg, ratio, 1.0, 1e-6);
}

OperatorRatios operator_ratios(const Field& v, const OperatorContext& ctx) {
    OperatorRatios r;
    const double gn = std::sqrt(grad_norm2(v));
    if (!(gn > 0.0)) throw CheckError("gradient of v vanishes");
    Field a = apply_B(ctx, v), b = v;
    const std::size_t nt = v.grid.nt();
    for (int i = 0; i < v.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            a.at(i, j) -= ctx.P.alpha_tilde * v.at(i, j);
            b.at(i, j) = (ctx.sigma[i] - ctx.P.sigma_beta) * v.at(i, j);
        }
    r.alpha_part = norm2(a) / gn;
    r.mobility_part = norm2(b) / gn;
    return r;
}

std::vector<CheckReport> check_operator_approx(const Field& v, const OperatorContext& ctx) {
    require_orthogonal(v, ctx);
    const std::string dg = digest_of({&v.v});
    const OperatorRatios q = operator_ratios(v, ctx);
    std::vector<CheckReport> r;
    r.push_back(make_report("alpha_remainder_ratio", dg, std::isfinite(q.alpha_part) ? 0.0 : 1.0, 0.0, 0.0,
                            "ratio=" + format_double(q.alpha_part)));
    r.push_back(make_report("mobility_remainder_ratio", dg, std::isfinite(q.mobility_part) ? 0.0 : 1.0, 0.0, 0.0,
                            "ratio=" + format_double(q.mobility_part)));
    r.push_back(check_smoother_defect(v, ctx, Rho::J));
    return r;
}

std::vector<CheckReport> check_operator_family(const OperatorContext& ctx, const std::vector<double>& widths) {
    if (widths.size() < 2) throw CheckError("dilation family needs at least two widths");
    std::vector<OperatorRatios> q;
    std::vector<double> dig;
    for (double l : widths) {
        Axial v1(ctx.grid.n1);
        for (int i = 0; i < ctx.grid.n1; ++i) {
            const double x = (ctx.grid.x1(i) - ctx.a) / l;
            v1[i] = x * std::exp(-0.5 * x * x);
        }
        q.push_back(operator_ratios(extend_axial(ctx.grid, v1, 0.0, 0.0), ctx));
        dig.push_back(l);
    }
    const std::string dg = digest_of({&dig});
    std::vector<CheckReport> r;
    double m1 = 0, m2 = 0;
    std::ostringstream n1, n2;
    for (std::size_t k = 0; k < q.size(); ++k) {
        m1 = std::max(m1, q[k].alpha_part);
        m2 = std::max(m2, q[k].mobility_part);
        n1 << (k ? "," : "") << format_double(q[k].alpha_part);
        n2 << (k ? "," : "") << format_double(q[k].mobility_part);
    }
    // Bounded: the widest member does not exceed the largest ratio seen at the first width.
    r.push_back(make_report("alpha_remainder_family", dg, q.back().alpha_part, q.front().alpha_part, 1e-6 * m1,
                            "ratios=" + n1.str()));
    r.push_back(make_report("mobility_remainder_family", dg, q.back().mobility_part, q.front().mobility_part, 1e-6 * m2,
                            "ratios=" + n2.str()));
    return r;
}

// ---------------------------------------------------------------- identities

std::vector<CheckReport> check_identities(const Field& v0, const OperatorContext& ctx) {
    Field v = v0;
    v.lo = v.hi = 0.0;
    const auto& g = v.grid;
    const std::size_t nt = g.nt();
    const std::string dg = digest_of({&v.v});
    auto maxabs = [](const Field& f) {
        double m = 0.0;
        for (double x : f.v) m = std::max(m, std::fabs(x));
        return m;
    };
    std::vector<CheckReport> r;

    const Field Bv = apply_B(ctx, v);
    {
        Field xv = v, xBv = Bv;
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                xv.at(i, j) *= g.x1(i);
                xBv.at(i, j) *= g.x1(i);
            }
        const Field Bxv = apply_B(ctx, xv), Cv = apply_Cmom(ctx, v);
        Field res = xBv;
        for (std::size_t k = 0; k < res.size(); ++k) res.v[k] += -Bxv.v[k] + Cv.v[k];
        const double scale = std::max({maxabs(xBv), maxabs(Bxv), maxabs(Cv), 1e-300});
        r.push_back(make_report("identity_x1_commutator", dg, maxabs(res) / scale, 0.0, 1e-10));
    }
    {
        Field gt(g, 0.0);
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) gt.at(i, j) = ctx.gtilde[i];
        const Field gs = spectral_axial_derivative(gt);
        const Field dBv = spectral_axial_derivative(Bv);
        const Field dv = spectral_axial_derivative(v);
        const Field Bdv = apply_B(ctx, dv);
        Field res = dBv;
        double scale = maxabs(dBv);
        for (std::size_t k = 0; k < res.size(); ++k) {
            const double gw = gs.v[k] * v.v[k];
            res.v[k] -= gw + Bdv.v[k];
            scale = std::max({scale, std::fabs(gw), std::fabs(Bdv.v[k])});
        }
        r.push_back(make_report("identity_d1_commutator", dg, maxabs(res) / std::max(scale, 1e-300), 0.0, 1e-10));
    }
    {
        const Field Dv = apply_D(ctx, v);
        Field res = Dv;
        double scale = std::max(maxabs(Dv), maxabs(Bv));
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) res.at(i, j) -= Bv.at(i, j) - ctx.gtilde[i] * v.at(i, j);
        r.push_back(make_report("identity_D_split", dg, maxabs(res) / std::max(scale, 1e-300), 0.0, 1e-10));
    }
    {
        const Split sp = split_field(v);
        const Axial Av1 = apply_A(ctx, sp.v1);
        const Field Bw = apply_B(ctx, sp.w);
        auto weighted_dx2 = [&](const Field& f) {
            Field d = grad_axial(f);
            for (int i = 0; i < g.n1; ++i)
                for (std::size_t j = 0; j < nt; ++j) d.at(i, j) = ctx.sigma[i] * d.at(i, j) * d.at(i, j);
            return integrate(d);
        };
        const double lhs = weighted_dx2(Bv);
        const double a = weighted_dx2(extend_axial(g, Av1, 0.0, 0.0));
        const double b = weighted_dx2(Bw);
        r.push_back(make_report("identity_dissipation_split", dg, std::fabs(lhs - a - b) / std::max(lhs, 1e-300), 0.0, 1e-10));
    }
    return r;
}

// ---------------------------------------------------------------- dissipation chain

double cutoff_phi(double x1, double N) {
    const double s = std::clamp((std::fabs(x1) - N) / N, 0.0, 1.0);
    const double p2 = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    return std::sqrt(p2);
}

double cutoff_dphi(double x1, double N) {
    const double s = std::clamp((std::fabs(x1) - N) / N, 0.0, 1.0);
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double p2 = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    const double dp2 = 30.0 * s * s * (1.0 - s) * (1.0 - s) / N;
    return std::copysign(0.5 * dp2 / std::sqrt(p2), x1);
}

double sobolev_norm2(const Field& v0, int k) {
    Field v = v0;
    v.lo = v.hi = 0.0;
    double s = inner(v, v);
    Field cur = v;
    for (int j = 1; j <= k; ++j) {
        if (j % 2 == 1) {
            s += grad_norm2(cur);
        } else {
            cur = laplacian(cur);
            cur.lo = cur.hi = 0.0;
            s += inner(cur, cur);
        }
    }
    return s;
}

ChainTerms dissipation_chain_terms(const Field& v0, const OperatorContext& ctx, const ChainOptions& o) {
    Field v = v0;
    v.lo = v.hi = 0.0;
    const auto& g = v.grid;
    const std::size_t nt = g.nt();
    const double beta = ctx.P.beta;
    ChainTerms t;
    t.s = g.D / 2 + 1;
    const Field m = front_plus(ctx, v);
    t.I = dissipation(m, ctx.P, *ctx.K).total;
    const Field Bv = apply_B(ctx, v);
    const auto grads = gradient(Bv);
    for (std::size_t c = 0; c < grads.size(); ++c) {
        Field w = grads[c];
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) w.at(i, j) = ctx.sigma[i] * w.at(i, j) * w.at(i, j);
        const double val = integrate(w, Quadrature::cell);
        t.linear += val;
        if (c == 0) t.linear_x1 = val;
    }
    const Field vx = grad_axial(v);
    Field U2 = v;
    for (int i = 0; i < g.n1; ++i) {
        const double mb = ctx.mbar[i], s = 1.0 - mb * mb;
        for (std::size_t j = 0; j < nt; ++j) {
            const double x = v.at(i, j), dx = vx.at(i, j);
            const double mm = m.at(i, j);
            const double u = (2.0 * mb / (s * s)) * x * dx / beta +
                             (1.0 + 3.0 * mb * mb + 2.0 * mb * x) / (s * s * (1.0 - mm * mm)) * x * x *
                                 (dx + ctx.dmbar[i]) / beta;
            U2.at(i, j) = ctx.sigma[i] * u * u;
        }
    }
    t.U2 = integrate(U2, Quadrature::cell);
    t.G = o.eps * t.linear - t.U2 / o.eps;
    // ||phi_N w_x1||^2 for the transverse remainder.
    const Split sp = split_field(v);
    Field wx = grad_axial(sp.w);
    for (int i = 0; i < g.n1; ++i) {
        const double ph = cutoff_phi(g.x1(i) - ctx.a, o.N);
        for (std::size_t j = 0; j < nt; ++j) wx.at(i, j) = ph * ph * wx.at(i, j) * wx.at(i, j);
    }
    t.cutoff = integrate(wx, Quadrature::cell);
    t.sobolev = sobolev_norm2(v, t.s + 1);
    return t;
}

std::vector<CheckReport> check_dissipation_chain(const Field& v, const OperatorContext& ctx, const ChainOptions& o) {
    if (!(o.eps > 0.0 && o.eps < 1.0 / 3.0)) throw CheckError("epsilon must lie in (0, 1/3)");
    if (!(o.N >= 1.0)) throw CheckError("cut-off N must be at least 1");
    require_orthogonal(v, ctx);
    const ChainTerms t = dissipation_chain_terms(v, ctx, o);
    const std::string dg = digest_of({&v.v});
    std::ostringstream note;
    note << "I=" << format_double(t.I) << " linear=" << format_double(t.linear) << " G=" << format_double(t.G)
         << " U2=" << format_double(t.U2) << " cutoff=" << format_double(t.cutoff)
         << " sobolev=" << format_double(t.sobolev);
    std::vector<CheckReport> r;
    const double lhs = (1.0 - 3.0 * o.eps) * t.linear + t.G;
    r.push_back(make_report("dissipation_chain_lower", dg, lhs, t.I, 1e-6 * std::fabs(t.I), note.str()));
    if (t.sobolev <= o.eps0)
        r.push_back(make_report("dissipation_chain_G_positive", dg, 0.0, t.G, 0.0, note.str()));
    else
        r.push_back(make_report("dissipation_chain_G_positive", dg, 0.0, 0.0, 0.0,
                                "regime-unverified: ||v||_{W^{s+1,2}}^2 above budget; " + note.str()));
    return r;
}

// ---------------------------------------------------------------- ODE comparison

OdeBound ode_comparison_bound(double f0, double phi0, double A, double B, double t) {
    OdeBound b;
    b.q = A / (A + B);
    const double r = phi0 / f0 + (A + B) * t;
    const double base = std::pow(f0, 1.0 - b.q) * std::pow(phi0, b.q);
    b.f = base * std::pow(r, -b.q);
    b.phi = base * std::pow(r, 1.0 - b.q);
    return b;
}

OdePath rk4_comparison(double f0, double phi0, double A, double B, double T, double dt, double cA, double cB) {
    OdePath p;
    auto rhs = [&](double f, double ph, double& df, double& dph) {
        df = -cA * A * f * f / ph;
        dph = cB * B * f;
    };
    double f = f0, ph = phi0;
    const long n = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
    const double h = T / n;
    p.t.push_back(0.0);
    p.f.push_back(f);
    p.phi.push_back(ph);
    for (long k = 1; k <= n; ++k) {
        double a1, b1, a2, b2, a3, b3, a4, b4;
        rhs(f, ph, a1, b1);
        rhs(f + 0.5 * h * a1, ph + 0.5 * h * b1, a2, b2);
        rhs(f + 0.5 * h * a2, ph + 0.5 * h * b2, a3, b3);
        rhs(f + h * a3, ph + h * b3, a4, b4);
        f += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
        ph += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
        p.t.push_back(k * h);
        p.f.push_back(f);
        p.phi.push_back(ph);
    }
    return p;
}

std::vector<CheckReport> check_ode_path(const OdePath& p, double A, double B, double rel_slack) {
    double worst_f = -INFINITY, worst_phi = -INFINITY;
    double wf_lhs = 0, wf_rhs = 0, wp_lhs = 0, wp_rhs = 0;
    for (std::size_t k = 0; k < p.t.size(); ++k) {
        const OdeBound b = ode_comparison_bound(p.f[0], p.phi[0], A, B, p.t[k]);
        const double ef = (p.f[k] - b.f) / b.f, ep = (p.phi[k] - b.phi) / b.phi;
        if (ef > worst_f) {
            worst_f = ef;
            wf_lhs = p.f[k];
            wf_rhs = b.f;
        }
        if (ep > worst_phi) {
            worst_phi = ep;
            wp_lhs = p.phi[k];
            wp_rhs = b.phi;
        }
    }
    const std::string dg = digest_of({&p.f, &p.phi});
    const double q = A / (A + B);
    std::vector<CheckReport> r;
    r.push_back(make_report("ode_f_bound", dg, wf_lhs, wf_rhs, rel_slack * wf_rhs, "q=" + format_double(q)));
    r.push_back(make_report("ode_phi_bound", dg, wp_lhs, wp_rhs, rel_slack * wp_rhs, "q=" + format_double(q)));
    return r;
}

// ---------------------------------------------------------------- trajectories

std::vector<CheckReport> check_trajectory_inequalities(const TrajectoryLog& log, const ModelParams& P,
                                                       const TrajectoryCheckOptions& o,
                                                       TrajectoryCheckSummary* summary) {
    if (log.rows.size() < 5) throw CheckError("trajectory check needs at least five logged times");
    const auto t = log.column("t"), f = log.column("excess_F"), I = log.column("dissipation_I_total"),
               phi = log.column("phi");
    const auto df = time_derivative(t, f), dphi = time_derivative(t, phi);
    const std::string dg = digest_of({&t, &f, &I, &phi});
    const double k = (1.0 - P.sigma_beta) * (1.0 - P.sigma_beta);
    TrajectoryCheckSummary s;
    s.eps1 = o.eps1;
    if (s.eps1 <= 0.0) {
        std::vector<double> q;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (f[i] > 0.0) q.push_back(I[i] / f[i]);
        if (!q.empty()) {
            std::nth_element(q.begin(), q.begin() + q.size() / 2, q.end());
            s.eps1 = q[q.size() / 2];
        }
    }
    double bmax = 0.0, idw = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (f[i] > 0.0) bmax = std::max(bmax, dphi[i] / f[i]);
        const double e = std::fabs(df[i] + I[i]) / std::max(I[i], 1e-12);
        idw = std::max(idw, e);
        if (e > o.identity_tol) ++s.identity_fail;
        if (!(f[i] > 0.0) || !(I[i] <= s.eps1 * f[i])) continue;
        ++s.classified_first;
        const double bf = -9.0 * (1.0 - o.eps) * k * f[i] * f[i] / phi[i];
        const double bp = 4.0 * (1.0 + o.eps) * k * f[i];
        const bool okf = df[i] <= bf + 1e-6 * std::fabs(bf);
        const bool okp = dphi[i] <= bp + 1e-6 * std::fabs(bp);
        s.first_pass_f += okf;
        s.first_pass_phi += okp;
        s.first_pass_both += okf && okp;
    }
    s.B_measured = bmax * (1.0 + 1e-6);
    double worst_b = -INFINITY;
    for (std::size_t i = 0; i < t.size(); ++i) worst_b = std::max(worst_b, dphi[i] - s.B_measured * f[i]);
    if (summary) *summary = s;

    const double n = s.classified_first;
    auto frac = [&](int c) { return n > 0 ? c / n : 1.0; };
    std::ostringstream note;
    note << "eps1=" << format_double(s.eps1) << " classified=" << s.classified_first << "/" << t.size();
    std::vector<CheckReport> r;
    r.push_back(make_report("trajectory_first_regime_f", dg, o.min_fraction, frac(s.first_pass_f), 0.0, note.str()));
    r.push_back(
        make_report("trajectory_first_regime_phi", dg, o.min_fraction, frac(s.first_pass_phi), 0.0, note.str()));
    r.push_back(
        make_report("trajectory_first_regime_both", dg, o.min_fraction, frac(s.first_pass_both), 0.0, note.str()));
    r.push_back(make_report("trajectory_phi_B_bound", dg, std::isfinite(s.B_measured) ? worst_b : INFINITY, 0.0,
                            1e-12, "B_measured=" + format_double(s.B_measured)));
    r.push_back(make_report("trajectory_dissipation_identity", dg, idw, o.identity_tol, 0.0));
    return r;
}

std::vector<CheckReport> check_smoothing(const TrajectoryLog& log, const SmoothingOptions& o,
                                         SmoothingSummary* summary) {
    if (log.rows.size() < 3) throw CheckError("smoothing check needs at least three logged times");
    const auto t = log.column("t"), l2 = log.column("l2_v"), h1 = log.column("h1_v"), h2 = log.column("h2_v"),
               xm = log.column("x1_v0");
    const std::string dg = digest_of({&t, &l2, &h1, &h2, &xm});
    SmoothingSummary s;
    const double d1 = l2[0] * l2[0], d2 = h1[0] * h1[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < o.t_min || t[i] > o.horizon) continue;
        if (d1 > 0) s.C1 = std::max(s.C1, (h1[i] * h1[i] - d1 / (2.0 * t[i])) / d1);
        if (d2 > 0) s.C2 = std::max(s.C2, (h2[i] * h2[i] - d2 / (2.0 * t[i])) / d2);
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= o.fit_lo && t[i] <= o.fit_hi && h1[i] > 0) {
            lx.push_back(std::log(t[i]));
            ly.push_back(std::log(h1[i] * h1[i]));
        }
    if (lx.size() >= 3) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
            syy += (ly[i] - my) * (ly[i] - my);
        }
        s.p = -sxy / sxx;
        s.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    } else {
        s.p = NAN;
    }
    double mmax = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] <= o.horizon) mmax = std::max(mmax, xm[i] * xm[i]);
    s.moment_factor = xm[0] > 0 ? mmax / (xm[0] * xm[0]) : 1.0;
    if (summary) *summary = s;

    std::vector<CheckReport> r;
    r.push_back(make_report("smoothing_envelope_j1", dg, std::isfinite(s.C1) ? 0.0 : 1.0, 0.0, 0.0,
                            "C1=" + format_double(s.C1)));
    r.push_back(make_report("smoothing_envelope_j2", dg, std::isfinite(s.C2) ? 0.0 : 1.0, 0.0, 0.0,
                            "C2=" + format_double(s.C2)));
    const double mid = 0.5 * (o.p_lo + o.p_hi), half = 0.5 * (o.p_hi - o.p_lo);
    r.push_back(make_report("smoothing_gradient_rate", dg, std::isfinite(s.p) ? std::fabs(s.p - mid) : INFINITY,
                            half, 0.0, "p=" + format_double(s.p) + " r2=" + format_double(s.r2)));
    r.push_back(make_report("smoothing_moment_doubling", dg, mmax, 2.0 * xm[0] * xm[0], 0.0,
                            "factor=" + format_double(s.moment_factor)));
    return r;
}

// ---------------------------------------------------------------- suites

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> n = {"uncertainty", "interpolation", "sandwich", "operators",
                                               "dissipation_chain", "ode", "trajectory", "smoothing"};
    return n;
}

namespace {

struct Setup {
    ModelParams P;
    std::unique_ptr<Kernel> K;
    std::unique_ptr<FrontFamily> fam;
    OperatorContext ctx;
};

std::unique_ptr<Setup> make_setup(const SuiteConfig& c) {
    auto s = std::make_unique<Setup>();
    s->P = make_params(c.beta);
    s->K = std::make_unique<Kernel>(make_grid(c.D, c.X, c.n1, c.L, c.nperp), c.kernel);
    s->fam = std::make_unique<FrontFamily>(solve_instanton(s->P, *s->K));
    s->ctx = make_context(s->P, *s->K, *s->fam, 0.0);
    return s;
}

Field orthogonal_random(const Setup& s, Rng& rng, double norm) {
    Field v = random_smooth_field(s.ctx.grid, rng, 1.0);
    v = project_off(make_projection(s.ctx.dmbar, s.ctx.grid.h1), v);
    const double n = norm2(v, Quadrature::cell);
    for (double& x : v.v) x *= norm / n;
    return v;
}

}  // namespace

std::vector<CheckReport> run_suite(const std::string& name, const SuiteConfig& c) {
    std::vector<CheckReport> out;
    Rng rng(c.seed);
    if (name == "uncertainty") {
        const CylinderGrid g1 = make_grid(1, 16.0, 4097);
        Axial psi(g1.n1);
        for (int i = 0; i < g1.n1; ++i) psi[i] = g1.x1(i) * std::exp(-0.5 * g1.x1(i) * g1.x1(i));
        auto r = check_uncertainty(g1, psi, Constraint::mean_zero);
        r.name = "uncertainty_extremal";
        r.note = "ratio=" + format_double(uncertainty_ratio(r));
        out.push_back(r);
        for (int k = 0; k < c.samples; ++k) {
            const Constraint con = k % 2 == 0 ? Constraint::mean_zero : Constraint::vanishes_at_0;
            const Axial p = random_constrained_psi(g1, rng, con);
            auto q = check_uncertainty(g1, p, con);
            q.note = "ratio=" + format_double(uncertainty_ratio(q));
            out.push_back(q);
        }
    } else if (name == "interpolation") {
        const CylinderGrid g = make_grid(c.D, c.X, c.n1, c.L, c.nperp);
        for (double lam : {1.0, 2.0, 4.0, 8.0}) {
            Field w(g, 0.0);
            for (int i = 0; i < g.n1; ++i)
                for (std::size_t j = 0; j < g.nt(); ++j) {
                    const double x = g.x1(i) / lam;
                    w.at(i, j) = std::exp(-0.5 * x * x);
                }
            auto r = check_l1_interpolation(w, c.delta);
            r.note += " lambda=" + format_double(lam);
            out.push_back(r);
        }
        for (int k = 0; k < c.samples; ++k) out.push_back(check_l1_interpolation(random_smooth_field(g, rng, 1.0), c.delta));
    } else if (name == "sandwich") {
        auto s = make_setup(c);
        SandwichOptions o;
        o.gamma = spectral_gap(s->ctx).gamma;
        for (int k = 0; k < c.samples; ++k) {
            const Field v = orthogonal_random(*s, rng, 1e-3);
            for (auto& r : check_sandwich(v, s->ctx, o)) out.push_back(r);
        }
    } else if (name == "operators") {
        auto s = make_setup(c);
        for (int k = 0; k < c.samples; ++k) {
            const Field v = random_smooth_field(s->ctx.grid, rng, 1.0);
            for (Rho rho : {Rho::J, Rho::Jbar, Rho::smearing}) out.push_back(check_smoother_defect(v, s->ctx, rho));
        }
        for (int k = 0; k < std::min(c.samples, 10); ++k) {
            const Field v = orthogonal_random(*s, rng, 1.0);
            for (auto& r : check_operator_approx(v, s->ctx)) out.push_back(r);
            for (auto& r : check_identities(v, s->ctx)) out.push_back(r);
        }
        for (auto& r : check_operator_family(s->ctx, {0.5, 1.0, 2.0, 4.0})) out.push_back(r);
    } else if (name == "dissipation_chain") {
        auto s = make_setup(c);
        ChainOptions o;
        o.eps = c.chain_eps;
        o.N = c.N_cutoff;
        o.eps0 = c.eps0;
        for (int k = 0; k < c.samples; ++k) {
            Field v = orthogonal_random(*s, rng, 1e-3);
            // Every other sample is scaled into the small-norm regime.
            if (k % 2 == 1) {
                const double f = std::sqrt(0.5 * o.eps0 / sobolev_norm2(v, s->ctx.grid.D / 2 + 2));
                for (double& x : v.v) x *= f;
            }
            for (auto& r : check_dissipation_chain(v, s->ctx, o)) out.push_back(r);
        }
    } else if (name == "ode") {
        const double A = 4.5, B = 2.0;
        for (auto [f0, p0] : {std::pair{1.0, 1.0}, {1.0, 10.0}, {0.1, 2.0}, {5.0, 1.5}}) {
            for (auto& r : check_ode_path(rk4_comparison(f0, p0, A, B, 100.0, 1e-3), A, B)) out.push_back(r);
            // Strict inequalities: faster decay and slower growth stay below too.
            for (auto& r : check_ode_path(rk4_comparison(f0, p0, A, B, 100.0, 1e-3, 1.3, 0.7), A, B)) {
                r.name += "_strict";
                out.push_back(r);
            }
        }
        const CylinderGrid g = make_grid(1, 20.0, 401);
        Field u(g, 0.0);
        for (int i = 0; i < g.n1; ++i) u.v[i] = g.x1(i) * std::exp(-0.5 * g.x1(i) * g.x1(i));
        IntegratorConfig ic;
        ic.t_end = 20.0;
        ic.output_every = 0.05;
        const HeatLog h = heat_reference_run(u, ic);
        double worst = -INFINITY, wl = 0, wr = 0;
        for (std::size_t k = 0; k < h.t.size(); ++k) {
            const double b = ode_comparison_bound(h.f[0], h.phi[0], A, B, h.t[k]).f;
            if ((h.f[k] - b) / b > worst) {
                worst = (h.f[k] - b) / b;
                wl = h.f[k];
                wr = b;
            }
        }
        out.push_back(make_report("heat_reference_f_bound", digest_of({&h.f, &h.phi}), wl, wr, 1e-9 * wr,
                                  "q=" + format_double(A / (A + B))));
    } else if (name == "trajectory" || name == "smoothing") {
        TrajectoryLog log;
        ModelParams P = make_params(c.beta);
        if (!c.trajectory_csv.empty()) {
            log = TrajectoryLog::read(c.trajectory_csv);
        } else {
            // Short D = 1 relaxation from a small bump.
            const CylinderGrid g = make_grid(1, 20.0, 1024);
            Kernel K(g, c.kernel);
            FrontFamily fam(solve_instanton(P, K));
            Field m = shifted_front(fam, 0.0, K.grid());
            const double amp = name == "trajectory" ? 0.02 : -0.1;
            for (int i = 0; i < g.n1; ++i) {
                const double x = g.x1(i) - 2.5;
                m.v[i] += name == "trajectory" ? amp * std::exp(-0.5 * x * x) : (std::fabs(x) < 0.5 ? amp : 0.0);
            }
            IntegratorConfig ic;
            ic.t_end = name == "trajectory" ? 5.0 : 1.0;
            ic.output_every = name == "trajectory" ? 0.01 : 1e-3;
            log = simulate(m, ic, P, K, fam);
        }
        if (name == "trajectory") {
            TrajectoryCheckOptions o;
            o.eps = c.eps;
            o.eps1 = c.eps1;
            out = check_trajectory_inequalities(log, P, o);
        } else {
            out = check_smoothing(log, SmoothingOptions{});
        }
    } else {
        throw CheckError("unknown suite: " + name);
    }
    return out;
}

}  // namespace kf
