#include "kfront/dynamics.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>

#include "kfront/numeric.hpp"

namespace kf {

namespace {

// Neighbour of transverse index j one step up in transverse direction k.
std::size_t tnext(const CylinderGrid& g, std::size_t j, int k) {
    const int n = g.nperp;
    if (g.D == 2) return (j + 1) % n;
    int j2 = static_cast<int>(j) / n, j3 = static_cast<int>(j) % n;
    if (k == 0)
        j2 = (j2 + 1) % n;
    else
        j3 = (j3 + 1) % n;
    return static_cast<std::size_t>(j2 * n + j3);
}

// Accumulates div q for face fluxes q(a, b, ca, cb, h) over all faces.
template <class Flux>
Field face_divergence(const Field& m, const Field* c, Flux q) {
    const auto& g = m.grid;
    const std::size_t nt = g.nt();
    Field out(g, 0.0, 0.0, 0.0);
    for (int i = 0; i + 1 < g.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            const double f =
                q(m.at(i, j), m.at(i + 1, j), c ? c->at(i, j) : 0.0, c ? c->at(i + 1, j) : 0.0, g.h1) / g.h1;
            out.at(i, j) += f;
            out.at(i + 1, j) -= f;
        }
    for (int k = 0; k < g.d(); ++k)
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < nt; ++j) {
                const std::size_t jn = tnext(g, j, k);
                const double f =
                    q(m.at(i, j), m.at(i, jn), c ? c->at(i, j) : 0.0, c ? c->at(i, jn) : 0.0, g.hp) / g.hp;
                out.at(i, j) += f;
                out.at(i, jn) -= f;
            }
    return out;
}

bool all_finite(const Field& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

double explicit_limit(const CylinderGrid& g) {
    double s = 1.0 / (g.h1 * g.h1);
    if (g.D > 1) s += g.d() / (g.hp * g.hp);
    return 1.0 / (2.0 * s);
}

double default_dt(const CylinderGrid& g, const IntegratorConfig& cfg) {
    if (cfg.dt > 0.0) return cfg.dt;
    const double h = g.hmin();
    return std::min(cfg.safety * h * h, 0.9 * explicit_limit(g));
}

Field rhs(const Field& m, const ModelParams& P, const Kernel& K) {
    const Field c = K.convolve(m);
    Field out = face_divergence(m, &c, [&](double a, double b, double ca, double cb, double h) {
        return ((b - a) - face_mobility(a, b, P.beta) * (cb - ca)) / h;
    });
    if (!all_finite(out)) throw NanError("non-finite flux");
    return out;
}

Field noflux_laplacian(const Field& u) {
    return face_divergence(u, nullptr, [](double a, double b, double, double, double h) { return (b - a) / h; });
}

// ---------------------------------------------------------------- integrator

struct Integrator::Plans {
    int ntc = 0;
    double* rin = nullptr;
    fftw_complex* cout = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;
    std::vector<double> lambda;  // transverse Laplacian symbol per complex mode
    ~Plans() {
        std::lock_guard<std::mutex> lk(fftw_planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        fftw_free(rin);
        fftw_free(cout);
    }
};

Integrator::Integrator(const ModelParams& P, const Kernel& K, IntegratorConfig cfg)
    : P_(P), K_(&K), cfg_(cfg), dt_(default_dt(K.grid(), cfg)) {
    const auto& g = K.grid();
    if (!(dt_ > 0.0)) throw CflError("time step must be positive");
    if (cfg_.scheme == Scheme::explicit_rk2 && dt_ > explicit_limit(g))
        throw CflError("explicit step " + std::to_string(dt_) + " exceeds stability limit " +
                       std::to_string(explicit_limit(g)));
    if (cfg_.scheme == Scheme::imex && g.D > 1) {
        plans_ = std::make_unique<Plans>();
        const int n = g.nperp;
        const int d = g.d();
        plans_->ntc = (d == 1 ? 1 : n) * (n / 2 + 1);
        const int nt = static_cast<int>(g.nt());
        plans_->rin = fftw_alloc_real(static_cast<std::size_t>(g.n1) * nt);
        plans_->cout = fftw_alloc_complex(static_cast<std::size_t>(g.n1) * plans_->ntc);
        int dims[2] = {n, n};
        {
            std::lock_guard<std::mutex> lk(fftw_planner_mutex());
            plans_->fwd = fftw_plan_many_dft_r2c(d, dims, g.n1, plans_->rin, nullptr, 1, nt, plans_->cout, nullptr, 1,
                                                 plans_->ntc, FFTW_ESTIMATE);
            plans_->bwd = fftw_plan_many_dft_c2r(d, dims, g.n1, plans_->cout, nullptr, 1, plans_->ntc, plans_->rin,
                                                 nullptr, 1, nt, FFTW_ESTIMATE);
        }
        plans_->lambda.resize(plans_->ntc);
        const int nc = n / 2 + 1;
        auto s2 = [&](int k) {
            const double s = std::sin(M_PI * k / n);
            return 4.0 * s * s / (g.hp * g.hp);
        };
        for (int c = 0; c < plans_->ntc; ++c)
            plans_->lambda[c] = d == 1 ? -s2(c) : -(s2(c / nc) + s2(c % nc));
    }
}

Integrator::~Integrator() = default;

// (I - c L) U = r with L the no-flux Laplacian.
Field Integrator::solve_implicit(const Field& r, double c) const {
    const auto& g = r.grid;
    const int n1 = g.n1;
    const double off = -c / (g.h1 * g.h1);
    // Thomas algorithm for the axial tridiagonal system with diagonal shift s.
    auto thomas = [&](double s, auto get, auto put) {
        std::vector<double> cp(n1), dp(n1);
        for (int i = 0; i < n1; ++i) {
            const double nb = (i == 0 || i == n1 - 1) ? 1.0 : 2.0;
            const double diag = 1.0 - nb * off + s;
            const double lower = i > 0 ? off : 0.0;
            const double den = diag - lower * (i > 0 ? cp[i - 1] : 0.0);
            cp[i] = off / den;
            dp[i] = (get(i) - lower * (i > 0 ? dp[i - 1] : 0.0)) / den;
        }
        for (int i = n1 - 1; i >= 0; --i) {
            const double x = dp[i] - (i + 1 < n1 ? cp[i] * dp[i + 1] : 0.0);
            dp[i] = x;
            put(i, x);
        }
    };
    Field out(g, 0.0, r.lo, r.hi);
    if (g.D == 1) {
        thomas(0.0, [&](int i) { return r.v[i]; }, [&](int i, double x) { out.v[i] = x; });
        return out;
    }
    auto& pl = *plans_;
    std::copy(r.v.begin(), r.v.end(), pl.rin);
    fftw_execute(pl.fwd);
    for (int k = 0; k < pl.ntc; ++k) {
        const double s = -c * pl.lambda[k];
        for (int part = 0; part < 2; ++part)
            thomas(
                s, [&](int i) { return pl.cout[static_cast<std::size_t>(i) * pl.ntc + k][part]; },
                [&](int i, double x) { pl.cout[static_cast<std::size_t>(i) * pl.ntc + k][part] = x; });
    }
    fftw_execute(pl.bwd);
    const double inv = 1.0 / static_cast<double>(g.nt());
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] = pl.rin[k] * inv;
    return out;
}

void Integrator::finish(SimState& s, Field&& m) const {
    if (!all_finite(m)) throw NanError("non-finite values after step at t = " + std::to_string(s.t));
    for (double& x : m.v) {
        const double ax = std::fabs(x);
        if (ax > 1.0 + 1e-6) throw BlowupError("|m| exceeded 1 + 1e-6 at t = " + std::to_string(s.t));
        if (ax > 1.0) {
            x = std::copysign(1.0, x);
            ++s.overshoots;
        }
    }
    s.m = std::move(m);
}

SimState Integrator::step(const SimState& s, double h) const {
    if (h <= 0.0) h = dt_;
    const Field& u = s.m;
    SimState o = s;
    if (cfg_.scheme == Scheme::explicit_rk2) {
        if (h > explicit_limit(u.grid)) throw CflError("explicit step exceeds stability limit");
        const Field k1 = rhs(u, P_, *K_);
        Field u1 = u;
        for (std::size_t k = 0; k < u.size(); ++k) u1.v[k] += h * k1.v[k];
        const Field k2 = rhs(u1, P_, *K_);
        Field next = u;
        for (std::size_t k = 0; k < u.size(); ++k) next.v[k] += 0.5 * h * (k1.v[k] + k2.v[k]);
        finish(o, std::move(next));
    } else {
        // ARS(2,2,2): implicit no-flux Laplacian, explicit nonlocal part.
        const double gam = 1.0 - 1.0 / std::sqrt(2.0);
        const double del = 1.0 - 1.0 / (2.0 * gam);
        auto nonlocal = [&](const Field& w, const Field& Lw) {
            Field r = rhs(w, P_, *K_);
            for (std::size_t k = 0; k < r.size(); ++k) r.v[k] -= Lw.v[k];
            return r;
        };
        const Field Lu = noflux_laplacian(u);
        const Field N1 = nonlocal(u, Lu);
        Field r2 = u;
        for (std::size_t k = 0; k < u.size(); ++k) r2.v[k] += h * gam * N1.v[k];
        const Field U2 = solve_implicit(r2, gam * h);
        const Field LU2 = noflux_laplacian(U2);
        const Field N2 = nonlocal(U2, LU2);
        Field r3 = u;
        for (std::size_t k = 0; k < u.size(); ++k)
            r3.v[k] += h * (del * N1.v[k] + (1.0 - del) * N2.v[k] + (1.0 - gam) * LU2.v[k]);
        finish(o, solve_implicit(r3, gam * h));
    }
    o.t = s.t + h;
    ++o.steps;
    return o;
}

SimState step(const SimState& s, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K) {
    return Integrator(P, K, cfg).step(s);
}

SimState run(const Field& initial, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K,
             const Observer& obs) {
    if (!initial.grid.same_shape(K.grid())) throw GridError("initial field grid does not match the kernel grid");
    Integrator it(P, K, cfg);
    SimState s;
    s.m = initial;
    if (obs) obs(s);
    if (!(cfg.t_end > 0.0)) return s;
    const long n = std::max(1L, static_cast<long>(std::ceil(cfg.t_end / it.dt() - 1e-9)));
    const double h = cfg.t_end / static_cast<double>(n);
    const long stride = cfg.output_every > 0.0 ? std::max(1L, std::lround(cfg.output_every / h)) : 1L;
    for (long k = 1; k <= n; ++k) {
        s = it.step(s, h);
        s.t = k * h;
        if (obs && (k % stride == 0 || k == n)) obs(s);
    }
    return s;
}

double conserved_mass_defect(const Field& m, const FrontFamily& fam, double a_ref) {
    const Axial ref = fam.values(a_ref);
    Field d = m;
    const std::size_t nt = m.grid.nt();
    for (int i = 0; i < m.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) d.at(i, j) -= ref[i];
    return integrate(d, Quadrature::cell);
}

HeatLog heat_reference_run(const Field& u0, const IntegratorConfig& cfg) {
    const auto& g = u0.grid;
    double dt = cfg.dt > 0.0 ? cfg.dt : std::min(cfg.safety * g.hmin() * g.hmin(), 0.9 * explicit_limit(g));
    if (dt > explicit_limit(g)) throw CflError("explicit step exceeds stability limit");
    HeatLog log;
    Field xs(g, 0.0);
    for (int i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.nt(); ++j) xs.at(i, j) = g.x1(i) * g.x1(i);
    auto record = [&](double t, const Field& u) {
        Field w = u;
        for (std::size_t k = 0; k < u.size(); ++k) w.v[k] = xs.v[k] * u.v[k] * u.v[k];
        log.t.push_back(t);
        log.f.push_back(inner(u, u, Quadrature::cell));
        log.phi.push_back(integrate(w, Quadrature::cell) + 1.0);
    };
    Field u = u0;
    u.lo = u.hi = 0.0;
    record(0.0, u);
    if (!(cfg.t_end > 0.0)) return log;
    const long n = std::max(1L, static_cast<long>(std::ceil(cfg.t_end / dt - 1e-9)));
    const double h = cfg.t_end / static_cast<double>(n);
    const long stride = cfg.output_every > 0.0 ? std::max(1L, std::lround(cfg.output_every / h)) : 1L;
    for (long k = 1; k <= n; ++k) {
        const Field k1 = noflux_laplacian(u);
        Field u1 = u;
        for (std::size_t q = 0; q < u.size(); ++q) u1.v[q] += h * k1.v[q];
        const Field k2 = noflux_laplacian(u1);
        for (std::size_t q = 0; q < u.size(); ++q) u.v[q] += 0.5 * h * (k1.v[q] + k2.v[q]);
        if (!all_finite(u)) throw NanError("non-finite values in heat run");
        if (k % stride == 0 || k == n) record(k * h, u);
    }
    return log;
}

}  // namespace kf
