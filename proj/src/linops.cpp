#include "kfront/linops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <thread>

#include "kfront/numeric.hpp"

namespace kf {

OperatorContext make_context(const ModelParams& P, const Kernel& K, const FrontFamily& fam, double a) {
    OperatorContext c;
    c.P = P;
    c.K = &K;
    c.fam = &fam;
    c.grid = K.grid();
    c.a = a;
    c.mbar = fam.values(a);
    c.dmbar = fam.derivative(a);
    const int n = c.grid.n1;
    c.weight.resize(n);
    c.g.resize(n);
    c.gtilde.resize(n);
    c.sigma.resize(n);
    const double wb = 1.0 / P.sigma_beta;
    for (int i = 0; i < n; ++i) {
        const double m = c.mbar[i], s = 1.0 - m * m;
        c.sigma[i] = P.beta * s;
        c.weight[i] = 1.0 / (P.beta * s);
        c.g[i] = 2.0 * m * c.dmbar[i] / (P.beta * s * s);
        c.gtilde[i] = c.weight[i] - wb;
    }
    return c;
}

static void check_grid(const OperatorContext& ctx, const Field& v) {
    if (!v.grid.same_shape(ctx.grid)) throw OperatorError("field grid does not match operator context");
}

Field apply_B(const OperatorContext& ctx, const Field& v) {
    check_grid(ctx, v);
    Field out = ctx.K->convolve(v);
    const std::size_t nt = v.grid.nt();
    for (int i = 0; i < v.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) out.at(i, j) = ctx.weight[i] * v.at(i, j) - out.at(i, j);
    out.lo = v.lo / ctx.P.sigma_beta - v.lo;
    out.hi = v.hi / ctx.P.sigma_beta - v.hi;
    return out;
}

Axial apply_A(const OperatorContext& ctx, const Axial& v1) {
    if (static_cast<int>(v1.size()) != ctx.grid.n1) throw OperatorError("axial field length mismatch");
    Axial out = ctx.K->convolve_bar(v1, 0.0, 0.0);
    for (std::size_t i = 0; i < v1.size(); ++i) out[i] = ctx.weight[i] * v1[i] - out[i];
    return out;
}

Field apply_D(const OperatorContext& ctx, const Field& v) {
    check_grid(ctx, v);
    Field out = ctx.K->convolve(v);
    const double w = 1.0 / ctx.P.sigma_beta;
    for (std::size_t k = 0; k < v.size(); ++k) out.v[k] = w * v.v[k] - out.v[k];
    out.lo = w * v.lo - v.lo;
    out.hi = w * v.hi - v.hi;
    return out;
}

Field apply_Cmom(const OperatorContext& ctx, const Field& w) {
    check_grid(ctx, w);
    return ctx.K->convolve_moment(w);
}

namespace {

// S weights at lattice offsets -(n-1)..(n-1), unit sum.
std::vector<double> smearing_weights(const OperatorContext& ctx) {
    const int n = ctx.grid.n1;
    const double h = ctx.grid.h1;
    std::vector<double> s(2 * n - 1);
    CompensatedSum tot;
    for (int k = -(n - 1); k <= n - 1; ++k) {
        s[k + n - 1] = ctx.fam->derivative_at(k * h) * h;
        tot.add(s[k + n - 1]);
    }
    const double t = tot.value();
    for (double& x : s) x /= t;
    return s;
}

}  // namespace

Axial apply_S(const OperatorContext& ctx, const Axial& v1) {
    const int n = ctx.grid.n1;
    if (static_cast<int>(v1.size()) != n) throw OperatorError("axial field length mismatch");
    const auto s = smearing_weights(ctx);
    Axial out(n);
    for (int i = 0; i < n; ++i) {
        CompensatedSum acc;
        for (int j = 0; j < n; ++j) acc.add(s[i - j + n - 1] * v1[j]);
        out[i] = acc.value();
    }
    return out;
}

double apply_S_at(const OperatorContext& ctx, const Axial& v1, double x) {
    const int n = ctx.grid.n1;
    const double h = ctx.grid.h1;
    // Same normalization as the lattice weights.
    const auto s = smearing_weights(ctx);
    CompensatedSum tot;
    for (int k = -(n - 1); k <= n - 1; ++k) tot.add(ctx.fam->derivative_at(k * h) * h);
    const double norm = tot.value();
    CompensatedSum acc;
    for (int j = 0; j < n; ++j) acc.add(ctx.fam->derivative_at(x - ctx.grid.x1(j)) * h / norm * v1[j]);
    return acc.value();
}

double smearing_abs_moment(const OperatorContext& ctx) {
    const int n = ctx.grid.n1;
    const auto s = smearing_weights(ctx);
    CompensatedSum m;
    for (int k = -(n - 1); k <= n - 1; ++k) m.add(std::fabs(k * ctx.grid.h1) * s[k + n - 1]);
    return m.value();
}

ProjectionSpec make_projection(const Axial& dir, double h1) {
    ProjectionSpec s;
    s.dir = dir;
    s.h1 = h1;
    Axial sq(dir.size());
    for (std::size_t i = 0; i < dir.size(); ++i) sq[i] = dir[i] * dir[i];
    s.norm2 = integrate_axial(sq, h1);
    if (!(s.norm2 > 0)) throw OperatorError("projection direction has zero norm");
    return s;
}

Axial project_off(const ProjectionSpec& s, const Axial& f) {
    Axial prod(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) prod[i] = f[i] * s.dir[i];
    const double c = integrate_axial(prod, s.h1) / s.norm2;
    Axial out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] - c * s.dir[i];
    return out;
}

Field project_off(const ProjectionSpec& s, const Field& f) {
    // Only the transverse mean sees an axial direction.
    const Axial mean = transverse_mean(f);
    Axial prod(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) prod[i] = mean[i] * s.dir[i];
    const double c = integrate_axial(prod, s.h1) / s.norm2;
    Field out = f;
    const std::size_t nt = f.grid.nt();
    for (int i = 0; i < f.grid.n1; ++i)
        for (std::size_t j = 0; j < nt; ++j) out.at(i, j) -= c * s.dir[i];
    return out;
}

// ---------------------------------------------------------------- gap

namespace {

// Axial symbol of J for transverse mode (k2, k3).
std::vector<double> block_symbol(const Stencil& S, const CylinderGrid& g, int k2, int k3) {
    std::vector<double> sym(2 * S.P + 1, 0.0);
    const int n = g.nperp;
    for (int o = -S.P; o <= S.P; ++o) {
        CompensatedSum acc;
        for (std::size_t t = 0; t < S.nt; ++t) {
            double ph = 0.0;
            if (g.D == 2) ph = 2.0 * M_PI * k2 * static_cast<double>(t) / n;
            if (g.D == 3) ph = 2.0 * M_PI * (k2 * static_cast<double>(t / n) + k3 * static_cast<double>(t % n)) / n;
            acc.add(S(o, t) * std::cos(ph));
        }
        sym[o + S.P] = acc.value();
    }
    for (int o = 1; o <= S.P; ++o) {
        const double m = 0.5 * (sym[o + S.P] + sym[-o + S.P]);
        sym[o + S.P] = sym[-o + S.P] = m;
    }
    return sym;
}

Eigen::MatrixXd block_matrix(const OperatorContext& ctx, const std::vector<double>& sym, int P) {
    const int n = ctx.grid.n1;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        M(i, i) += ctx.weight[i];
        for (int o = -P; o <= P; ++o) {
            const int j = i - o;
            if (j >= 0 && j < n) M(i, j) -= sym[o + P];
        }
    }
    return M;
}

}  // namespace

GapReport spectral_gap(const OperatorContext& ctx) {
    const auto& g = ctx.grid;
    const Stencil& S = ctx.K->J();
    GapReport rep;
    rep.beta = ctx.P.beta;
    rep.L = g.L;
    rep.D = g.D;
    rep.n1 = g.n1;

    std::vector<std::pair<int, int>> modes;
    const int half = g.D == 1 ? 0 : g.nperp / 2;
    for (int k2 = 0; k2 <= half; ++k2)
        for (int k3 = (g.D == 3 ? k2 : 0); k3 <= (g.D == 3 ? half : 0); ++k3) modes.push_back({k2, k3});
    // In D = 3 the pair (k2, k3) and (k3, k2) have the same symbol; keep k2 <= k3.

    const int n = g.n1;
    Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(ctx.dmbar.data(), n);
    u.normalize();

    rep.blocks.resize(modes.size());
    std::vector<int> failed(modes.size(), 0);
    auto work = [&](std::size_t b) {
        const auto [k2, k3] = modes[b];
        const auto sym = block_symbol(S, g, k2, k3);
        Eigen::MatrixXd M = block_matrix(ctx, sym, S.P);
        if (b == 0) {
            Eigen::MatrixXd Pm = Eigen::MatrixXd::Identity(n, n) - u * u.transpose();
            const double c = 2.0 * (M.diagonal().maxCoeff() + 1.0);
            M = Pm * M * Pm + c * u * u.transpose();
            M = 0.5 * (M + M.transpose());
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) {
            failed[b] = 1;
            return;
        }
        rep.blocks[b] = {k2, k3, es.eigenvalues()(0)};
    };
    const int T = std::min<int>(worker_threads(), static_cast<int>(modes.size()));
    if (T <= 1) {
        for (std::size_t b = 0; b < modes.size(); ++b) work(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < T; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t b = t; b < modes.size(); b += T) work(b);
            });
        for (auto& th : pool) th.join();
    }
    for (int f : failed)
        if (f) throw EigenError("symmetric eigensolver failed");

    std::size_t best = 0;
    for (std::size_t b = 1; b < rep.blocks.size(); ++b)
        if (rep.blocks[b].lambda_min < rep.blocks[best].lambda_min) best = b;
    rep.gamma = rep.blocks[best].lambda_min;
    rep.k2 = rep.blocks[best].k2;
    rep.k3 = rep.blocks[best].k3;
    rep.gamma0 = rep.blocks[0].lambda_min;

    // Unprojected k = 0 block: zero mode and its alignment with m_bar'.
    {
        Eigen::MatrixXd M = block_matrix(ctx, block_symbol(S, g, 0, 0), S.P);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        if (es.info() != Eigen::Success) throw EigenError("symmetric eigensolver failed");
        rep.zero_mode = es.eigenvalues()(0);
        rep.zero_corr = std::fabs(es.eigenvectors().col(0).dot(u));
    }
    {
        const auto [k2, k3] = modes[best];
        Eigen::MatrixXd M = block_matrix(ctx, block_symbol(S, g, k2, k3), S.P);
        if (best == 0) {
            Eigen::MatrixXd Pm = Eigen::MatrixXd::Identity(n, n) - u * u.transpose();
            const double c = 2.0 * (M.diagonal().maxCoeff() + 1.0);
            M = Pm * M * Pm + c * u * u.transpose();
            M = 0.5 * (M + M.transpose());
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        if (es.info() != Eigen::Success) throw EigenError("symmetric eigensolver failed");
        rep.eigvec.assign(es.eigenvectors().col(0).data(), es.eigenvectors().col(0).data() + n);
    }
    return rep;
}

double alpha_tilde(const ModelParams& P) {
    if (P.beta == 1.0) return 0.0;
    const double mb = equilibrium_magnetization(P.beta);
    return 1.0 / (P.beta * (1.0 - mb * mb)) - 1.0;
}

}  // namespace kf
