#pragma once
// Linearization at a front: B, A, D, C, S, projections and the spectral gap.

#include "kfront/instanton.hpp"

namespace kf {

// The kernel and family must outlive the context.
struct OperatorContext {
    ModelParams P;
    const Kernel* K = nullptr;
    const FrontFamily* fam = nullptr;
    CylinderGrid grid;
    double a = 0.0;
    Axial mbar;    // m_bar_a
    Axial dmbar;   // m_bar_a', cached centered differences shifted to a
    Axial weight;  // 1 / (beta (1 - m_bar^2))
    Axial g;       // (1 / sigma(m_bar))'
    Axial gtilde;  // weight - 1 / sigma(m_beta)
    Axial sigma;   // sigma(m_bar)
};

OperatorContext make_context(const ModelParams& P, const Kernel& K, const FrontFamily& fam, double a);

struct OperatorError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

Field apply_B(const OperatorContext& ctx, const Field& v);
Axial apply_A(const OperatorContext& ctx, const Axial& v1);
Field apply_D(const OperatorContext& ctx, const Field& v);
Field apply_Cmom(const OperatorContext& ctx, const Field& w);

// Smearing by m_bar_0' / (2 m_beta); lattice weights renormalized to unit sum.
Axial apply_S(const OperatorContext& ctx, const Axial& v1);
double apply_S_at(const OperatorContext& ctx, const Axial& v1, double x);
double smearing_abs_moment(const OperatorContext& ctx);  // sum |y| of the S weights

struct ProjectionSpec {
    Axial dir;
    double norm2 = 0.0;  // axial inner product with trapezoid weights
    double h1 = 0.0;
};

ProjectionSpec make_projection(const Axial& dir, double h1);
Axial project_off(const ProjectionSpec& s, const Axial& f);
Field project_off(const ProjectionSpec& s, const Field& f);

struct GapBlock {
    int k2 = 0, k3 = 0;
    double lambda_min = 0.0;
};

struct GapReport {
    double beta = 0, L = 0;
    int D = 1, n1 = 0;
    double gamma = 0.0;      // min over blocks, k = 0 restricted to the complement of m_bar'
    int k2 = 0, k3 = 0;      // minimizing block
    Axial eigvec;            // eigenvector of the minimizing block
    double gamma0 = 0.0;     // k = 0 complement
    double zero_mode = 0.0;  // smallest eigenvalue of the k = 0 block
    double zero_corr = 0.0;  // |cos| between its eigenvector and m_bar'
    std::vector<GapBlock> blocks;
};

struct EigenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

GapReport spectral_gap(const OperatorContext& ctx);

double alpha_tilde(const ModelParams& P);

}  // namespace kf
