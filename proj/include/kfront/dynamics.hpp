#pragma once
// Time integration of dm/dt = div(grad m - beta (1 - m^2) grad J*m) in flux
// form, and the heat reference flow.

#include <functional>

#include "kfront/instanton.hpp"

namespace kf {

enum class Scheme { explicit_rk2, imex };

struct IntegratorConfig {
    Scheme scheme = Scheme::explicit_rk2;
    double dt = 0.0;       // 0 selects the default for the scheme
    double safety = 0.2;   // default dt = safety * hmin^2, capped below the stability limit
    double t_end = 1.0;
    double output_every = 0.0;  // 0 logs every step
};

struct SimState {
    double t = 0.0;
    Field m;
    long steps = 0;
    long overshoots = 0;  // values clamped back into [-1, 1]
};

struct CflError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BlowupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Largest stable explicit step for the diffusive part: 1 / (2 sum_k 1/h_k^2).
double explicit_limit(const CylinderGrid& g);
double default_dt(const CylinderGrid& g, const IntegratorConfig& cfg);

// Faces beyond the axial ends carry no flux, so sum(rhs) = 0 exactly.
Field rhs(const Field& m, const ModelParams& P, const Kernel& K);
// Diffusive part alone, same faces.
Field noflux_laplacian(const Field& u);

class Integrator {
public:
    Integrator(const ModelParams& P, const Kernel& K, IntegratorConfig cfg);
    ~Integrator();
    Integrator(const Integrator&) = delete;
    Integrator& operator=(const Integrator&) = delete;

    double dt() const { return dt_; }
    const IntegratorConfig& config() const { return cfg_; }
    // Advances by dt (or by h when given).
    SimState step(const SimState& s, double h = 0.0) const;

private:
    Field solve_implicit(const Field& r, double c) const;
    void finish(SimState& s, Field&& m) const;

    ModelParams P_;
    const Kernel* K_;
    IntegratorConfig cfg_;
    double dt_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

SimState step(const SimState& s, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K);

using Observer = std::function<void(const SimState&)>;

// Calls obs at t = 0, every output_every and at t_end. The last step is
// shortened so the run ends exactly at t_end.
SimState run(const Field& initial, const IntegratorConfig& cfg, const ModelParams& P, const Kernel& K,
             const Observer& obs = {});

// Cell-quadrature mass of m - m_bar_{a_ref}.
double conserved_mass_defect(const Field& m, const FrontFamily& fam, double a_ref);

struct HeatLog {
    std::vector<double> t, f, phi;  // f = ||u||^2, phi = int x1^2 u^2 + 1
};

// du/dt = Laplacian u with no-flux axial ends, explicit RK2.
HeatLog heat_reference_run(const Field& u0, const IntegratorConfig& cfg);

}  // namespace kf
