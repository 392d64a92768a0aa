#pragma once
// Run configuration, checkpoints and initial conditions for the command-line driver.

#include <cstdint>
#include <string>
#include <vector>

#include "kfront/theorems.hpp"

namespace kf {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    struct Domain {
        int D = 1;
        double X = 20.0;
        int n1 = 2048;
        double L = 1.0;
        int nperp = 1;
    } domain;
    struct Model {
        double beta = 2.0;
        double p = 4.0;
        double R = 1.0;
    } model;
    struct Integrator {
        std::string scheme = "explicit_rk2";  // or "imex"
        double dt = 0.0;                      // 0 selects safety * hmin^2
        double safety = 0.2;
        double t_end = 1.0;
        double output_every = 0.0;
    } integrator;
    struct Initial {
        std::string type = "front";  // front | front_plus_bump | heat_dipole | from_checkpoint
        double a0 = 0.0;
        double bump_amplitude = 0.05;
        double bump_center = 0.0;
        double bump_width = 1.0;
        std::string bump_shape = "gaussian";  // gaussian | step
        double transverse_modulation = 0.5;   // relative amplitude of the cos(2 pi y / L) factor
        std::string checkpoint;
    } initial;
    struct Checks {
        std::vector<std::string> suites;
        double eps = 0.5;
        double eps1 = 0.0;
        double delta = 0.5;
        double N_cutoff = 2.0;
        double chain_eps = 0.1;
        double eps0 = 1e-4;
        int samples = 100;
        std::string trajectory_csv;
    } checks;
    struct Gap {
        std::vector<double> L_values;  // empty: domain.L only
    } gap;
    struct Fit {
        std::string trajectory;
        std::string column = "excess_F";
        double t0 = 0.0;
        double t1 = 1e300;
    } fit;
    struct Output {
        std::string directory = "out";
        double checkpoint_every = 0.0;  // 0: final state only
    } output;
    std::uint64_t seed = 42;
};

// Unknown keys and wrong types raise ConfigError. Relative paths are resolved
// against the directory of the config file.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
// Fully resolved config, defaults expanded, stable key order.
std::string config_to_json(const RunConfig& c);

CylinderGrid config_grid(const RunConfig& c);
KernelSpec config_kernel(const RunConfig& c);
IntegratorConfig config_integrator(const RunConfig& c);
SuiteConfig config_suite(const RunConfig& c);

// "KFRNT1\0", then D, N1, Nperp as int64 and X, L, beta, t as double, then the
// values row-major, all little-endian.
struct Checkpoint {
    CylinderGrid grid;
    double beta = 0.0;
    double t = 0.0;
    std::vector<double> values;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_checkpoint(const std::string& path, const Field& m, double beta, double t);
Checkpoint read_checkpoint(const std::string& path);

// Initial state for simulate; t0 is nonzero only when restarting from a checkpoint.
struct InitialState {
    Field m;
    double t0 = 0.0;
};
InitialState build_initial(const RunConfig& c, const ModelParams& P, const Kernel& K, const FrontFamily& fam);

// Profile as CSV with columns x, m, dm.
void write_profile(const std::string& path, const Profile1D& p);

}  // namespace kf
