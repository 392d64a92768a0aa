#include "kfront/io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace kf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& known) {
    if (!j.is_object()) throw ConfigError(where + " must be a table");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key " + where + "." + it.key());
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("wrong type for " + where + "." + key);
    }
}

std::string resolve(const std::string& p, const std::string& base) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    check_keys(j, "config", {"domain", "model", "integrator", "initial", "checks", "gap", "fit", "output", "seed"});
    if (j.contains("domain")) {
        const auto& d = j["domain"];
        check_keys(d, "domain", {"D", "X", "N1", "L", "Nperp"});
        get(d, "D", c.domain.D, "domain");
        get(d, "X", c.domain.X, "domain");
        get(d, "N1", c.domain.n1, "domain");
        get(d, "L", c.domain.L, "domain");
        get(d, "Nperp", c.domain.nperp, "domain");
    }
    if (j.contains("model")) {
        const auto& d = j["model"];
        check_keys(d, "model", {"beta", "kernel_p", "kernel_R"});
        get(d, "beta", c.model.beta, "model");
        get(d, "kernel_p", c.model.p, "model");
        get(d, "kernel_R", c.model.R, "model");
    }
    if (j.contains("integrator")) {
        const auto& d = j["integrator"];
        check_keys(d, "integrator", {"scheme", "dt", "safety", "t_end", "output_every"});
        get(d, "scheme", c.integrator.scheme, "integrator");
        get(d, "dt", c.integrator.dt, "integrator");
        get(d, "safety", c.integrator.safety, "integrator");
        get(d, "t_end", c.integrator.t_end, "integrator");
        get(d, "output_every", c.integrator.output_every, "integrator");
    }
    if (j.contains("initial")) {
        const auto& d = j["initial"];
        check_keys(d, "initial",
                   {"type", "a0", "bump_amplitude", "bump_center", "bump_width", "bump_shape",
                    "transverse_modulation", "checkpoint"});
        get(d, "type", c.initial.type, "initial");
        get(d, "a0", c.initial.a0, "initial");
        get(d, "bump_amplitude", c.initial.bump_amplitude, "initial");
        get(d, "bump_center", c.initial.bump_center, "initial");
        get(d, "bump_width", c.initial.bump_width, "initial");
        get(d, "bump_shape", c.initial.bump_shape, "initial");
        get(d, "transverse_modulation", c.initial.transverse_modulation, "initial");
        get(d, "checkpoint", c.initial.checkpoint, "initial");
    }
    if (j.contains("checks")) {
        const auto& d = j["checks"];
        check_keys(d, "checks",
                   {"suites", "eps", "eps1", "delta", "N_cutoff", "chain_eps", "eps0", "samples", "trajectory_csv"});
        get(d, "suites", c.checks.suites, "checks");
        get(d, "eps", c.checks.eps, "checks");
        get(d, "eps1", c.checks.eps1, "checks");
        get(d, "delta", c.checks.delta, "checks");
        get(d, "N_cutoff", c.checks.N_cutoff, "checks");
        get(d, "chain_eps", c.checks.chain_eps, "checks");
        get(d, "eps0", c.checks.eps0, "checks");
        get(d, "samples", c.checks.samples, "checks");
        get(d, "trajectory_csv", c.checks.trajectory_csv, "checks");
    }
    if (j.contains("gap")) {
        check_keys(j["gap"], "gap", {"L_values"});
        get(j["gap"], "L_values", c.gap.L_values, "gap");
    }
    if (j.contains("fit")) {
        const auto& d = j["fit"];
        check_keys(d, "fit", {"trajectory", "column", "t0", "t1"});
        get(d, "trajectory", c.fit.trajectory, "fit");
        get(d, "column", c.fit.column, "fit");
        get(d, "t0", c.fit.t0, "fit");
        get(d, "t1", c.fit.t1, "fit");
    }
    if (j.contains("output")) {
        const auto& d = j["output"];
        check_keys(d, "output", {"directory", "checkpoint_every"});
        get(d, "directory", c.output.directory, "output");
        get(d, "checkpoint_every", c.output.checkpoint_every, "output");
    }
    get(j, "seed", c.seed, "config");

    c.initial.checkpoint = resolve(c.initial.checkpoint, base_dir);
    c.checks.trajectory_csv = resolve(c.checks.trajectory_csv, base_dir);
    c.fit.trajectory = resolve(c.fit.trajectory, base_dir);

    static const std::set<std::string> types = {"front", "front_plus_bump", "heat_dipole", "from_checkpoint"};
    if (!types.count(c.initial.type)) throw ConfigError("unknown initial.type " + c.initial.type);
    if (c.initial.bump_shape != "gaussian" && c.initial.bump_shape != "step")
        throw ConfigError("unknown initial.bump_shape " + c.initial.bump_shape);
    if (c.integrator.scheme != "explicit_rk2" && c.integrator.scheme != "imex")
        throw ConfigError("unknown integrator.scheme " + c.integrator.scheme);
    if (c.initial.type == "from_checkpoint" && !fs::exists(c.initial.checkpoint))
        throw ConfigError("checkpoint file not found: " + c.initial.checkpoint);
    if (!c.checks.trajectory_csv.empty() && !fs::exists(c.checks.trajectory_csv))
        throw ConfigError("trajectory file not found: " + c.checks.trajectory_csv);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fs::path(path).parent_path().string().empty()
                                      ? std::string(".")
                                      : fs::path(path).parent_path().string());
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["domain"] = {{"D", c.domain.D}, {"X", c.domain.X}, {"N1", c.domain.n1}, {"L", c.domain.L},
                   {"Nperp", c.domain.nperp}};
    j["model"] = {{"beta", c.model.beta}, {"kernel_p", c.model.p}, {"kernel_R", c.model.R}};
    j["integrator"] = {{"scheme", c.integrator.scheme},
                       {"dt", c.integrator.dt},
                       {"safety", c.integrator.safety},
                       {"t_end", c.integrator.t_end},
                       {"output_every", c.integrator.output_every}};
    j["initial"] = {{"type", c.initial.type},
                    {"a0", c.initial.a0},
                    {"bump_amplitude", c.initial.bump_amplitude},
                    {"bump_center", c.initial.bump_center},
                    {"bump_width", c.initial.bump_width},
                    {"bump_shape", c.initial.bump_shape},
                    {"transverse_modulation", c.initial.transverse_modulation},
                    {"checkpoint", c.initial.checkpoint}};
    j["checks"] = {{"suites", c.checks.suites},   {"eps", c.checks.eps},
                   {"eps1", c.checks.eps1},       {"delta", c.checks.delta},
                   {"N_cutoff", c.checks.N_cutoff}, {"chain_eps", c.checks.chain_eps},
                   {"eps0", c.checks.eps0},       {"samples", c.checks.samples},
                   {"trajectory_csv", c.checks.trajectory_csv}};
    j["gap"] = {{"L_values", c.gap.L_values}};
    j["fit"] = {{"trajectory", c.fit.trajectory}, {"column", c.fit.column}, {"t0", c.fit.t0}, {"t1", c.fit.t1}};
    j["output"] = {{"directory", c.output.directory}, {"checkpoint_every", c.output.checkpoint_every}};
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

CylinderGrid config_grid(const RunConfig& c) {
    return make_grid(c.domain.D, c.domain.X, c.domain.n1, c.domain.L, c.domain.D == 1 ? 1 : c.domain.nperp);
}

KernelSpec config_kernel(const RunConfig& c) { return KernelSpec{c.model.p, c.model.R}; }

IntegratorConfig config_integrator(const RunConfig& c) {
    IntegratorConfig ic;
    ic.scheme = c.integrator.scheme == "imex" ? Scheme::imex : Scheme::explicit_rk2;
    ic.dt = c.integrator.dt;
    ic.safety = c.integrator.safety;
    ic.t_end = c.integrator.t_end;
    ic.output_every = c.integrator.output_every;
    return ic;
}

SuiteConfig config_suite(const RunConfig& c) {
    SuiteConfig s;
    s.D = c.domain.D;
    s.X = c.domain.X;
    s.n1 = c.domain.n1;
    s.L = c.domain.L;
    s.nperp = c.domain.D == 1 ? 1 : c.domain.nperp;
    s.beta = c.model.beta;
    s.kernel = config_kernel(c);
    s.seed = c.seed;
    s.samples = c.checks.samples;
    s.eps = c.checks.eps;
    s.eps1 = c.checks.eps1;
    s.delta = c.checks.delta;
    s.chain_eps = c.checks.chain_eps;
    s.N_cutoff = c.checks.N_cutoff;
    s.eps0 = c.checks.eps0;
    s.trajectory_csv = c.checks.trajectory_csv;
    return s;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[7] = {'K', 'F', 'R', 'N', 'T', '1', '\0'};

template <class T>
void put_le(std::ostream& os, T x) {
    std::uint64_t u;
    static_assert(sizeof(T) == 8);
    std::memcpy(&u, &x, 8);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
}

template <class T>
T get_le(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint");
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    T x;
    std::memcpy(&x, &u, 8);
    return x;
}

}  // namespace

void write_checkpoint(const std::string& path, const Field& m, double beta, double t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot write " + path);
    os.write(kMagic, sizeof kMagic);
    const auto& g = m.grid;
    put_le<std::int64_t>(os, g.D);
    put_le<std::int64_t>(os, g.n1);
    put_le<std::int64_t>(os, g.nperp);
    put_le<double>(os, g.X);
    put_le<double>(os, g.L);
    put_le<double>(os, beta);
    put_le<double>(os, t);
    for (double x : m.v) put_le<double>(os, x);
    if (!os) throw CheckpointError("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot read " + path);
    char magic[7];
    if (!is.read(magic, 7) || std::memcmp(magic, kMagic, 7) != 0) throw CheckpointError("bad checkpoint magic");
    Checkpoint c;
    const auto D = get_le<std::int64_t>(is), n1 = get_le<std::int64_t>(is), np = get_le<std::int64_t>(is);
    const double X = get_le<double>(is), L = get_le<double>(is);
    c.beta = get_le<double>(is);
    c.t = get_le<double>(is);
    if (D < 1 || D > 3 || n1 < 2 || np < 1) throw CheckpointError("bad checkpoint header");
    c.grid = make_grid(static_cast<int>(D), X, static_cast<int>(n1), L, static_cast<int>(np));
    c.values.resize(c.grid.size());
    for (double& x : c.values) x = get_le<double>(is);
    if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes in checkpoint");
    return c;
}

// ---------------------------------------------------------------- initial conditions

InitialState build_initial(const RunConfig& c, const ModelParams& P, const Kernel& K, const FrontFamily& fam) {
    const auto& g = K.grid();
    InitialState s;
    const auto& ic = c.initial;
    if (ic.type == "from_checkpoint") {
        const Checkpoint ck = read_checkpoint(ic.checkpoint);
        if (!ck.grid.same_shape(g)) throw ConfigError("checkpoint grid does not match the configured domain");
        if (ck.beta != P.beta) throw ConfigError("checkpoint beta does not match the configured model");
        s.m = Field(g, 0.0, -P.mbeta, P.mbeta);
        s.m.v = ck.values;
        s.t0 = ck.t;
        return s;
    }
    if (ic.type == "heat_dipole") {
        s.m = Field(g, 0.0);
        for (int i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.nt(); ++j) s.m.at(i, j) = g.x1(i) * std::exp(-0.5 * g.x1(i) * g.x1(i));
        return s;
    }
    s.m = shifted_front(fam, ic.a0, g);
    if (ic.type == "front") return s;
    // The seed picks the transverse phase.
    Rng rng(c.seed);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const double norm = g.D >= 2 ? 1.0 + std::fabs(ic.transverse_modulation) : 1.0;
    for (int i = 0; i < g.n1; ++i) {
        const double x = g.x1(i) - ic.bump_center;
        const double b = ic.bump_shape == "step" ? (std::fabs(x) < ic.bump_width ? 1.0 : 0.0)
                                                 : std::exp(-0.5 * x * x / (ic.bump_width * ic.bump_width));
        for (std::size_t j = 0; j < g.nt(); ++j) {
            double tr = 1.0;
            if (g.D >= 2) tr += ic.transverse_modulation * std::cos(2.0 * M_PI * transverse_coord(g, j, 0) / g.L + theta);
            s.m.at(i, j) += ic.bump_amplitude * b * tr / norm;
        }
    }
    for (double x : s.m.v)
        if (!(std::fabs(x) < 1.0)) throw ConfigError("initial bump pushes |m| to 1 or beyond");
    return s;
}

void write_profile(const std::string& path, const Profile1D& p) {
    std::ofstream os(path);
    if (!os) throw CheckpointError("cannot write " + path);
    os << "x,m,dm\r\n";
    for (int i = 0; i < p.grid.n1; ++i)
        os << format_double(p.grid.x1(i)) << ',' << format_double(p.m[i]) << ',' << format_double(p.dm[i]) << "\r\n";
}

}  // namespace kf
