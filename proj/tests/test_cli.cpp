#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "kfront_cli_test.log";
    const std::string cmd = std::string(KFRONT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kfront_cli_" + name);
    fs::remove_all(p);
    return p;
}

void write(const fs::path& p, const std::string& s) {
    std::ofstream o(p);
    o << s;
}

}  // namespace

TEST(Cli, HelpAndUnknownSubcommand) {
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_NE(run("nonsense").code, 0);
}

TEST(Cli, InstantonWritesProfile) {
    const fs::path d = fresh_dir("inst");
    const fs::path cfg = fs::temp_directory_path() / "kfront_cli_inst.json";
    write(cfg, R"({"domain": {"D": 1, "X": 10, "N1": 256}})");
    const Result r = run("--config " + cfg.string() + " --out " + d.string() + " instanton");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(d / "profile.csv"));
    EXPECT_TRUE(fs::exists(d / "instanton.ckpt"));
    EXPECT_TRUE(fs::exists(d / "config.json"));
    // A second run into the same directory needs --force.
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " instanton").code, 3);
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " --force instanton").code, 0);
}

TEST(Cli, SubcriticalBetaIsAnInputError) {
    const fs::path d = fresh_dir("beta");
    const fs::path cfg = fs::temp_directory_path() / "kfront_cli_beta.json";
    write(cfg, R"({"domain": {"D": 1, "X": 10, "N1": 128}, "model": {"beta": 0.9}})");
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " instanton").code, 2);
}

TEST(Cli, BadConfigIsAnInputError) {
    const fs::path cfg = fs::temp_directory_path() / "kfront_cli_bad.json";
    write(cfg, R"({"domain": {"D": 1, "bogus": 3}})");
    EXPECT_EQ(run("--config " + cfg.string() + " --out " + fresh_dir("bad").string() + " instanton").code, 2);
}

TEST(Cli, OdeCheckPrintsExponent) {
    const fs::path d = fresh_dir("ode");
    const Result r = run("--out " + d.string() + " check --suite ode");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("9/13"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(d / "reports.ndjson"));
    EXPECT_EQ(run("--out " + fresh_dir("ode2").string() + " check --suite nope").code, 2);
}

TEST(Cli, FitOnSyntheticTrajectory) {
    const fs::path csv = fs::temp_directory_path() / "kfront_cli_fit.csv";
    {
        std::ofstream o(csv);
        o << "t,excess_F\n";
        o.precision(17);
        for (int k = 0; k <= 200; ++k) {
            const double t = 0.5 * k;
            o << t << "," << 2.0 * std::pow(1 + t, -0.7) << "\n";
        }
    }
    const Result r = run("fit --trajectory " + csv.string() + " --column excess_F");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("q_fit"), std::string::npos);
    EXPECT_NE(r.out.find("0.7"), std::string::npos) << r.out;
    EXPECT_EQ(run("fit --trajectory " + csv.string() + " --column missing").code, 2);
}

TEST(Cli, SimulateAndRestart) {
    const fs::path d = fresh_dir("sim");
    const fs::path cfg = fs::temp_directory_path() / "kfront_cli_sim.json";
    write(cfg, R"({"domain": {"D": 1, "X": 10, "N1": 256},
                  "integrator": {"t_end": 0.2, "output_every": 0.05},
                  "initial": {"type": "front_plus_bump", "bump_amplitude": 0.02, "bump_center": 1.5}})");
    const Result r = run("--config " + cfg.string() + " --out " + d.string() + " simulate");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(d / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(d / "summary.json"));
    ASSERT_TRUE(fs::exists(d / "final.ckpt"));
    const fs::path cfg2 = fs::temp_directory_path() / "kfront_cli_restart.json";
    write(cfg2, R"({"domain": {"D": 1, "X": 10, "N1": 256},
                   "integrator": {"t_end": 0.1},
                   "initial": {"type": "from_checkpoint", "checkpoint": ")" +
                        (d / "final.ckpt").string() + R"("}})");
    const fs::path d2 = fresh_dir("restart");
    EXPECT_EQ(run("--config " + cfg2.string() + " --out " + d2.string() + " simulate").code, 0);
}
