#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "obstakit/cli.hpp"
#include "obstakit/oracles.hpp"

using namespace obstakit;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("obstakit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string dir() const { return dir_.string(); }
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, MeshInfo) {
    const auto r = run({"mesh-info", "--n=4"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("nodes=25 triangles=32 interior=9"), std::string::npos);
}

TEST_F(Cli, ConfigErrors) {
    EXPECT_EQ(run({}).code, cli::kExitConfig);
    EXPECT_EQ(run({"no-such-command"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"mesh-info", "--bogus=1"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"mesh-info", "--n=1"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"solve-control", "--nu=-1"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"solve-control", "--nu=nan"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"solve-obstacle", "--lower=abc"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"solve-obstacle", "--lower=1", "--upper=0"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"solve-obstacle", "--mass=diagonal"}).code, cli::kExitConfig);
    const fs::path cfg = dir_ / "bad.cfg";
    std::ofstream(cfg) << "n=8\nunknown_key=3\n";
    const auto r = run({"mesh-info", "--config", cfg.string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("config error"), std::string::npos);
    EXPECT_EQ(run({"mesh-info", "--config", (dir_ / "missing.cfg").string()}).code, cli::kExitConfig);
}

TEST_F(Cli, ConfigFileAndOverride) {
    const fs::path cfg = dir_ / "mesh.cfg";
    std::ofstream(cfg) << "n=4\n";
    EXPECT_NE(run({"mesh-info", "--config", cfg.string()}).out.find("interior=9"), std::string::npos);
    EXPECT_NE(run({"mesh-info", "--config", cfg.string(), "--n=5"}).out.find("interior=16"), std::string::npos);
}

TEST_F(Cli, ZeroLoadWritesZeroFields) {
    const auto r = run({"solve-obstacle", "--n=4", "--load=zero", "--lower=-1", "--upper=1", "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    std::ifstream in(dir_ / "obstacle.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "node,x1,x2,state,multiplier,multiplier_density,active");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.size() - 8), ",0,0,0,0") << line;
    }
    EXPECT_EQ(rows, 25);
    const std::string vtk = slurp(dir_ / "obstacle.vtk");
    EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
    EXPECT_NE(vtk.find("DATASET UNSTRUCTURED_GRID\nPOINTS 25 double\n"), std::string::npos);
    EXPECT_NE(vtk.find("CELLS 32 128\n"), std::string::npos);
    EXPECT_NE(vtk.find("CELL_TYPES 32\n"), std::string::npos);
    EXPECT_NE(vtk.find("POINT_DATA 25\nSCALARS state double 1\nLOOKUP_TABLE default\n"), std::string::npos);
}

TEST_F(Cli, ChainConfigMatchesFixtures) {
    const fs::path fixtures = OBSTAKIT_FIXTURE_DIR;
    const auto r = run({"solve-obstacle", "--config", (fixtures / "chain1d.cfg").string(), "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const std::string produced = slurp(dir_ / "chain1d_obstacle.csv");
    EXPECT_EQ(produced, slurp(fixtures / "chain1d_obstacle.csv"));
    const auto oracle = oracles::read_fixture((fixtures / "chain1d_enumeration.txt").string());
    std::istringstream in(produced);
    std::string line;
    std::getline(in, line);
    for (double expected : oracle.values) {
        ASSERT_TRUE(std::getline(in, line));
        std::istringstream row(line);
        std::string node, x, state;
        std::getline(row, node, ',');
        std::getline(row, x, ',');
        std::getline(row, state, ',');
        EXPECT_NEAR(std::stod(state), expected, 1e-10);
    }
}

TEST_F(Cli, RampObstacleInstanceSaturates) {
    const auto r = run({"solve-obstacle", "--n=16", "--load=ramp-z0", "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(r.out.find("active_lower=0 "), std::string::npos);
    EXPECT_EQ(r.out.find("active_upper=0\n"), std::string::npos);
}

TEST_F(Cli, SolveControlIsDeterministic) {
    const auto a = run({"solve-control", "--n=16", "--out_dir", dir(), "--prefix=a"});
    const auto b = run({"solve-control", "--n=16", "--out_dir", dir(), "--prefix=b"});
    ASSERT_EQ(a.code, cli::kExitOk) << a.err;
    ASSERT_EQ(b.code, cli::kExitOk);
    for (const char* suffix : {"_residuals.csv", "_fields.csv", ".vtk"}) {
        const std::string fa = slurp(dir_ / (std::string("a") + suffix));
        EXPECT_FALSE(fa.empty());
        EXPECT_EQ(fa, slurp(dir_ / (std::string("b") + suffix))) << suffix;
        EXPECT_EQ(fa.find('\r'), std::string::npos);
    }
}

TEST_F(Cli, SolveControlResidualTable) {
    const auto r = run({"solve-control", "--n=64", "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    std::ifstream in(dir_ / "control_residuals.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "iteration,residual,inactive_nodes,status");
    EXPECT_EQ(lines[1].substr(lines[1].size() - 7), ",newton");
    EXPECT_EQ(lines[2].substr(lines[2].size() - 7), ",newton");
    EXPECT_EQ(lines[3].substr(0, 2), "2,");
    EXPECT_EQ(lines[3].substr(lines[3].size() - 10), ",converged");
}

TEST_F(Cli, ZeroTargetConvergesImmediately) {
    const auto r = run({"solve-control", "--n=8", "--target=zero", "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk);
    EXPECT_EQ(slurp(dir_ / "control_residuals.csv"), "iteration,residual,inactive_nodes,status\n0,0,49,converged\n");
}

TEST_F(Cli, NonConvergenceExitCode) {
    EXPECT_EQ(run({"solve-control", "--n=32", "--max_iter=1", "--out_dir", dir()}).code, cli::kExitNonConvergence);
    EXPECT_EQ(run({"solve-obstacle", "--n=16", "--load=ramp-z0", "--max_iter=1", "--out_dir", dir()}).code,
              cli::kExitNonConvergence);
}

TEST_F(Cli, Table1SingleWidth) {
    const auto r = run({"table1", "--ns=16", "--out_dir", dir()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_EQ(slurp(dir_ / "table1.csv"), "mesh_width,1/16\niterations,1\n");
    EXPECT_NE(r.out.find("mesh-independence: PASS"), std::string::npos);
}

TEST_F(Cli, Table1FlagsDependence) {
    // n = 8 needs one step, n = 32 two
    const auto r = run({"table1", "--ns=8,32", "--out_dir", dir()});
    EXPECT_EQ(r.code, cli::kExitContract);
    EXPECT_EQ(slurp(dir_ / "table1.csv"), "mesh_width,1/8,1/32\niterations,1,2\n");
    EXPECT_NE(r.out.find("mesh-independence: FAIL"), std::string::npos);
}

TEST_F(Cli, SubspaceVerify) {
    EXPECT_EQ(run({"subspace-verify", "--trials=0", "--bridge_pairs=0"}).code, cli::kExitOk);
    const auto r = run({"subspace-verify", "--trials=20", "--max_dim=15", "--bridge_n=4", "--bridge_pairs=3"});
    EXPECT_EQ(r.code, cli::kExitOk) << r.out;
    EXPECT_NE(r.out.find("degenerate 2/2 rejected"), std::string::npos);
}
