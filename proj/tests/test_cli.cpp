#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "splitsde/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = splitsde::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("splitsde_cli_" + std::string(
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

} // namespace

// ============================================================ form / preset

TEST_F(CliTest, FormOuSeriesWithoutConfig) {
    const Result r = run({"form", "--method", "ou-series", "--k", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double expected = std::sqrt(2.0 * std::numbers::e * std::numbers::pi) * std::erf(1.0 / std::sqrt(2.0));
    EXPECT_NE(r.out.find("1,1,2.82137226928489"), std::string::npos) << r.out;
    EXPECT_NEAR(expected, 2.8213722692848964, 1e-15);
    EXPECT_NE(r.out.find("seed="), std::string::npos);
}

TEST_F(CliTest, PresetList) {
    const Result r = run({"preset", "list"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "robot\nmips\nou_integrated\n");
}

TEST_F(CliTest, PresetDescribe) {
    const Result r = run({"preset", "robot", "--describe"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("dx1/dt"), std::string::npos);
    EXPECT_NE(r.out.find("limit"), std::string::npos);
}

TEST_F(CliTest, UnknownPresetIsConfigError) { EXPECT_EQ(run({"preset", "nope", "--describe"}).code, 2); }

TEST_F(CliTest, FormGridFromConfig) {
    const std::string cfg = write("f.json", R"({"method": "grid", "drivers": [{"kind": "cos"}, {"kind": "sin"}]})");
    const Result r = run({cfg, "--out-dir", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 2);  // config must follow the subcommand
    const Result ok = run({"form", cfg, "--out-dir", (dir_ / "o").string()});
    ASSERT_EQ(ok.code, 0) << ok.err;
    EXPECT_NE(ok.out.find("1,1,1.41068"), std::string::npos) << ok.out;
    EXPECT_TRUE(fs::exists(dir_ / "o" / "forms.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "o" / "config.json"));
}

// ============================================================ covariance

TEST_F(CliTest, CovarianceCosSin) {
    const std::string cfg = write("c.json", R"({"drivers": [{"kind": "cos"}, {"kind": "sin"}]})");
    const Result r = run({"covariance", cfg, "--out-dir", (dir_ / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir_ / "o" / "covariance.csv");
    EXPECT_NE(csv.find("1,1,0.5,gram,0\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("1,2,0,gram,0\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("2,2,0.5,gram,0\n"), std::string::npos) << csv;
}

TEST_F(CliTest, CovarianceExplicitCoefficients) {
    const std::string cfg = write("c.json", R"({"drivers": [{"coeffs": [[1, 0.5, 0.0]]}]})");
    ASSERT_EQ(run({"covariance", cfg, "--out-dir", (dir_ / "o").string()}).code, 0);
    EXPECT_NE(slurp(dir_ / "o" / "covariance.csv").find("1,1,0.5,gram"), std::string::npos);
}

// ============================================================ strict config

TEST_F(CliTest, UnknownKeyRejectedWithPath) {
    const std::string cfg = write("s.json", R"({"preset": "robot", "params": {"k": 1, "speed": 2}})");
    const Result r = run({"simulate", cfg});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("params.speed"), std::string::npos) << r.err;
}

TEST_F(CliTest, SyntaxErrorReportsLine) {
    const std::string cfg = write("s.json", "{\n  \"preset\": \"robot\",\n  \"T\": ,\n}\n");
    const Result r = run({"simulate", cfg});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
}

TEST_F(CliTest, WrongTypeRejected) {
    const std::string cfg = write("s.json", R"({"preset": "robot", "n_paths": "many"})");
    const Result r = run({"simulate", cfg});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("n_paths"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsConfigError) { EXPECT_EQ(run({"simulate", (dir_ / "none.json").string()}).code, 2); }

TEST_F(CliTest, DryRunDoesNotWrite) {
    const std::string cfg = write("s.json", R"({"preset": "robot", "n_paths": 10})");
    const Result r = run({"simulate", cfg, "--dry-run", "--out-dir", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, DryRunStillValidates) {
    const std::string cfg = write("s.json", R"({"preset": "robot", "bogus": 1})");
    EXPECT_EQ(run({"simulate", cfg, "--dry-run"}).code, 2);
}

// ============================================================ simulate / converge

TEST_F(CliTest, SimulateIsReproducibleAcrossWorkers) {
    const std::string cfg =
        write("s.json", R"({"preset": "robot", "epsilon": 0.3, "T": 0.2, "n_paths": 64, "system": "fast"})");
    ASSERT_EQ(run({"simulate", cfg, "--seed", "5", "--out-dir", (dir_ / "a").string()}).code, 0);
    ASSERT_EQ(run({"simulate", cfg, "--seed", "5", "--workers", "3", "--out-dir", (dir_ / "b").string()}).code, 0);
    ASSERT_EQ(run({"simulate", cfg, "--seed", "6", "--out-dir", (dir_ / "c").string()}).code, 0);
    const std::string a = slurp(dir_ / "a" / "terminal.csv");
    EXPECT_EQ(a, slurp(dir_ / "b" / "terminal.csv"));
    EXPECT_NE(a, slurp(dir_ / "c" / "terminal.csv"));
    EXPECT_EQ(a.rfind("path_id,x_1,x_2,x_3,x_4\n", 0), 0u);
    EXPECT_NE(slurp(dir_ / "a" / "config.json").find("\"seed\": 5"), std::string::npos);
}

TEST_F(CliTest, SimulateLimitWithPaths) {
    const std::string cfg = write(
        "s.json", R"({"preset": "mips", "system": "limit", "T": 0.1, "dt": 0.01, "n_paths": 3, "record_paths": true})");
    const Result r = run({"simulate", cfg, "--out-dir", (dir_ / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string jl = slurp(dir_ / "o" / "paths.jsonl");
    // One record per path and recorded step, t = 0 included.
    EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), 3 * 11);
}

TEST_F(CliTest, BlowUpExitsOne) {
    // A huge speed makes the fast system explode at this step size.
    const std::string cfg = write("s.json", R"({"preset": "robot", "epsilon": 0.01, "dt": 1.0, "T": 50,
        "n_paths": 8, "params": {"k": 1e6, "u": {"kind": "radial", "offset": 1, "amplitude": 100}}})");
    const Result r = run({"simulate", cfg, "--out-dir", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 1) << r.out;
}

TEST_F(CliTest, ConvergeSmall) {
    const std::string cfg = write("v.json", R"({"preset": "robot",
        "ladder": {"epsilons": [0.4, 0.2], "T": 0.3, "n_paths": 200, "min_steps": 10, "dt_limit": 0.01}})");
    const Result r = run({"converge", cfg, "--out-dir", (dir_ / "o").string(), "--workers", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "o" / "report.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "o" / "report.json"));
    EXPECT_NE(r.out.find("seed=1"), std::string::npos);
}

TEST_F(CliTest, ConvergeRejectsBadLadder) {
    const std::string cfg = write("v.json", R"({"preset": "robot", "ladder": {"epsilons": [0.1, 0.2]}})");
    EXPECT_EQ(run({"converge", cfg}).code, 2);
}
