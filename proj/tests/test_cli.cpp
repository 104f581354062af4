#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {
struct Outcome {
    int code = -1;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(::testing::TempDir()) / ("calib_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli(const std::string& args, const std::string& env = "") {
    const fs::path dir = scratch("stdout");
    const std::string cmd = env + " " + CALIB_CLI_PATH + " " + args + " > " + (dir / "out").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "out")};
}
} // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = cli("--help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("counterexample"), std::string::npos);
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
    EXPECT_EQ(cli("").code, 1);
    EXPECT_EQ(cli("verify --no-such-flag").code, 1);
    const auto r = cli("verify --field sine-gordon");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("peierls-nabarro"), std::string::npos) << r.out;
    EXPECT_EQ(cli("verify --config /nonexistent.json").code, 1);
    EXPECT_EQ(cli("perimeter --s 1.5").code, 1);
}

TEST(Cli, FlaplacePrintsValue) {
    const auto r = cli("flaplace --function cos --s 0.5 --at 0 --format csv");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("name,gap,error,tolerance,verdict"), std::string::npos) << r.out;
}

TEST(Cli, CounterexampleSucceedsWhenFailureIsShown) {
    const auto r = cli("counterexample --candidate F2 --field linear --s 0.75 --omega -1 1 --grid 32");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("F2 fails (C1): pass"), std::string::npos) << r.out;
}

TEST(Cli, UnverifiedHypothesisExitsTwo) {
    const auto r = cli("local --field peierls-nabarro --lagrangian dirichlet --grid 32");
    EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, DumpConfigRoundTrips) {
    const fs::path d = scratch("dump");
    const auto a = cli("perimeter --s 0.3 --seed 9 --cutoffs 0.2 0.1 --dump-config");
    ASSERT_EQ(a.code, 0);
    { std::ofstream(d / "c.json") << a.out; }
    const auto b = cli("perimeter --config " + (d / "c.json").string() + " --dump-config");
    EXPECT_EQ(a.out, b.out);
    const auto c = cli("perimeter --config " + (d / "c.json").string() + " --s 0.2 --dump-config");
    EXPECT_NE(c.out.find("\"s\": 0.2"), std::string::npos) << c.out;
}

TEST(Cli, ArtifactsWritten) {
    const fs::path d = scratch("art");
    ASSERT_EQ(cli("energy --grid 32 --count 2 --out " + d.string()).code, 0);
    for (const char* f : {"report.json", "summary.csv", "plot_data.csv", "timing.json"})
        EXPECT_TRUE(fs::exists(d / f)) << f;
    EXPECT_EQ(slurp(d / "plot_data.csv").rfind("quantity,parameter,value,error\n", 0), 0u);
}

TEST(Cli, GoldenReports) {
    struct Case {
        std::string args, golden;
    };
    for (const Case& c : {Case{"perimeter --s 0.25 --seed 7 --count 5", "perimeter_s025_seed7.json"},
                          Case{"verify --grid 32 --seed 11 --count 3", "verify_pn_grid32_seed11.json"}}) {
        const fs::path d = scratch("golden");
        const auto r = cli(c.args + " --out " + d.string());
        EXPECT_EQ(r.code, 0) << r.out;
        EXPECT_EQ(slurp(d / "report.json"), slurp(fs::path(CALIB_GOLDEN_DIR) / c.golden)) << c.golden;
    }
}

TEST(Cli, ThreadCountDoesNotChangeReport) {
    const fs::path a = scratch("t1"), b = scratch("t4");
    const std::string args = "calibrate --grid 32 --count 2 --cutoffs 0.2 0.1 --out ";
    ASSERT_EQ(cli(args + a.string(), "CALIB_THREADS=1").code, 0);
    ASSERT_EQ(cli(args + b.string(), "CALIB_THREADS=4").code, 0);
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}
