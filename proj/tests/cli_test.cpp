// End-to-end checks of the deskpilot binary: exit codes, required flags, and a
// couple of cheap happy paths. The binary path arrives as the DESKPILOT_BIN
// compile definition.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "deskpilot_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    const char* bin = DESKPILOT_BIN;
    static int call = 0;
    const fs::path capture = work_dir() / ("out_" + std::to_string(call++) + ".txt");
    const std::string cmd =
        "\"" + std::string(bin) + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());

    RunResult r;
    if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    std::ifstream in(capture);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

fs::path tiny_manifest() {
    static const fs::path path = [] {
        const fs::path p = work_dir() / "tiny" / "manifest.csv";
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        out << "timestamp,center,left,right,steering,throttle,brake,speed\n";
        for (int i = 0; i < 20; ++i) {
            const double steer = (i % 4 == 0) ? 0.0 : (i % 4 - 2) * 0.3;
            out << (0.5 * i) << ",frames/" << i << "_c.ppm,,," << steer << ",0.4,0.0,8.0\n";
        }
        return p;
    }();
    return path;
}

}  // namespace

TEST(Cli, HelpExitsZeroAndListsSubcommands) {
    const auto r = run_cli("--help");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.output.find("collect"), std::string::npos);
    EXPECT_NE(r.output.find("train"), std::string::npos);
    EXPECT_NE(r.output.find("evaluate"), std::string::npos);
    EXPECT_NE(r.output.find("experiment"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run_cli("totally-not-a-subcommand").exit_code, 1);
    EXPECT_EQ(run_cli("balance").exit_code, 1);               // missing --manifest
    EXPECT_EQ(run_cli("train --no-such-flag").exit_code, 1);  // unknown option
    EXPECT_EQ(run_cli("").exit_code, 1);                      // subcommand required
}

TEST(Cli, BadInputDataExitsTwo) {
    const auto r = run_cli("balance --manifest /nonexistent/manifest.csv");
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("error"), std::string::npos);
}

TEST(Cli, BadArgumentValuesExitOne) {
    // Unknown scenario names and contradictory flags are usage errors.
    EXPECT_EQ(run_cli("evaluate --expert --scenario mars").exit_code, 1);
    EXPECT_EQ(run_cli("evaluate --scenario simplistic").exit_code, 1);  // no model, no --expert
    const auto r = run_cli("balance --manifest " + tiny_manifest().string() +
                           " --deletion-rate 1.5");
    EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, BalanceReportsHistogram) {
    const auto r = run_cli("balance --manifest " + tiny_manifest().string());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.output.find("steering range"), std::string::npos);
    EXPECT_NE(r.output.find("rows before=20"), std::string::npos);
}

TEST(Cli, ExpertLapCompletesCleanly) {
    const fs::path log = work_dir() / "lap.csv";
    const auto r = run_cli("evaluate --expert --scenario simplistic --lap-log " + log.string());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.output.find("eta=100.0%"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("completed=yes"), std::string::npos) << r.output;

    std::ifstream in(log);
    ASSERT_TRUE(in.good());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("t,", 0), 0u);
}

TEST(Cli, MissingModelFileExitsTwo) {
    const auto r = run_cli("evaluate --model /nonexistent/model.dpnt --scenario simplistic");
    EXPECT_EQ(r.exit_code, 2);
}
