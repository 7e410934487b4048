#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(RPAS_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (p == nullptr) {
        return r;
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) {
        r.out.append(buf, n);
    }
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const std::string s2 = RPAS_SCENARIO_DIR "/scenario2.json";

fs::path tmpdir() {
    const fs::path d = fs::temp_directory_path() / "rpas_cli_test";
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, Version) {
    const Result r = run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("rpas ", 0), 0u);
    EXPECT_NE(r.out.find("aircraft-data"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("nonsense").code, 1);
    EXPECT_EQ(run("simulate /nonexistent.json").code, 1);
    EXPECT_EQ(run("simulate " + s2 + " --pa 1.0 --eps -1").code, 1);
    EXPECT_EQ(run("simulate " + s2 + " --loss-policy bogus").code, 1);
    EXPECT_EQ(run("rcp steady --lon 0 --loff 0").code, 1);
}

TEST(Cli, RcpValues) {
    EXPECT_EQ(run("rcp communicability --pa 1 --tau 0.2 --eps 0.1").out, "1\n");
    EXPECT_EQ(run("rcp steady --lon 0.8 --loff 0.2").out, "0.8\n");
    EXPECT_EQ(run("rcp tau-msg --bits 448 --bitrate 2400").out, "0.186666666667\n");
    EXPECT_EQ(run("rcp availability --lon 0.6 --loff 0.4 --t 0").out, "1\n");
    EXPECT_EQ(run("rcp continuity --loff 0.3 --tau 0").out, "1\n");
}

TEST(Cli, SimulateExitCodes) {
    const Result ok = run("simulate " + s2 + " --pa 1.0 --eps 0.0");
    EXPECT_EQ(ok.code, 0);
    EXPECT_EQ(ok.out.rfind("run_id,", 0), 0u);
    const Result fail = run("simulate " RPAS_TEST_DATA "/short_limit.json");
    EXPECT_EQ(fail.code, 2);
    EXPECT_NE(fail.out.find("timeout"), std::string::npos);
}

TEST(Cli, SimulateIsReproducible) {
    const fs::path d = tmpdir();
    const std::string args = "simulate " + s2 + " --pa 0.9 --eps 0.02 --seed 4 --traj-out ";
    const Result a = run(args + (d / "a.csv").string());
    const Result b = run(args + (d / "b.csv").string());
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(slurp(d / "a.csv"), slurp(d / "b.csv"));
    EXPECT_FALSE(slurp(d / "a.csv").empty());
}

TEST(Cli, SweepAggregateCurvesBlockage) {
    const fs::path d = tmpdir();
    const std::string base = "sweep " + s2 + " --samples 100 --seed 11 ";
    const Result one = run(base + "--workers 1");
    const Result eight = run(base + "--workers 8");
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(one.out, eight.out);
    std::size_t rows = 0;
    for (char c : one.out) {
        rows += c == '\n';
    }
    EXPECT_EQ(rows, 101u);
    EXPECT_EQ(one.out.substr(0, one.out.find('\n')),
              "run_id,p_a,epsilon,seed,success,completion_time_s,failure_mode,waypoints_reached");
    {
        std::ofstream(d / "records.csv", std::ios::binary) << one.out;
    }
    const std::string rec = (d / "records.csv").string();

    const Result agg = run("aggregate " + rec + " --pa-bins 5 --eps-bins 4");
    ASSERT_EQ(agg.code, 0);
    std::istringstream in(agg.out);
    std::string line;
    std::getline(in, line);
    long total = 0;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::string field;
        for (int k = 0; k < 5; ++k) {
            std::getline(f, field, ',');
        }
        total += std::stol(field);
    }
    EXPECT_EQ(total, 100);

    const Result cur = run("curves " + rec + " --bitrate 2400 --size-bits 448");
    EXPECT_EQ(cur.code, 0);
    EXPECT_EQ(cur.out.rfind("eps_interval_lo,eps_interval_hi,p_comm_bin,success_rate,count\n", 0), 0u);

    {
        std::ofstream(d / "ok.csv", std::ios::binary)
            << "run_id,p_a,epsilon,seed,success,completion_time_s,failure_mode,waypoints_reached\n"
            << "0,1,0,1,1,30,,3\n1,1,0.001,1,1,31,,3\n2,1,0.002,1,1,32,,3\n";
    }
    const Result blk = run("blockage --records " + (d / "ok.csv").string());
    EXPECT_EQ(blk.code, 0);
    EXPECT_NE(blk.out.find("# bands: 0\n"), std::string::npos);

    {
        std::ofstream(d / "empty.csv", std::ios::binary)
            << "run_id,p_a,epsilon,seed,success,completion_time_s,failure_mode,waypoints_reached\n";
    }
    EXPECT_EQ(run("aggregate " + (d / "empty.csv").string()).code, 1);
    EXPECT_EQ(run("curves " + (d / "empty.csv").string()).code, 1);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
    const fs::path d = tmpdir() / "envout";
    fs::remove_all(d);
    const std::string cmd = "RPAS_OUTPUT_DIR=" + d.string() + " " + RPAS_CLI + " trim >/dev/null 2>&1";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    const std::string sim = "RPAS_OUTPUT_DIR=" + d.string() + " " + RPAS_CLI + " simulate " RPAS_TEST_DATA
                            "/short_limit.json --traj-out t.csv >/dev/null 2>&1";
    const int rc = std::system(sim.c_str());
    EXPECT_EQ(WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, 2);
    EXPECT_TRUE(fs::exists(d / "t.csv"));
}
