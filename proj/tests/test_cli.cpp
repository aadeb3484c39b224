#include <json.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run wfopt(const std::string &args) {
    const std::string cmd = std::string(WFOPT_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE *pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) {
        r.out += buf.data();
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string &name) {
    auto dir = fs::temp_directory_path() / ("wfopt_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json read_json(const fs::path &p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path tiny_case(const fs::path &dir) {
    const auto p = dir / "tiny.json";
    std::ofstream(p) << R"({
  "name": "tiny",
  "farm": {
    "turbines": 4,
    "bounds": {"x_min": 0, "x_max": 800, "y_min": 0, "y_max": 800},
    "wind_rose": [
      {"direction_deg": 270, "u_ref": 8, "probability": 0.7},
      {"direction_deg": 0, "u_ref": 8, "probability": 0.3}
    ]
  },
  "optimizer": {"particles": 8, "subpop_sizes": [4], "iterations": 4, "seed": 3}
})";
    return p;
}

} // namespace

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(wfopt("").code, 1);
    EXPECT_EQ(wfopt("frobnicate").code, 1);
    EXPECT_EQ(wfopt("optimize wf1").code, 1); // --out is required
    EXPECT_EQ(wfopt("evaluate no_such_case").code, 1);
}

TEST(Cli, Version) {
    const auto r = wfopt("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_FALSE(r.out.empty());
}

TEST(Cli, CasesListAndShow) {
    const auto list = wfopt("cases list");
    EXPECT_EQ(list.code, 0);
    for (const char *name : {"wf1", "wf2", "wf3", "wf4", "wf1_u6", "wf1_v112"}) {
        EXPECT_NE(list.out.find(name), std::string::npos);
    }
    const auto show = wfopt("cases show wf4");
    ASSERT_EQ(show.code, 0);
    EXPECT_EQ(json::parse(show.out), read_json(fs::path(WFOPT_CASES_DIR) / "wf4.json"));
}

TEST(Cli, EvaluateCheckerboardGolden) {
    const auto dir = scratch("evaluate");
    const auto r = wfopt("evaluate wf1 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("AEP = 71.34 GWh"), std::string::npos) << r.out;
    const auto doc = read_json(dir / "evaluate.json");
    EXPECT_NEAR(doc["aep_gwh"].get<double>(), 71.3360296366, 1e-8);
    EXPECT_EQ(read_json(dir / "manifest.json")["status"], "ok");
}

TEST(Cli, EvaluateRejectsInfeasibleLayout) {
    const auto dir = scratch("infeasible");
    std::ofstream(dir / "layout.csv") << "x,y\n0,0\n40,0\n";
    const auto r = wfopt("evaluate wf1 --layout " + (dir / "layout.csv").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("infeasible layout: turbines 0 and 1 are 40.00 m apart"), std::string::npos) << r.out;
}

TEST(Cli, EvaluateRejectsMalformedLayout) {
    const auto dir = scratch("malformed");
    std::ofstream(dir / "layout.csv") << "x,y\n0,zero\n";
    EXPECT_EQ(wfopt("evaluate wf1 --layout " + (dir / "layout.csv").string()).code, 1);
}

TEST(Cli, OptimizeWritesOutputsAndIsDeterministic) {
    const auto dir = scratch("optimize");
    const auto c = tiny_case(dir).string();
    const auto a = wfopt("optimize " + c + " --threads 1 --out " + (dir / "a").string());
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_NE(a.out.find("S_AYC"), std::string::npos);
    const auto b = wfopt("optimize " + c + " --threads 1 --out " + (dir / "b").string());
    const auto t = wfopt("optimize " + c + " --threads 3 --out " + (dir / "t").string());
    ASSERT_EQ(b.code, 0);
    ASSERT_EQ(t.code, 0);
    EXPECT_EQ(slurp(dir / "a" / "result.json"), slurp(dir / "b" / "result.json"));
    EXPECT_EQ(slurp(dir / "a" / "history.csv"), slurp(dir / "b" / "history.csv"));
    EXPECT_EQ(read_json(dir / "a" / "result.json")["aep_wh"], read_json(dir / "t" / "result.json")["aep_wh"]);

    const auto doc = read_json(dir / "a" / "result.json");
    const auto aep = doc["aep_wh"];
    EXPECT_GE(aep["s_ayc"].get<double>(), aep["s_theta"].get<double>());
    EXPECT_GE(aep["j_ayc"].get<double>(), aep["s_ayc"].get<double>());
    EXPECT_GE(aep["j_ayc"].get<double>(), aep["j_theta"].get<double>());

    const auto manifest = read_json(dir / "a" / "manifest.json");
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["seed"], 3);
    EXPECT_EQ(manifest["case_hash"], doc["case_hash"]);
    EXPECT_TRUE(manifest["wall_time_s"].is_number());
}

TEST(Cli, OptimizeSeedOverrideChangesResult) {
    const auto dir = scratch("seed");
    const auto c = tiny_case(dir).string();
    ASSERT_EQ(wfopt("optimize " + c + " --mode sequential --seed 1 --out " + (dir / "a").string()).code, 0);
    ASSERT_EQ(wfopt("optimize " + c + " --mode sequential --seed 2 --out " + (dir / "b").string()).code, 0);
    const auto a = read_json(dir / "a" / "result.json");
    const auto b = read_json(dir / "b" / "result.json");
    EXPECT_NE(a["sequential"], b["sequential"]);
    EXPECT_TRUE(a["joint"].is_null());
}

TEST(Cli, FieldGridAndUpstreamEdge) {
    const auto dir = scratch("field");
    const auto r = wfopt("field wf1 --layout wf1 --out " + dir.string());
    EXPECT_EQ(r.code, 1); // "wf1" is not a layout file

    std::ofstream(dir / "layout.csv") << "x,y\n0,800\n";
    const auto ok =
        wfopt("field wf1 --layout " + (dir / "layout.csv").string() + " --state 6 --out " + (dir / "f").string());
    ASSERT_EQ(ok.code, 0) << ok.out;
    const auto meta = read_json(dir / "f" / "field.json");
    EXPECT_EQ(meta["state_index"], 6);
    EXPECT_EQ(meta["wind_dir_deg"], 270.0);
    EXPECT_EQ(meta["resolution"], 10.0);
    EXPECT_EQ(meta["z"], 70.0);

    std::ifstream csv(dir / "f" / "field.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "x,y,u");
    std::size_t rows = 0;
    double first_u = 0.0, min_behind = 1e9;
    while (std::getline(csv, line)) {
        double x, y, u;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &u), 3);
        if (rows == 0) {
            first_u = u;
        }
        if (x == 400.0) {
            min_behind = std::min(min_behind, u);
        }
        ++rows;
    }
    EXPECT_EQ(rows, 161u * 161u);
    EXPECT_NEAR(first_u, 8.8675937808021761, 1e-12);
    EXPECT_LT(min_behind, first_u);
}

TEST(Cli, FieldYawDisplacesWake) {
    const auto dir = scratch("field_yaw");
    std::ofstream(dir / "layout.csv") << "x,y\n0,800\n";
    std::ofstream(dir / "yaw.csv") << "0,0,0,0,0,0,25,0\n";
    const auto ok = wfopt("field wf1 --layout " + (dir / "layout.csv").string() + " --yaw " +
                          (dir / "yaw.csv").string() + " --state 6 --resolution 5 --out " + dir.string());
    ASSERT_EQ(ok.code, 0) << ok.out;
    std::ifstream csv(dir / "field.csv");
    std::string line;
    std::getline(csv, line);
    double best_y = 0.0, best_u = 1e9;
    while (std::getline(csv, line)) {
        double x, y, u;
        std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &u);
        if (x == 480.0 && u < best_u) {
            best_u = u;
            best_y = y;
        }
    }
    EXPECT_GT(best_y, 800.0);
}

TEST(Cli, FieldRejectsBadState) {
    const auto dir = scratch("field_state");
    std::ofstream(dir / "layout.csv") << "0,800\n";
    EXPECT_EQ(wfopt("field wf1 --layout " + (dir / "layout.csv").string() + " --state 9 --out " + dir.string()).code,
              1);
}
