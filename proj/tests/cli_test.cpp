#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mvdisc/io.hpp"

namespace fs = std::filesystem;
using mvdisc::io::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("mvdisc_cli_") + info->name() + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void put(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    std::string get(const std::string& name) const {
        std::ifstream in(path(name));
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Runs the tool; stdout and stderr land in files named out.txt and err.txt.
    int run(const std::string& args) const {
        const std::string cmd = std::string(MVDISC_CLI_PATH) + " " + args + " > " + path("out.txt") + " 2> " + path("err.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, ScoreHandExample) {
    put("d.csv", "y\n0\n0\n1\n");
    put("s.json", R"([{"name":"y","kind":"discrete","arity":2}])");
    ASSERT_EQ(run("score --data " + path("d.csv") + " --schema " + path("s.json")), 0) << get("err.txt");
    auto j = json::parse(get("out.txt"));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_NEAR(j["total"].get<double>(), std::log(1.0 / 12.0), 1e-12);
}

TEST_F(Cli, DiscretizeAllDiscreteGivesTrivialPolicies) {
    put("d.csv", "a,b\n0,1\n1,1\n1,0\n0,0\n");
    put("s.json", R"([{"name":"a","kind":"discrete","arity":2},{"name":"b","kind":"discrete","arity":2}])");
    ASSERT_EQ(run("discretize --data " + path("d.csv") + " --schema " + path("s.json") + " --out " + path("p.json") +
                  " --manifest " + path("m.json")),
              0)
        << get("err.txt");
    auto p = json::parse(get("p.json"));
    EXPECT_TRUE(p["variables"]["a"]["trivial"].get<bool>());
    EXPECT_TRUE(p["variables"]["b"]["trivial"].get<bool>());
    auto m = json::parse(get("m.json"));
    EXPECT_EQ(m["command"], "discretize");
    EXPECT_EQ(m["search"]["r_max"], 3);
    EXPECT_EQ(m["prior"]["alpha"], 1.0);
    EXPECT_TRUE(m.contains("final_total_score"));
}

TEST_F(Cli, RMaxOneForcesSingleInterval) {
    put("d.csv", "x\n0\n1\n9\n10\n");
    put("s.json", R"([{"name":"x","kind":"continuous"}])");
    ASSERT_EQ(run("discretize --data " + path("d.csv") + " --schema " + path("s.json") + " --r-max 1 --out " + path("p.json") + " --out-data " +
                  path("codes.csv")),
              0)
        << get("err.txt");
    EXPECT_TRUE(json::parse(get("p.json"))["variables"]["x"]["thresholds"].empty());
    EXPECT_EQ(get("codes.csv"), "x\n0\n0\n0\n0\n");
}

TEST_F(Cli, DiscretizeWithStructureAndTrace) {
    ASSERT_EQ(run("simulate --random 2,2,1,5 --n 300 --out " + path("d.csv") + " --out-schema " + path("s.json")), 0);
    put("g.json", R"({"schema_version":1,"nodes":["X1","X2"],"edges":[["X1","X2"]]})");
    ASSERT_EQ(run("discretize --data " + path("d.csv") + " --schema " + path("s.json") + " --structure " + path("g.json") +
                  " --out " + path("p.json") + " --trace " + path("t.jsonl")),
              0)
        << get("err.txt");
    std::istringstream lines(get("t.jsonl"));
    std::string line, last;
    double prev = -INFINITY;
    while (std::getline(lines, line)) {
        auto j = json::parse(line);
        if (j["kind"] == "policy") {
            EXPECT_GT(j["total"].get<double>(), prev);
            prev = j["total"].get<double>();
        }
        last = line;
    }
    EXPECT_EQ(json::parse(last)["kind"], "summary");
}

TEST_F(Cli, LearnSingleVariableAndDeterminism) {
    put("one.csv", "x\n0.1\n0.7\n0.3\n0.9\n");
    ASSERT_EQ(run("learn --data " + path("one.csv") + " --out-structure " + path("g.json")), 0) << get("err.txt");
    EXPECT_TRUE(json::parse(get("g.json"))["edges"].empty());

    ASSERT_EQ(run("simulate --random 3,2,2,9 --n 200 --out " + path("d.csv")), 0);
    auto learn = [&](const std::string& tag) {
        return run("learn --data " + path("d.csv") + " --seed 7 --out " + path("p" + tag) + " --out-structure " +
                   path("g" + tag) + " --dot " + path("dot" + tag) + " --trace " + path("t" + tag));
    };
    ASSERT_EQ(learn("1"), 0) << get("err.txt");
    ASSERT_EQ(learn("2"), 0);
    for (auto f : {"p", "g", "dot", "t"}) EXPECT_EQ(get(std::string(f) + "1"), get(std::string(f) + "2")) << f;
    EXPECT_NE(get("dot1").find("digraph"), std::string::npos);
}

TEST_F(Cli, SimulateDeterministic) {
    ASSERT_EQ(run("simulate --random 2,2,1,42 --n 500 --out " + path("a.csv") + " --latent " + path("y.csv") +
                  " --out-mechanism " + path("m.json") + " --manifest " + path("man.json")),
              0)
        << get("err.txt");
    ASSERT_EQ(run("simulate --random 2,2,1,42 --n 500 --out " + path("b.csv")), 0);
    EXPECT_EQ(get("a.csv"), get("b.csv"));
    const auto text = get("a.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 501);

    // the written mechanism reproduces the same data
    ASSERT_EQ(run("simulate --mechanism " + path("m.json") + " --n 500 --out " + path("c.csv")), 0) << get("err.txt");
    EXPECT_EQ(get("a.csv"), get("c.csv"));
}

TEST_F(Cli, GroundTruthPolicyBeatsMergedPolicy) {
    put("m.json", R"({"schema_version":1,"seed":3,"variables":[
        {"name":"X1","parents":[],"cpt":[[0.5,0.5]],"thresholds":[0.0],"bounds":[-1,1]},
        {"name":"X2","parents":["X1"],"cpt":[[0.9,0.1],[0.1,0.9]],"thresholds":[0.0],"bounds":[-1,1]}]})");
    ASSERT_EQ(run("simulate --mechanism " + path("m.json") + " --n 500 --out " + path("d.csv") + " --out-schema " +
                  path("s.json")),
              0)
        << get("err.txt");
    put("g.json", R"({"edges":[["X1","X2"]]})");
    put("truth.json", R"({"variables":{"X1":{"thresholds":[0.0],"bounds":[-1,1],"trivial":false},
                                     "X2":{"thresholds":[0.0],"bounds":[-1,1],"trivial":false}}})");
    put("merged.json", R"({"variables":{"X1":{"thresholds":[],"bounds":[-1,1],"trivial":false},
                                      "X2":{"thresholds":[],"bounds":[-1,1],"trivial":false}}})");
    const std::string common = "score --data " + path("d.csv") + " --schema " + path("s.json") + " --structure " + path("g.json");
    ASSERT_EQ(run(common + " --policy " + path("truth.json")), 0) << get("err.txt");
    const double truth = json::parse(get("out.txt"))["total"].get<double>();
    ASSERT_EQ(run(common + " --policy " + path("merged.json")), 0) << get("err.txt");
    const double merged = json::parse(get("out.txt"))["total"].get<double>();
    EXPECT_GT(truth, merged);
}

TEST_F(Cli, InputErrorsExitTwo) {
    put("d.csv", "y\n0\n0\n1\n");
    put("s.json", R"([{"name":"y","kind":"discrete","arity":2}])");
    put("bad_policy.json", R"({"variables":{"y":{"thresholds":[],"trivial":true,"arity":3}}})");
    EXPECT_EQ(run("score --data " + path("d.csv") + " --schema " + path("s.json") + " --policy " + path("bad_policy.json")), 2);
    EXPECT_NE(get("err.txt").find("'y'"), std::string::npos) << get("err.txt");

    put("m.json", "{ not json");
    EXPECT_EQ(run("simulate --mechanism " + path("m.json") + " --n 10"), 2);
    EXPECT_EQ(run("simulate --random 2,2,1,1 --n 0"), 2);
    EXPECT_EQ(run("discretize --data " + path("missing.csv")), 2);
    EXPECT_EQ(run("discretize --data " + path("d.csv") + " --bogus"), 2);
    EXPECT_EQ(run("nonsense"), 2);
    EXPECT_EQ(run("discretize --data " + path("d.csv") + " --policy-prior gamma"), 2);

    put("empty_cell.csv", "a,b\n1,2\n3,\n");
    EXPECT_EQ(run("discretize --data " + path("empty_cell.csv")), 2);
    EXPECT_NE(get("err.txt").find("row 2"), std::string::npos) << get("err.txt");

    put("cyclic.json", R"({"edges":[["y","y"]]})");
    EXPECT_EQ(run("score --data " + path("d.csv") + " --schema " + path("s.json") + " --structure " + path("cyclic.json")), 2);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }
