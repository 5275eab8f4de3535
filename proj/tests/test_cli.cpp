#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "posekit/rotation.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("posekit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " " + std::string(POSEKIT_CLI) + " " + args + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, GenIsByteStable) {
  ASSERT_EQ(run("gen --object cup --n 200 --seed 9 --out " + path("a.jsonl")), 0);
  ASSERT_EQ(run("gen --object cup --n 200 --seed 9 --out " + path("b.jsonl")), 0);
  ASSERT_EQ(run("gen --object cup --n 200 --seed 10 --out " + path("c.jsonl")), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
}

TEST_F(Cli, EnvironmentSeedOverrides) {
  ASSERT_EQ(run("gen --object cube --n 50 --seed 1 --out " + path("a.jsonl"), "POSEKIT_SEED=44"), 0);
  ASSERT_EQ(run("gen --object cube --n 50 --seed 44 --out " + path("b.jsonl")), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_EQ(run("gen --object cube --n 5 --out " + path("c.jsonl"), "POSEKIT_SEED=abc"), 2);
}

TEST_F(Cli, TrainEvalRerunsAreByteStable) {
  ASSERT_EQ(run("gen --object cube --n 300 --seed 2 --out " + path("train.jsonl")), 0);
  ASSERT_EQ(run("gen --object cube --n 40 --seed 3 --out " + path("test.jsonl")), 0);
  for (const char* tag : {"1", "2"}) {
    const std::string model = path(std::string("m") + tag + ".json");
    ASSERT_EQ(run("train --data " + path("train.jsonl") + " --m 5 --epochs 2 --out " + model), 0);
    ASSERT_EQ(run("eval --data " + path("test.jsonl") + " --model " + model + " --report " +
                  path(std::string("r") + tag + ".json")),
              0);
  }
  EXPECT_EQ(slurp(path("m1.json")), slurp(path("m2.json")));
  EXPECT_EQ(slurp(path("m1.json.log.json")), slurp(path("m2.json.log.json")));
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
  EXPECT_EQ(slurp(path("r1.csv")), slurp(path("r2.csv")));
  const auto report = nlohmann::json::parse(slurp(path("r1.json")));
  EXPECT_EQ(report.at("records").size(), 40u);
  const auto log = nlohmann::json::parse(slurp(path("m1.json.log.json")));
  EXPECT_EQ(log.at("epochs").size(), 2u);
}

TEST_F(Cli, AnalyzeRingIsAmbiguous) {
  std::ofstream out(path("ring.jsonl"));
  nlohmann::json rots = nlohmann::json::array();
  for (int i = 0; i < 30; ++i) {
    const auto q = posekit::testing::rot_z_deg(12.0 * i);
    rots.push_back({q.w(), q.x(), q.y(), q.z()});
  }
  out << nlohmann::json{{"rotations", rots}}.dump() << '\n';
  out.close();
  ASSERT_EQ(run("analyze --hypotheses " + path("ring.jsonl") + " --object cylinder --out " + path("a.json")), 0);
  // One JSON object per hypothesis set.
  std::istringstream lines(slurp(path("a.json")));
  std::string line;
  ASSERT_TRUE(std::getline(lines, line));
  const auto first = nlohmann::json::parse(line);
  EXPECT_TRUE(first.at("ambiguity").at("ambiguous").get<bool>());
  EXPECT_TRUE(first.at("clusters").contains("counts"));
}

TEST_F(Cli, BinghamWritesPlotData) {
  std::ofstream out(path("h.jsonl"));
  nlohmann::json rots = nlohmann::json::array();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    const auto q = posekit::testing::perturb(posekit::UnitQuaternion(), 5.0, rng);
    rots.push_back({q.w(), q.x(), q.y(), q.z()});
  }
  out << nlohmann::json{{"rotations", rots}}.dump() << '\n';
  out.close();
  ASSERT_EQ(run("bingham --hypotheses " + path("h.jsonl") + " --nodes 20000 --grid-res 8 --out " + path("b.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("b.json")));
  EXPECT_FALSE(slurp(path("b.csv")).empty());
  const std::string text = j.dump();
  EXPECT_NE(text.find("\"mode\""), std::string::npos);
  EXPECT_NE(text.find("\"grid\""), std::string::npos);
}

TEST_F(Cli, ErrorsMapToExitCodes) {
  std::ofstream(path("bad.jsonl")) << "{\"format\": \"toyset/1\"\n";
  EXPECT_EQ(run("eval --data " + path("bad.jsonl") + " --model " + path("none.json") + " --report " + path("r.json")), 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("line 1"), std::string::npos);
  std::ofstream(path("v.jsonl")) << "{\"format\": \"toyset/7\"}\n";
  EXPECT_EQ(run("train --data " + path("v.jsonl") + " --m 2 --out " + path("m.json")), 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("version"), std::string::npos);
  EXPECT_EQ(run("gen --object teapot --n 3 --out " + path("x.jsonl")), 2);
  EXPECT_EQ(run("gen --n 3"), 2);
}

TEST_F(Cli, SweepProducesTable) {
  ASSERT_EQ(run("gen --object cube --n 200 --seed 4 --out " + path("d.jsonl")), 0);
  ASSERT_EQ(run("sweep-m --data " + path("d.jsonl") + " --m-list 1,2 --epochs 1 --out " + path("s.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("s.json")));
  ASSERT_EQ(j.at("rows").size(), 2u);
  EXPECT_EQ(j.at("rows").at(0).at("m"), 1);
  EXPECT_EQ(j.at("rows").at(1).at("m"), 2);
}

}  // namespace
