#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <random>

#include "tms/cost.hpp"
#include "tms/io.hpp"

namespace fs = std::filesystem;
using namespace tms;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("tms_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with `args`, returning its exit code.
  int run(const std::string& args) const {
    const std::string cmd = std::string(TMS_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out(const std::string& sub) const { return (dir_ / sub).string(); }
  std::string read(const std::string& sub) const { return read_text_file(out(sub)); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DatasetManifestCountsAndChecksumIsStable) {
  ASSERT_EQ(run("dataset --seed 1 --groups fusion --out " + out("a")), 0);
  const auto m = json::parse(read("a/dataset_manifest.json"));
  EXPECT_EQ(m["count"], 625);
  EXPECT_EQ(m["provenance"]["seed"], 1);
  ASSERT_EQ(run("dataset --seed 1 --groups fusion --out " + out("b")), 0);
  EXPECT_EQ(json::parse(read("b/dataset_manifest.json"))["checksum"], m["checksum"]);
  EXPECT_EQ(read("a/dataset.csv"), read("b/dataset.csv"));
}

TEST_F(Cli, SingleGroupDataset) {
  ASSERT_EQ(run("dataset --seed 3 --groups 2 --copies 1 --out " + out("g2")), 0);
  const auto items = dataset_from_csv(read("g2/dataset.csv"));
  EXPECT_EQ(items.size(), 26u);
  for (const auto& it : items) EXPECT_EQ(it.info().group, Group::Group2);
}

TEST_F(Cli, MissingSeedIsAUsageError) { EXPECT_EQ(run("dataset --out " + out("x")), 2); }

TEST_F(Cli, TrainTwiceGivesIdenticalNetworks) {
  ASSERT_EQ(run("train --seed 5 --groups 1 --sigma2 0.02 --out " + out("t1")), 0);
  ASSERT_EQ(run("train --seed 5 --groups 1 --sigma2 0.02 --out " + out("t2")), 0);
  EXPECT_EQ(read("t1/network.json"), read("t2/network.json"));
  const auto tn = network_from_json(json::parse(read("t1/network.json")));
  EXPECT_EQ(tn.arch.outputs, 27u);

  ASSERT_EQ(run("eval --seed 5 --network " + out("t1/network.json") + " --sigma2 0,0.02 --out " + out("e")), 0);
  const auto csv = strip_comment_lines(read("e/eval.csv"));
  EXPECT_NE(csv.find("group1,analog,0.02,"), std::string::npos) << csv;
}

TEST_F(Cli, EvalWithoutNetworkFileExitsWithConfigError) {
  EXPECT_EQ(run("eval --seed 1 --network " + out("nope.json") + " --out " + out("e")), 2);
  EXPECT_NE(read("stderr.txt").find("tms train"), std::string::npos);
}

TEST_F(Cli, CostBodyMatchesGolden) {
  ASSERT_EQ(run("cost --out " + out("c")), 0);
  const auto text = read("c/cost.csv");
  EXPECT_EQ(text.rfind("# tool=tms", 0), 0u);
  EXPECT_EQ(strip_comment_lines(text), read_text_file(std::string(TMS_DATA_DIR) + "/table3_golden.csv"));
  EXPECT_EQ(strip_comment_lines(read("c/cost_orderings.csv")).find("false"), std::string::npos);
}

TEST_F(Cli, ZeroCostTableGivesZeroReport) {
  FlatConfig cfg;
  CostTable::zero().write_to(cfg);
  {
    std::ofstream f(out("zero.cfg"));
    f << cfg.canonical_text();
  }
  ASSERT_EQ(run("cost --table " + out("zero.cfg") + " --out " + out("z")), 0);
  const auto body = strip_comment_lines(read("z/cost.csv"));
  const auto total = body.substr(body.find("total"));
  EXPECT_EQ(total, "total,0,0,0,0,0,0,0,0\n");
}

TEST_F(Cli, LeakageSummaryInBand) {
  ASSERT_EQ(run("leakage --wire-resistance 0,900 --g-off 1e-8 --out " + out("l")), 0);
  const auto s = json::parse(read("l/leakage_summary.json"));
  EXPECT_TRUE(s["in_band_0_12_0_20"].get<bool>());
  EXPECT_TRUE(s["degenerate_2x2_equal_currents"].get<bool>());
  EXPECT_EQ(s["provenance"]["seed"], nullptr);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run("cost --out " + out("c")), 0);
  EXPECT_EQ(run("cost --out " + out("c")), 2);
  EXPECT_NE(read("stderr.txt").find("--force"), std::string::npos);
  EXPECT_EQ(run("cost --force --out " + out("c")), 0);
}

TEST_F(Cli, EnvironmentOverridesConfig) {
  ::setenv("TMS_DATASET_COPIES", "2", 1);
  const int rc = run("dataset --seed 1 --groups 1 --out " + out("env"));
  ::unsetenv("TMS_DATASET_COPIES");
  ASSERT_EQ(rc, 0);
  EXPECT_EQ(json::parse(read("env/dataset_manifest.json"))["count"], 54);
}
