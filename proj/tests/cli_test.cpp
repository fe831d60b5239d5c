// Copyright 2026 The cosine-audit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "cosaudit/cli.hpp"

#include <sstream>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace cosaudit::cli {
namespace {

using cosaudit::testing::TempDir;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {}

  Options options(const json& config) {
    const auto path = dir_.path() / ("config" + std::to_string(configs_++) + ".json");
    io::write_json(path, config);
    Options o;
    o.config_path = path.string();
    o.out_dir = (dir_.path() / "out").string();
    o.log = &log_;
    return o;
  }
  fs::path out() const { return dir_.path() / "out"; }

  static json small_sim() {
    return {{"n", 120}, {"p", 30}, {"C", 3}, {"seed", 2}};
  }

  TempDir dir_;
  std::ostringstream log_;
  int configs_ = 0;
};

TEST_F(CliTest, SimulateWritesDataAndManifest) {
  ASSERT_EQ(cmd_simulate(options({{"sim", small_sim()}})), kExitOk) << log_.str();
  const DataMatrix x = io::read_matrix_csv(out() / "X.csv");
  EXPECT_EQ(x.rows(), 120);
  EXPECT_EQ(x.cols(), 30);
  const json gt = io::read_json(out() / "ground_truth.json");
  EXPECT_EQ(gt["item_cluster"].size(), 30u);
  EXPECT_EQ(gt["config"]["n"], 120);
  const json manifest = io::read_json(out() / "manifest.json");
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_EQ(manifest["seed"], 2);
  EXPECT_EQ(manifest["files"], json::array({"X.csv", "ground_truth.json"}));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, BareSimConfigAndSeedOverride) {
  Options o = options(small_sim());
  o.seed = 77;
  ASSERT_EQ(cmd_simulate(o), kExitOk) << log_.str();
  EXPECT_EQ(io::read_json(out() / "manifest.json")["seed"], 77);
}

TEST_F(CliTest, ConfigErrorsExitTwoAndNameTheKey) {
  EXPECT_EQ(cmd_simulate(options({{"sim", {{"n", 0}}}})), kExitConfig);
  EXPECT_NE(log_.str().find("config error: n:"), std::string::npos) << log_.str();
  EXPECT_EQ(cmd_solve(options({{"sim", small_sim()}, {"solve", {{"family", "x"}}}})),
            kExitConfig);
  EXPECT_EQ(cmd_solve(options({{"sim", small_sim()}, {"solve", {{"rank", 31}}}})), kExitConfig);
  EXPECT_EQ(cmd_solve(options({{"sim", small_sim()}, {"solve", {{"lambda", -1}}}})),
            kExitConfig);
  EXPECT_EQ(cmd_audit(options({{"sim", small_sim()}, {"plan", {{{"objective", 1}}}}})),
            kExitConfig);
  Options missing;
  missing.config_path = (dir_.path() / "nope.json").string();
  missing.log = &log_;
  EXPECT_EQ(cmd_simulate(missing), kExitConfig);
  EXPECT_FALSE(fs::exists(out() / "manifest.json"));
}

TEST_F(CliTest, SolveWritesPair) {
  Options o = options({{"sim", small_sim()}});
  o.rank = 5;
  o.lambda = 2.0;
  o.family = "collapse";
  ASSERT_EQ(cmd_solve(o), kExitOk) << log_.str();
  const EmbeddingPair pair = io::read_pair(out());
  EXPECT_EQ(pair.A.rows(), 30);
  EXPECT_EQ(pair.A.cols(), 5);
  EXPECT_TRUE(pair.scaled);
  EXPECT_EQ(io::read_json(out() / "meta.json")["family"], "collapse");
  EXPECT_LT((pair.B.transpose() * pair.B - DataMatrix::Identity(5, 5)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST_F(CliTest, SolveWithLiteralScalingFile) {
  io::write_text(dir_.path() / "d.csv", "2,0.5,1\n");
  json cfg = {{"sim", small_sim()},
              {"solve", {{"rank", 3}, {"lambda", 1.0},
                         {"scaling_file", (dir_.path() / "d.csv").string()}}}};
  ASSERT_EQ(cmd_solve(options(cfg)), kExitOk) << log_.str();
  EXPECT_EQ(io::read_json(out() / "meta.json")["family"], "literal");
  cfg["solve"]["family"] = "inverse";
  EXPECT_EQ(cmd_solve(options(cfg)), kExitConfig);
  io::write_text(dir_.path() / "d.csv", "2,0,1\n");
  cfg["solve"].erase("family");
  EXPECT_EQ(cmd_solve(options(cfg)), kExitConfig);
}

TEST_F(CliTest, SolveStandardizedRecordsParameters) {
  Options o = options({{"input", {{"dense", {{"n", 30}, {"p", 6}}}}}});
  o.rank = 3;
  o.standardize = true;
  ASSERT_EQ(cmd_solve(o), kExitOk) << log_.str();
  const json st = io::read_json(out() / "standardization.json");
  EXPECT_EQ(st["column_means"].size(), 6u);
  EXPECT_EQ(st["std_divisor"], "n-1");
}

TEST_F(CliTest, SimilarityExportsAllKinds) {
  Options o = options({{"sim", small_sim()}});
  o.rank = 4;
  o.lambda = 1.0;
  o.metric = "dot";
  ASSERT_EQ(cmd_similarity(o), kExitOk) << log_.str();
  for (const char* stem : {"item-item_dot", "user-user_dot", "user-item_dot"}) {
    EXPECT_TRUE(fs::exists(out() / (std::string(stem) + ".csv"))) << stem;
    EXPECT_TRUE(fs::exists(out() / (std::string(stem) + ".pgm"))) << stem;
  }
  const DataMatrix ui = io::read_matrix_csv(out() / "user-item_dot.csv");
  EXPECT_EQ(ui.rows(), 120);
  EXPECT_EQ(ui.cols(), 30);
}

TEST_F(CliTest, AuditWritesReportPerConfiguration) {
  Options o = options({{"sim", small_sim()}});
  o.rank = 6;
  ASSERT_EQ(cmd_audit(o), kExitOk) << log_.str();
  const json report = io::read_json(out() / "report.json");
  ASSERT_EQ(report["configurations"].size(), 4u);
  EXPECT_TRUE(fs::exists(out() / "config_0_obj1_collapse.csv"));
  EXPECT_TRUE(fs::exists(out() / "config_3_obj2_identity.pgm"));
  EXPECT_TRUE(fs::exists(out() / "ground_truth.pgm"));
  EXPECT_EQ(report["provenance"]["plan"][0]["rank"], 6);
  EXPECT_FALSE(report["provenance"]["config"].contains("output"));
}

TEST_F(CliTest, AuditWithFullRankPlanAddsIdentityChecks) {
  json plan = json::array({{{"objective", 1}, {"lambda", 10.0}, {"rank", 30},
                            {"family", "collapse"}}});
  ASSERT_EQ(cmd_audit(options({{"sim", small_sim()}, {"plan", plan}})), kExitOk) << log_.str();
  EXPECT_TRUE(io::read_json(out() / "report.json").contains("full_rank"));
}

TEST_F(CliTest, AuditNeedsGroundTruth) {
  EXPECT_EQ(cmd_audit(options({{"input", {{"dense", json::object()}}}})), kExitConfig);
}

TEST_F(CliTest, FullRankCheckDefaultsPass) {
  Options o;
  o.out_dir = out().string();
  o.log = &log_;
  ASSERT_EQ(cmd_fullrank_check(o), kExitOk) << log_.str();
  const json report = io::read_json(out() / "fullrank_report.json");
  EXPECT_EQ(report["p"], 50);
  EXPECT_EQ(report["passed"], true);
}

TEST_F(CliTest, FullRankCheckRejectsWrongRank) {
  Options o = options(json::object());
  o.rank = 10;
  EXPECT_EQ(cmd_fullrank_check(o), kExitConfig);
  EXPECT_EQ(cmd_fullrank_check(options({{"input", {{"dense", {{"n", 5}, {"p", 8}}}}}})),
            kExitConfig);
}

TEST_F(CliTest, FailedRunLeavesNoPartialOutputs) {
  // The unknown kind is rejected before anything is written.
  Options o = options({{"sim", small_sim()}, {"similarity", {{"kinds", {"item-item", "x"}}}}});
  EXPECT_EQ(cmd_similarity(o), kExitConfig);
  EXPECT_FALSE(fs::exists(out()) && !fs::is_empty(out()));
}

TEST_F(CliTest, ManifestHashIgnoresOutputDirectory) {
  Options a = options({{"sim", small_sim()}});
  ASSERT_EQ(cmd_simulate(a), kExitOk);
  const std::string h1 = io::read_json(out() / "manifest.json")["config_hash"];
  Options b = options({{"sim", small_sim()}});
  b.out_dir = (dir_.path() / "elsewhere").string();
  ASSERT_EQ(cmd_simulate(b), kExitOk);
  EXPECT_EQ(io::read_json(dir_.path() / "elsewhere" / "manifest.json")["config_hash"], h1);
}

TEST(WorkerThreads, EnvironmentCap) {
  ::setenv(kThreadsEnv, "1", 1);
  EXPECT_EQ(detail::worker_threads(), 1u);
  ::setenv(kThreadsEnv, "abc", 1);
  EXPECT_THROW(detail::worker_threads(), ConfigError);
  ::unsetenv(kThreadsEnv);
  EXPECT_GE(detail::worker_threads(), 1u);
}

}  // namespace
}  // namespace cosaudit::cli
