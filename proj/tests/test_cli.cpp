#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "camboost/commands.hpp"
#include "camboost/network.hpp"

namespace fs = std::filesystem;
using namespace camboost;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Small problem so each command finishes in well under a second.
const std::vector<std::string> kTiny{"n_train=80", "n_test=40", "height=16", "width=16", "blob_min=3",
                                     "blob_max=5", "conv_channels=4,6", "epochs=2"};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("camboost_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& cmd, const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{cmd, "out=" + (dir_ / out).string(), "data_dir=" + (dir_ / "data").string()};
    args.insert(args.end(), kTiny.begin(), kTiny.end());
    args.insert(args.end(), extra.begin(), extra.end());
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    stdout_ = o.str();
    stderr_ = e.str();
    return code;
  }

  fs::path dir_;
  std::string stdout_, stderr_;
};

}  // namespace

TEST_F(Cli, GenIsByteIdenticalForSameSeed) {
  ASSERT_EQ(run("gen", "g1", {"seed=7", "data_dir=" + (dir_ / "d1").string()}), 0) << stderr_;
  ASSERT_EQ(run("gen", "g2", {"seed=7", "data_dir=" + (dir_ / "d2").string()}), 0) << stderr_;
  EXPECT_EQ(slurp(dir_ / "d1" / "train.ds"), slurp(dir_ / "d2" / "train.ds"));
  EXPECT_EQ(slurp(dir_ / "d1" / "test.ds"), slurp(dir_ / "d2" / "test.ds"));
  EXPECT_EQ(slurp(dir_ / "g1" / "gen_summary.csv"), slurp(dir_ / "g2" / "gen_summary.csv"));
}

TEST_F(Cli, GenSparsityForSinglePositive) {
  ASSERT_EQ(run("gen", "g"), 0) << stderr_;
  const auto rows = lines(dir_ / "g" / "gen_sparsity.csv");
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[1].rfind("train,80,1,0,5,80", 0), 0u) << rows[1];
  EXPECT_TRUE(fs::exists(dir_ / "g" / "resolved_config_gen.txt"));
}

TEST_F(Cli, UnknownKeyFailsNamingIt) {
  EXPECT_NE(run("gen", "g", {"blobsize=3"}), 0);
  EXPECT_NE(stderr_.find("blobsize"), std::string::npos);
  EXPECT_NE(run("frobnicate", "g"), 0);
  EXPECT_NE(run("gen", "g", {"--ll", "zz"}), 0);
}

TEST_F(Cli, MissingDatasetIsIoError) {
  EXPECT_EQ(run("train", "t"), 2);
  EXPECT_NE(stderr_.find("error: io"), std::string::npos) << stderr_;
}

TEST_F(Cli, TrainFlagsAndMetadata) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "row7", {"--ll", "r", "--boost-train", "--boost-infer"}), 0) << stderr_;
  const auto meta = slurp(dir_ / "row7" / "train_meta.txt");
  EXPECT_NE(meta.find("configuration=ablation-row-7"), std::string::npos) << meta;
  EXPECT_TRUE(fs::exists(dir_ / "row7" / "ll_log.csv"));

  ASSERT_EQ(run("train", "suppb", {"--boost-train"}), 0) << stderr_;
  EXPECT_NE(slurp(dir_ / "suppb" / "train_meta.txt").find("train_boost_without_inference_boost=true"),
            std::string::npos);

  ASSERT_EQ(run("train", "plain"), 0) << stderr_;
  EXPECT_NE(slurp(dir_ / "plain" / "train_meta.txt").find("configuration=ablation-row-1"), std::string::npos);
  const auto hist = lines(dir_ / "plain" / "history.csv");
  EXPECT_EQ(hist.size(), 3u);
}

TEST_F(Cli, TrainIsReproducible) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "a", {"--ll", "ct"}), 0) << stderr_;
  ASSERT_EQ(run("train", "b", {"--ll", "ct"}), 0) << stderr_;
  EXPECT_EQ(slurp(dir_ / "a" / "checkpoint.bin"), slurp(dir_ / "b" / "checkpoint.bin"));
  EXPECT_EQ(slurp(dir_ / "a" / "history.csv"), slurp(dir_ / "b" / "history.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "ll_log.csv"), slurp(dir_ / "b" / "ll_log.csv"));
}

TEST_F(Cli, EvalColumnsAndIdentityBoost) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "t"), 0);
  const auto ckpt = "checkpoint=" + (dir_ / "t" / "checkpoint.bin").string();
  ASSERT_EQ(run("eval", "e1", {ckpt}), 0) << stderr_;
  EXPECT_EQ(lines(dir_ / "e1" / "eval_metrics.csv")[0], "samples,skipped_classes,map_unboosted");
  ASSERT_EQ(run("eval", "e2", {ckpt, "--boost-infer", "alpha=1"}), 0) << stderr_;
  const auto rows = lines(dir_ / "e2" / "eval_metrics.csv");
  EXPECT_EQ(rows[0], "samples,skipped_classes,map_unboosted,alpha,beta,map_boosted");
  std::vector<std::string> cells;
  std::stringstream ss(rows[1]);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[2], cells[5]);
}

TEST_F(Cli, EvalOfRandomNetNearChance) {
  ASSERT_EQ(run("gen", "g", {"n_test=300"}), 0);
  ASSERT_EQ(run("train", "t", {"epochs=0", "n_test=300"}), 0) << stderr_;
  const auto ckpt = "checkpoint=" + (dir_ / "t" / "checkpoint.bin").string();
  ASSERT_EQ(run("eval", "e", {ckpt, "n_test=300"}), 0) << stderr_;
  const auto row = lines(dir_ / "e" / "eval_metrics.csv")[1];
  const double map = std::stod(row.substr(row.rfind(',') + 1));
  // random ranking: AP near the positive rate (2/6 per class)
  EXPECT_GT(map, 0.2);
  EXPECT_LT(map, 0.6);
}

TEST_F(Cli, EvalRejectsMismatchedCheckpoint) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "t", {"classes=5", "data_dir=" + (dir_ / "d5").string()}), 2);  // no data yet
  ASSERT_EQ(run("gen", "g5", {"classes=5", "data_dir=" + (dir_ / "d5").string()}), 0);
  ASSERT_EQ(run("train", "t5", {"classes=5", "data_dir=" + (dir_ / "d5").string()}), 0) << stderr_;
  EXPECT_EQ(run("eval", "e", {"checkpoint=" + (dir_ / "t5" / "checkpoint.bin").string()}), 2);
  EXPECT_NE(stderr_.find("dimension"), std::string::npos) << stderr_;
}

TEST_F(Cli, ExplainSelfComparisonAndCamExports) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "t"), 0);
  const auto ckpt = (dir_ / "t" / "checkpoint.bin").string();
  ASSERT_EQ(run("explain", "x", {"checkpoint_a=" + ckpt, "checkpoint_b=" + ckpt, "--boost-infer", "cam_exports=2"}),
            0)
      << stderr_;
  const auto rows = lines(dir_ / "x" / "explain.csv");
  ASSERT_EQ(rows.size(), 1u + 40u * 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::stringstream ss(rows[i]);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    EXPECT_EQ(cells[3], "1") << rows[i];
  }

  // Exported CAM CSVs reproduce the logits as spatial means.
  const CamNet net = load_checkpoint(ckpt);
  const Dataset test = load_dataset(dir_ / "data" / "test.ds");
  std::size_t checked = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "x" / "cams")) {
    const auto name = entry.path().filename().string();
    if (name.rfind("cam_a_s", 0) != 0 || name.find("_raw.csv") == std::string::npos) continue;
    const auto s = std::stoul(name.substr(7));
    const auto c = std::stoul(name.substr(name.find("_c", 6) + 2));
    std::size_t h = 0, w = 0;
    const auto values = read_cam_csv(entry.path(), h, w);
    ASSERT_EQ(h * w, 256u);
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    EXPECT_NEAR(mean, forward_logits(net, test.samples[s].image, std::nullopt)[c], 1e-6);
    EXPECT_TRUE(fs::exists(dir_ / "x" / "cams" / (name.substr(0, name.size() - 8) + "_raw.pgm")));
    EXPECT_TRUE(fs::exists(dir_ / "x" / "cams" / (name.substr(0, name.size() - 8) + "_boosted.csv")));
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST_F(Cli, ExplainRejectsArchitectureMismatch) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("train", "t1"), 0);
  ASSERT_EQ(run("train", "t2", {"conv_channels=4,8"}), 0);
  EXPECT_EQ(run("explain", "x",
                {"checkpoint_a=" + (dir_ / "t1" / "checkpoint.bin").string(),
                 "checkpoint_b=" + (dir_ / "t2" / "checkpoint.bin").string()}),
            2);
}

TEST_F(Cli, SweepCardinalityIdentityAndDeterminism) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("sweep", "s1", {"alphas=1,3", "betas=0,0.2,0.5", "epochs=1"}), 0) << stderr_;
  EXPECT_EQ(lines(dir_ / "s1" / "sweep.csv").size(), 1u + 6u);
  ASSERT_EQ(run("sweep", "s2", {"alphas=1,3", "betas=0,0.2,0.5", "epochs=1"}), 0);
  EXPECT_EQ(slurp(dir_ / "s1" / "sweep.csv"), slurp(dir_ / "s2" / "sweep.csv"));

  ASSERT_EQ(run("sweep", "s3", {"alphas=1", "betas=0", "sweep_ll=none"}), 0) << stderr_;
  ASSERT_EQ(run("train", "plain"), 0);
  const auto sweep_row = lines(dir_ / "s3" / "sweep.csv")[1];
  const double swept = std::stod(sweep_row.substr(sweep_row.rfind(',') + 1));
  const auto meta = slurp(dir_ / "plain" / "train_meta.txt");
  const auto pos = meta.find("test_map=") + 9;
  EXPECT_NEAR(swept, std::stod(meta.substr(pos)), 1e-12);
}

TEST_F(Cli, AblateEmitsSevenRows) {
  ASSERT_EQ(run("gen", "g"), 0);
  ASSERT_EQ(run("ablate", "a", {"epochs=1"}), 0) << stderr_;
  const auto rows = lines(dir_ / "a" / "ablation.csv");
  ASSERT_EQ(rows.size(), 8u);
  for (int r = 1; r <= 7; ++r) EXPECT_EQ(rows[r].rfind(std::to_string(r) + ",", 0), 0u);
}
