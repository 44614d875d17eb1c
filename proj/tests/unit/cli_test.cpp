#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "synth.hpp"
#include "thermfuse/detect.hpp"
#include "thermfuse/pgm.hpp"

namespace thermfuse::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  const auto bytes = read_file(p);
  return {bytes.begin(), bytes.end()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = testing::scratch_dir(std::string("cli_") +
                                ::testing::UnitTest::GetInstance()->current_test_info()->name());
    phantom_ = testing::make_phantom(77);
    save_pgm(dir_ / "t.pgm", phantom_.thermal);
    save_pgm(dir_ / "v.pgm", phantom_.visible);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  testing::Phantom phantom_;
};

TEST_F(CliTest, DetectWritesBoxAndCrop) {
  const auto r = invoke({"detect", "--in", path("t.pgm"), "--out-box", path("box.txt"),
                         "--out-crop", path("face.pgm")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream box(slurp(path("box.txt")));
  FaceBox b;
  box >> b.x0 >> b.y0 >> b.width >> b.height;
  ASSERT_TRUE(box);
  EXPECT_GE(iou(b, phantom_.face), 0.9);
  const auto face = load_pgm(path("face.pgm"));
  EXPECT_EQ(face.width(), b.width);
  EXPECT_EQ(face.height(), b.height);
}

TEST_F(CliTest, FuseLambdaZeroKeepsThermal) {
  const auto r = invoke({"fuse", "--ir", path("t.pgm"), "--vi", path("v.pgm"), "--lambda", "0",
                         "--out", path("f.pgm")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto f = load_pgm(path("f.pgm"));
  int worst = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    worst = std::max(worst, std::abs(int(f[i]) - int(phantom_.thermal[i])));
  }
  EXPECT_LE(worst, 1);
}

TEST_F(CliTest, SweepObjectiveNonDecreasing) {
  // A small crop keeps the run short.
  save_pgm(path("a.pgm"), crop(phantom_.thermal, {60, 40, 24, 24}));
  save_pgm(path("b.pgm"), crop(phantom_.visible, {60, 40, 24, 24}));
  const auto r = invoke({"sweep", "--ir", path("a.pgm"), "--vi", path("b.pgm"), "--lambdas",
                         "0,1,2,4,8", "--out", path("curve.csv"), "--workers", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("curve.csv")));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "objective", "data_term", "tv_term",
                                                "iterations", "converged"}));
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_GE(std::stod(rows[i][1]), std::stod(rows[i - 1][1]) * (1 - 2e-5));
  }
}

TEST_F(CliTest, AugmentWritesNineteenFiles) {
  const auto r = invoke({"augment", "--in", path("t.pgm"), "--out-dir", path("aug")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "aug")) ++n;
  EXPECT_EQ(n, 19u);
  EXPECT_EQ(load_pgm(dir_ / "aug" / "t_rot+00.pgm"), phantom_.thermal);
  EXPECT_TRUE(fs::exists(dir_ / "aug" / "t_rot-90.pgm"));
}

TEST_F(CliTest, EvaluateWritesReport) {
  const auto manifest = testing::write_subject_set(dir_ / "set", {3, 3});
  const auto r = invoke({"evaluate", "--manifest", manifest.string(), "--modes", "thermal,visual",
                         "--out", path("report.csv"), "--seed", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("report.csv")));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"mode", "lambda", "accuracy", "n_test", "seed"}));
  EXPECT_EQ(rows[1][0], "thermal");
  EXPECT_EQ(rows[2][0], "visual");
  EXPECT_EQ(rows[1][4], "4");
}

TEST_F(CliTest, ConvbenchRatiosAgree) {
  const auto r = invoke({"convbench", "--out", path("conv.csv"), "--h-f", "8,16", "--h-k", "1,3",
                         "--m", "4", "--n", "8,64"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_rows(slurp(path("conv.csv")));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].back(), "eq5_ratio");
  bool saw_reference = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][6], rows[i][7]);
    if (rows[i][1] == "3" && rows[i][3] == "64") {
      EXPECT_EQ(rows[i][7], "73/576");
      saw_reference = true;
    }
  }
  EXPECT_TRUE(saw_reference);
}

TEST_F(CliTest, PipelineIsDeterministic) {
  const std::vector<std::string> base{"pipeline", "--ir", path("t.pgm"), "--vi", path("v.pgm"),
                                      "--lambda", "2", "--tol", "1e-4"};
  auto first = base, second = base;
  first.insert(first.end(), {"--out", path("f1.pgm"), "--out-box", path("b1.txt")});
  second.insert(second.end(), {"--out", path("f2.pgm"), "--out-box", path("b2.txt")});
  ASSERT_EQ(invoke(first).code, kExitOk);
  ASSERT_EQ(invoke(second).code, kExitOk);
  EXPECT_EQ(slurp(path("f1.pgm")), slurp(path("f2.pgm")));
  EXPECT_EQ(slurp(path("b1.txt")), slurp(path("b2.txt")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"detect", "--in", path("t.pgm")}).code, kExitUsage);
  EXPECT_EQ(invoke({"detect", "--in", path("t.pgm"), "--out-box", path("b.txt"), "--frobnicate"}).code,
            kExitUsage);
  EXPECT_EQ(invoke({"fuse", "--ir", path("t.pgm"), "--vi", path("v.pgm"), "--out", path("o.pgm"),
                    "--solver", "magic"})
                .code,
            kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);

  const auto missing = invoke({"detect", "--in", path("none.pgm"), "--out-box", path("b.txt")});
  EXPECT_EQ(missing.code, kExitDomain);
  EXPECT_NE(missing.err.find("io error"), std::string::npos) << missing.err;
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

  const auto bad_param =
      invoke({"detect", "--in", path("t.pgm"), "--out-box", path("b.txt"), "--median-k", "4"});
  EXPECT_EQ(bad_param.code, kExitDomain);
  EXPECT_FALSE(fs::exists(path("b.txt")));

  const auto negative = invoke({"fuse", "--ir", path("t.pgm"), "--vi", path("v.pgm"), "--out",
                                path("o.pgm"), "--lambda", "-1"});
  EXPECT_EQ(negative.code, kExitDomain);
  EXPECT_FALSE(fs::exists(path("o.pgm")));
}

}  // namespace
}  // namespace thermfuse::cli
