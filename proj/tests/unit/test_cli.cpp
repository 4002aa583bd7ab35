#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "hyperspline/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
namespace hs = hyperspline;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(HYPERSPLINE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("hyperspline_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  }
  void TearDown() override {
    ::unsetenv("SOURCE_DATE_EPOCH");
    fs::remove_all(dir_);
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path config(const std::string& extra, const std::string& data = oracle::treloar_path()) const {
    return write("cfg.json", "{\"data\":\"" + data + "\",\"output\":\"" + (dir_ / "out").string() + "\"" + extra + "}");
  }

  fs::path dir_;
};

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_F(Cli, CalibrateWritesOutputs) {
  const auto cfg = config(R"(,"model":"separable")");
  ASSERT_EQ(run("calibrate --config " + cfg.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "model.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "predictions.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "activation.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "out" / "lcurve.csv"));
}

TEST_F(Cli, CalibrateIsByteDeterministic) {
  const auto cfg = config(R"(,"model":"mapped","lambda_pen":"auto","lcurve_count":7)");
  ASSERT_EQ(run("calibrate --config " + cfg.string() + " --output " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("calibrate --config " + cfg.string() + " --output " + (dir_ / "b").string()), 0);
  for (const char* f : {"model.json", "predictions.csv", "activation.csv", "lcurve.csv"}) {
    EXPECT_EQ(hs::read_text(dir_ / "a" / f), hs::read_text(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, PredictRoundTrip) {
  const auto cfg = config(R"(,"model":"mapped","lambda_pen":1e-5)");
  ASSERT_EQ(run("calibrate --config " + cfg.string()), 0);
  const auto pred = lines(dir_ / "out" / "predictions.csv");
  std::string at = "mode,stretch\n";
  for (std::size_t k = 1; k < pred.size(); ++k) at += pred[k].substr(0, pred[k].find(',', 3)) + "\n";
  at += "UT,1\nUT,12\n";
  const auto at_path = write("at.csv", at);
  ASSERT_EQ(run("predict --model " + (dir_ / "out" / "model.json").string() + " --at " + at_path.string() +
                " --output " + dir_.string()),
            0);
  const auto got = lines(dir_ / "predict.csv");
  ASSERT_EQ(got.size(), pred.size() + 2);
  EXPECT_EQ(got[0], "mode,stretch,stress,extrapolated");
  for (std::size_t k = 1; k < pred.size(); ++k) {
    const double want = std::stod(pred[k].substr(pred[k].rfind(',') + 1));
    std::stringstream ss(got[k]);
    std::string mode, stretch, stress, flag;
    std::getline(ss, mode, ',');
    std::getline(ss, stretch, ',');
    std::getline(ss, stress, ',');
    std::getline(ss, flag, ',');
    EXPECT_NEAR(std::stod(stress), want, 1e-12 * (1.0 + std::abs(want)));
    EXPECT_EQ(flag, "0");
  }
  EXPECT_EQ(got[pred.size()], "UT,1,0,0");
  EXPECT_EQ(got[pred.size() + 1].back(), '1');
}

TEST_F(Cli, InputErrorsExitWithTwoAndWriteNothing) {
  const auto bad = write("bad.csv", "mode,stretch,stress\nUT,1.1,3\nXX,1.2,0.4\n");
  EXPECT_EQ(run("calibrate --config " + config("", bad.string()).string()), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  const auto empty = write("empty.csv", "mode,stretch,stress\n");
  EXPECT_EQ(run("calibrate --config " + config("", empty.string()).string()), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_EQ(run("calibrate --config " + write("k.json", R"({"data":"x","shape":1})").string()), 2);
  EXPECT_EQ(run("calibrate --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("calibrate"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("predict --model " + (dir_ / "none.json").string() + " --at " + (dir_ / "none.csv").string()), 2);
}

TEST_F(Cli, CompareNeedsTwoKinds) {
  const auto cfg = config(R"(,"lambda_pen":1e-5)");
  EXPECT_EQ(run("compare --config " + cfg.string() + " --kinds mapped"), 2);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "summary.csv"));
  ASSERT_EQ(run("compare --config " + cfg.string() + " --kinds separable,mapped"), 0);
  EXPECT_EQ(lines(dir_ / "out" / "summary.csv").size(), 3u);
}

TEST_F(Cli, CompareSummaryIsByteDeterministic) {
  const auto cfg = config(R"(,"lambda_pen":1e-5)");
  ASSERT_EQ(run("compare --config " + cfg.string() + " --kinds separable,surface --output " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("compare --config " + cfg.string() + " --kinds separable,surface --output " + (dir_ / "b").string()), 0);
  EXPECT_EQ(hs::read_text(dir_ / "a" / "summary.csv"), hs::read_text(dir_ / "b" / "summary.csv"));
}

TEST_F(Cli, LCurveWritesTable) {
  const auto cfg = config(R"(,"model":"surface","lcurve_count":6)");
  ASSERT_EQ(run("lcurve --config " + cfg.string()), 0);
  const auto l = lines(dir_ / "out" / "lcurve.csv");
  EXPECT_EQ(l.size(), 7u);
  EXPECT_EQ(l[0], "lambda,misfit,seminorm,kappa,chosen");
}

TEST_F(Cli, NumericalFailureExitsWithThree) {
  // Without width regularization the mapped Jacobian is singular at the apex.
  const auto data = write("apex.csv", "mode,stretch,stress\nUT,1.000000001,0\nUT,1.5,100\nBT,1.5,200\nPS,1.5,150\n");
  EXPECT_EQ(run("calibrate --config " + config(R"(,"model":"mapped","delta":0,"lambda_pen":1e-5)", data.string()).string()),
            3);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}
