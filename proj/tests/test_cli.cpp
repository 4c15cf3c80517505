#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ccs/ccs.hpp"

using namespace ccs;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CCS_CLI_PATH;
const std::string kData = CCS_TEST_DATA_DIR;

int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = kCli + " " + args + " > /dev/null";
  cmd += err.empty() ? " 2>/dev/null" : " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ccs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& extra = "") {
    const fs::path p = dir_ / "desk.cfg";
    std::ofstream(p) << "M=8\nN=16\nL0=25\nK=2\nkappa=3\nn_ite=5\nseed=1\nj0=200\n" << extra;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, TrainWritesModelAndTrace) {
  const auto cfg = write_config();
  const auto model = dir_ / "m.ccsm", trace = dir_ / "trace.csv";
  ASSERT_EQ(run("train -q -c " + cfg.string() + " -d " + kData + "/train -o " + model.string() + " --trace " +
                trace.string()),
            0);
  EXPECT_NO_THROW(load_model(model.string()));
  const std::string t = slurp(trace);
  EXPECT_EQ(t.substr(0, t.find('\n')), "iter,objective,decrease,dW2,c1_dW2");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 7);
}

TEST_F(Cli, MissingDataIsIoError) {
  const auto cfg = write_config();
  EXPECT_EQ(run("train -c " + cfg.string() + " -d " + (dir_ / "nope").string() + " -o " + (dir_ / "m").string()), 3);
}

TEST_F(Cli, LargeStepIsConfigError) {
  const auto cfg = write_config("nu4=0.5\n");
  const auto err = dir_ / "err.txt";
  EXPECT_EQ(run("train -c " + cfg.string() + " -d " + kData + "/train -o " + (dir_ / "m").string(), err), 2);
  EXPECT_NE(slurp(err).find("nu4 < 1/L_cs"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("train"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, EvalTrivialModel) {
  CcsModel m;
  m.config.M = 8;
  m.config.N = 16;
  m.config.L0 = 16;
  m.config.K = 1;
  m.config.kappa = 3;
  m.config.nu4 = m.config.default_step();
  Mat phi = Mat::Zero(8, 16);
  phi.leftCols(8).setIdentity();
  m.phi = SensingMatrix(phi);
  m.dictionaries.emplace_back(Mat::Identity(16, 16));
  save_model((dir_ / "m.ccsm").string(), m);
  Mat img = Mat::Constant(8, 8, 100.0);
  img(0, 0) = 200.0;
  write_pgm((dir_ / "img.pgm").string(), img);
  const auto csv = dir_ / "metrics.csv";
  ASSERT_EQ(run("eval -m " + (dir_ / "m.ccsm").string() + " " + (dir_ / "img.pgm").string() + " --metrics " +
                csv.string() + " --out-dir " + (dir_ / "out").string()),
            0);
  const std::string t = slurp(csv);
  EXPECT_EQ(t.substr(0, t.find('\n')), "image,CS_1,fused");
  const std::string row = t.substr(t.find('\n') + 1);
  EXPECT_EQ(row.substr(0, 8), "img.pgm,");
  EXPECT_TRUE(std::isfinite(std::stod(row.substr(8))));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "img_ccs.pgm"));
}

TEST_F(Cli, MalformedPgmIsIoError) {
  CcsModel m;
  m.config.M = 2;
  m.config.N = 4;
  m.config.L0 = 4;
  m.config.K = 1;
  m.config.kappa = 1;
  Mat phi = Mat::Zero(2, 4);
  phi.leftCols(2).setIdentity();
  m.phi = SensingMatrix(phi);
  m.dictionaries.emplace_back(Mat::Identity(4, 4));
  save_model((dir_ / "m.ccsm").string(), m);
  std::ofstream(dir_ / "bad.pgm") << "P5\n4 4\n255\nxx";
  EXPECT_EQ(run("eval -m " + (dir_ / "m.ccsm").string() + " " + (dir_ / "bad.pgm").string() + " --metrics " +
                (dir_ / "x.csv").string()),
            3);
}

TEST_F(Cli, CompressReconstructAndDiagnose) {
  const auto cfg = write_config();
  const auto model = dir_ / "m.ccsm";
  ASSERT_EQ(run("train -q -c " + cfg.string() + " -d " + kData + "/train -o " + model.string() + " --trace " +
                (dir_ / "t.csv").string()),
            0);
  const std::string img = kData + "/test/camera.pgm";
  ASSERT_EQ(run("compress -m " + model.string() + " -i " + img + " -o " + (dir_ / "y.ccsy").string()), 0);
  ASSERT_EQ(run("reconstruct -m " + model.string() + " -i " + (dir_ / "y.ccsy").string() + " -o " +
                (dir_ / "r.pgm").string()),
            0);
  const Mat rec = read_pgm((dir_ / "r.pgm").string());
  EXPECT_EQ(rec.rows(), 256);
  EXPECT_GT(psnr(read_pgm(img), rec), 15.0);

  const auto out = dir_ / "diag.txt";
  ASSERT_EQ(std::system((kCli + " diagnose --trials 500 -m " + model.string() + " > " + out.string()).c_str()), 0);
  const std::string d = slurp(out);
  EXPECT_NE(d.find("welch_bound"), std::string::npos);
  EXPECT_NE(d.find("equivalent_coherence"), std::string::npos);
  EXPECT_EQ(d.find("nan"), std::string::npos);
}

TEST_F(Cli, DemoMleCsv) {
  const auto a = dir_ / "a.csv", s = dir_ / "s.csv", c = dir_ / "c.csv";
  ASSERT_EQ(run("demo-mle --n 6 --k 3 --j 100 --out " + a.string() + " --sweep-out " + s.string() + " --corr-out " +
                c.string()),
            0);
  const std::string t = slurp(a);
  EXPECT_EQ(t.substr(0, t.find('\n')), "i,Ind_i,MLE1_i,MLE2_i,MLE3_i");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 4);
  EXPECT_EQ(read_matrix_csv(c.string()).rows(), 18);
  // Same seed, same bytes.
  const auto a2 = dir_ / "a2.csv";
  ASSERT_EQ(run("demo-mle --n 6 --k 3 --j 100 --sweep-out '' --out " + a2.string()), 0);
  EXPECT_EQ(slurp(a2), t);
}
