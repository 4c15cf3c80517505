#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ccs/ccs.hpp"
#include "oracles.hpp"

using namespace ccs;
namespace fs = std::filesystem;

namespace {

CcsModel model(std::uint64_t seed) {
  CounterRng rng(seed);
  CcsModel m;
  m.config = DesignConfig::reference_defaults();
  m.config.M = 4;
  m.config.N = 9;
  m.config.L0 = 12;
  m.config.K = 2;
  m.config.kappa = 2;
  m.config.nu4 = m.config.default_step();
  m.config.b = 2550.0;
  m.config.seed = 77;
  m.phi = SensingMatrix(oracle::random_orthonormal_rows(4, 9, rng));
  for (int i = 0; i < 2; ++i) m.dictionaries.push_back(Dictionary::normalized(gaussian_matrix(9, 12, rng)));
  return m;
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ccs_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(ModelFile, RoundTripIsBitwise) {
  const CcsModel m = model(1);
  const auto bytes = serialize_model(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CCSM");
  const CcsModel back = deserialize_model(bytes);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_EQ(back.phi.matrix(), m.phi.matrix());
  EXPECT_EQ(back.config.seed, 77u);
  EXPECT_EQ(*back.config.b, 2550.0);

  const auto dir = scratch_dir("model");
  save_model((dir / "m.ccsm").string(), m);
  EXPECT_EQ(read_file((dir / "m.ccsm").string()), bytes);
  fs::remove_all(dir);
}

TEST(ModelFile, CorruptionIsRejected) {
  auto bytes = serialize_model(model(2));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_model(bad), IoError);
  auto trunc = bytes;
  trunc.resize(trunc.size() - 3);
  EXPECT_THROW(deserialize_model(trunc), IoError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(deserialize_model(extra), IoError);
  EXPECT_THROW(load_model("/nonexistent/m.ccsm"), IoError);
}

TEST(ModelFile, TightFrameIsRequiredByDefault) {
  CcsModel m = model(3);
  m.phi = SensingMatrix(2.0 * m.phi.matrix());
  const auto bytes = serialize_model(m);
  EXPECT_THROW(deserialize_model(bytes), InfeasibleError);
  EXPECT_NO_THROW(deserialize_model(bytes, false));
}

TEST(Measurements, RoundTrip) {
  CounterRng rng(4);
  Measurements m{gaussian_matrix(5, 6, rng), {}};
  m.grid.p = 3;
  m.grid.rows = 2;
  m.grid.cols = 3;
  m.grid.height = 7;
  m.grid.width = 10;
  const auto dir = scratch_dir("meas");
  save_measurements((dir / "y.ccsy").string(), m);
  const Measurements back = load_measurements((dir / "y.ccsy").string());
  EXPECT_EQ(back.Y, m.Y);
  EXPECT_EQ(back.grid.cols, 3);
  EXPECT_EQ(back.grid.width, 10);
  fs::remove_all(dir);
}

TEST(Config, ParsesAndValidates) {
  const TrainSettings s = parse_config(
      "# desk run\nM = 8\nN=16\nL0=25\nK=2\nkappa=3\nalpha=0.2\nbeta=1\nnu1=1e-4\nnu2=1e-4\nnu3=1e-4\n"
      "nu4=auto\nb=auto\nn_ite=30\nseed=5\nj0=200\nearly_stop=false\n");
  EXPECT_EQ(s.design.M, 8);
  EXPECT_EQ(s.design.L0, 25);
  EXPECT_EQ(s.j0, 200);
  EXPECT_EQ(s.design.seed, 5u);
  EXPECT_FALSE(s.design.b.has_value());
  EXPECT_NEAR(s.design.nu4, 1.0 / (3.0 * 2.2 * 25.0), 1e-18);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("M=8\nbogus=1\n"), ConfigError);
  EXPECT_THROW(parse_config("M=8\nM=9\n"), ConfigError);
  EXPECT_THROW(parse_config("M=eight\n"), ConfigError);
  EXPECT_THROW(parse_config("M 8\n"), ConfigError);
  try {
    parse_config("nu4=0.01\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("1/L_cs"), std::string::npos);
  }
  EXPECT_THROW(load_config("/nonexistent.cfg"), IoError);
}

TEST(Csv, FormatAndMatrixRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  CounterRng rng(5);
  const Mat m = gaussian_matrix(4, 3, rng);
  const auto dir = scratch_dir("csv");
  write_matrix_csv((dir / "m.csv").string(), m);
  EXPECT_EQ(read_matrix_csv((dir / "m.csv").string()), m);
  std::ifstream in(dir / "m.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "c0,c1,c2");
  fs::remove_all(dir);
}
