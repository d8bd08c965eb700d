#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "nete/datagen.hpp"
#include "nete/io.hpp"

namespace {

const std::string kWavesurge = std::string(NETE_TEST_DATA_DIR) + "/wavesurge.csv";

TEST(TableCsv, RoundTripIsExact) {
  nete::SyntheticConfig cfg;
  cfg.n = 200;
  cfg.d_x = 3;
  cfg.d_u = 2;
  nete::Rng rng(1);
  const nete::ObservationTable t = nete::generate_synthetic(cfg, rng).table;
  std::stringstream ss;
  nete::write_table_csv(ss, t);
  const nete::ObservationTable back = nete::read_table_csv(ss);
  EXPECT_EQ(back.X, t.X);
  EXPECT_EQ(back.D, t.D);
  EXPECT_EQ(back.Y, t.Y);
  EXPECT_EQ(back.U, t.U);
}

TEST(TableCsv, HeaderOrderIsFree) {
  std::istringstream in("y,u1,d,x1\n1.5,2,1,0.25\n-3,0.5,0,1\n");
  const auto t = nete::read_table_csv(in);
  ASSERT_EQ(t.n(), 2);
  EXPECT_EQ(t.Y(0), 1.5);
  EXPECT_EQ(t.U(1, 0), 0.5);
  EXPECT_EQ(t.D(0), 1.0);
  EXPECT_EQ(t.X(0, 0), 0.25);
}

TEST(TableCsv, Errors) {
  std::istringstream short_row("x1,d,y,u1\n0.1,1,2,3\n0.2,1,2\n");
  try {
    nete::read_table_csv(short_row);
    FAIL() << "expected a parse error";
  } catch (const nete::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream bad_number("x1,d,y,u1\n0.1,1,abc,3\n");
  EXPECT_THROW(nete::read_table_csv(bad_number), nete::ParseError);
  std::istringstream bad_header("x1,d,y,z1\n0.1,1,2,3\n");
  EXPECT_THROW(nete::read_table_csv(bad_header), nete::SchemaError);
  std::istringstream bad_treatment("x1,d,y,u1\n0.1,0.5,2,3\n");
  EXPECT_THROW(nete::read_table_csv(bad_treatment), nete::SchemaError);
  std::istringstream nonpositive_u("x1,d,y,u1\n0.1,1,2,0\n");
  EXPECT_THROW(nete::read_table_csv(nonpositive_u), nete::SchemaError);
  EXPECT_THROW(nete::read_table_csv(std::string("/nonexistent/table.csv")), nete::IoError);
}

TEST(Wavesurge, CanonicalFile) {
  const nete::WavesurgeData ws = nete::load_wavesurge(kWavesurge);
  EXPECT_EQ(ws.raw.rows(), 2894);
  EXPECT_EQ(ws.raw.cols(), 2);
  EXPECT_TRUE(ws.warning.empty());
}

TEST(Wavesurge, ShapeAndParseErrors) {
  std::istringstream three("wave,surge,extra\n1,2,3\n");
  EXPECT_THROW(nete::load_wavesurge(three), nete::SchemaError);
  std::istringstream malformed("1,2\n3,x\n");
  try {
    nete::load_wavesurge(malformed);
    FAIL() << "expected a parse error";
  } catch (const nete::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream headerless("1,2\n3,4\n");
  const auto small = nete::load_wavesurge(headerless);
  EXPECT_EQ(small.raw.rows(), 2);
  EXPECT_FALSE(small.warning.empty());
  EXPECT_THROW(nete::load_wavesurge(std::string("/nonexistent/ws.csv")), nete::IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) {
    EXPECT_EQ(std::stod(nete::format_double(v)), v);
  }
}

}  // namespace
