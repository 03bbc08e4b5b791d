#include <gtest/gtest.h>

#include <fstream>

#include "fbptf/io.hpp"
#include "support.hpp"

using namespace fbptf;
using fbptf::test_support::TempDir;

TEST(Io, CsvRoundTripIsBitwise) {
  TempDir dir;
  Engine gen(3);
  Matrix m = test_support::gaussian(5, 4, gen, 1e3);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  m(2, 2) = 5e-310;  // subnormal
  io::write_matrix_csv(dir / "m.csv", m);
  const Matrix back = io::read_matrix_csv(dir / "m.csv");
  ASSERT_EQ(back.rows(), 5);
  ASSERT_EQ(back.cols(), 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}

TEST(Io, SeventeenSignificantDigits) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(1.0), "1");
}

TEST(Io, SchemaErrorsCarryPosition) {
  TempDir dir;
  io::write_atomic(dir / "bad.csv", "1,2,3\n4,x,6\n");
  try {
    io::read_matrix_csv(dir / "bad.csv");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 2u);
  }
  io::write_atomic(dir / "ragged.csv", "1,2,3\n4,5\n");
  EXPECT_THROW(io::read_matrix_csv(dir / "ragged.csv"), SchemaError);
  io::write_atomic(dir / "nan.csv", "1,nan\n");
  EXPECT_THROW(io::read_matrix_csv(dir / "nan.csv"), SchemaError);
}

TEST(Io, AtomicWriteLeavesNoTempFile) {
  TempDir dir;
  io::write_atomic(dir / "sub" / "f.txt", "hello");
  EXPECT_EQ(io::read_text(dir / "sub" / "f.txt"), "hello");
  io::write_atomic(dir / "sub" / "f.txt", "again");
  EXPECT_EQ(io::read_text(dir / "sub" / "f.txt"), "again");
  EXPECT_FALSE(std::filesystem::exists(dir / "sub" / "f.txt.tmp"));
}

TEST(Io, KeyValues) {
  const auto kv = io::parse_key_values("# comment\n a = 1 \n\nb.c=two words # trailing\n", "f");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b.c"), "two words");
  EXPECT_THROW(io::parse_key_values("a = 1\na = 2\n", "f"), SchemaError);
  EXPECT_THROW(io::parse_key_values("no equals sign\n", "f"), SchemaError);
  EXPECT_EQ(io::format_key_values({{"x", "1"}, {"y", "z"}}), "x = 1\ny = z\n");
}
