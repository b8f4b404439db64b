#include "fairmix/io.hpp"
#include "fairmix/rng.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

using namespace fairmix;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(11);
  auto idx = iota_indices(50);
  rng.shuffle(idx);
  std::set<std::size_t> seen(idx.begin(), idx.end());
  EXPECT_EQ(seen.size(), 50u);
  EXPECT_EQ(*seen.rbegin(), 49u);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t stream = 0; stream < 8; ++stream) seeds.insert(derive_seed(s, stream));
  EXPECT_EQ(seeds.size(), 32u);
}

TEST(MatrixText, RoundTripIsExact) {
  Rng rng(5);
  Matrix m = test::random_matrix(rng, 7, 3, -1e6, 1e6);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  m(2, 2) = 5e-300;
  std::stringstream ss;
  write_matrix(ss, m);
  const Matrix back = read_matrix(ss);
  ASSERT_EQ(back.rows(), 7);
  ASSERT_EQ(back.cols(), 3);
  for (Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}

TEST(MatrixText, HeaderThenRows) {
  Matrix m(2, 2);
  m << 1, 2.5, -3, 0;
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(ss.str(), "2 2\n1 2.5\n-3 0\n");
}

TEST(MatrixText, EmptyMatrix) {
  std::stringstream ss;
  write_matrix(ss, Matrix(0, 4));
  const Matrix back = read_matrix(ss);
  EXPECT_EQ(back.rows(), 0);
  EXPECT_EQ(back.cols(), 4);
}

TEST(MatrixText, TruncatedInputRejected) {
  std::stringstream ss("2 2\n1 2\n3\n");
  EXPECT_THROW(read_matrix(ss), DataError);
}

TEST(MatrixText, GarbageRejected) {
  std::stringstream ss("2 1\n1\nabc\n");
  EXPECT_THROW(read_matrix(ss), DataError);
}

TEST(MatrixText, MissingFileIsDataError) {
  EXPECT_THROW(load_matrix("/nonexistent/fairmix/x.mat"), DataError);
}

TEST(FormatDouble, RoundTripsSpecialValues) {
  for (double v : {0.1, 1e-17, 123456789.123456789, -2.5, std::numeric_limits<double>::max()}) {
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
}

TEST(ParseNumbers, RejectTrailingJunk) {
  EXPECT_THROW(parse_double("1.5x", "ctx"), DataError);
  EXPECT_THROW(parse_integer("12.0", "ctx"), DataError);
  EXPECT_EQ(parse_integer(" 12 ", "ctx"), 12);
}

TEST(Strings, TrimAndSplit) {
  EXPECT_EQ(trim("  a b \t"), "a b");
  const auto parts = split("a,,b", ',');
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
}

TEST(KeyValues, ParseAndQuery) {
  const auto kv = KeyValues::parse("# c\nformat_version = 1\nname = x y  # tail\nn = 5\nflag = true\nr = 0.25\n", "t");
  EXPECT_EQ(kv.get("name"), "x y");
  EXPECT_EQ(kv.get_int("n"), 5);
  EXPECT_TRUE(kv.get_bool_or("flag", false));
  EXPECT_DOUBLE_EQ(kv.get_double("r"), 0.25);
  EXPECT_EQ(kv.get_or("missing", "d"), "d");
  EXPECT_THROW(kv.get("missing"), ConfigError);
}

TEST(KeyValues, DuplicateKeyRejected) {
  EXPECT_THROW(KeyValues::parse("a = 1\na = 2\n", "t"), ConfigError);
}

TEST(KeyValues, LineWithoutEqualsRejected) {
  EXPECT_THROW(KeyValues::parse("just words\n", "t"), ConfigError);
}

TEST(KeyValues, RoundTrip) {
  KeyValues kv;
  kv.set("a", std::string("text"));
  kv.set("b", 0.1);
  kv.set("c", true);
  kv.set("d", Index{7});
  const auto back = KeyValues::parse(kv.to_string(), "t");
  EXPECT_EQ(back.entries(), kv.entries());
  EXPECT_EQ(back.get_double("b"), 0.1);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Files, WriteCreatesDirectories) {
  test::TempDir dir("io");
  const auto path = dir.path() / "a" / "b" / "f.txt";
  write_file(path, "hello");
  EXPECT_EQ(read_file(path), "hello");
  EXPECT_EQ(file_hash(path), hex64(fnv1a("hello")));
}
