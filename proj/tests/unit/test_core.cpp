#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "momentswap/accumulate.hpp"
#include "momentswap/config.hpp"
#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/philox.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace momentswap;

TEST(Philox, KnownAnswerZeroCounterZeroKey) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                        {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, SameCoordinatesSameStream) {
  CounterRng a(42, 7, 3), b(42, 7, 3), c(42, 8, 3);
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const double x = a.normal(), y = b.normal(), z = c.normal();
    EXPECT_EQ(x, y);
    differs |= x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(CounterRng, UniformsPassKolmogorovSmirnov) {
  CounterRng rng(2024, 0, 0);
  std::vector<double> u(20000);
  for (auto& v : u) {
    v = rng.uniform();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
  EXPECT_GT(oracle::ks_uniform(u).p_value, 0.001);
}

TEST(CounterRng, NormalsMatchStandardNormalMoments) {
  MomentAccumulator acc;
  for (std::uint64_t p = 0; p < 50; ++p) {
    CounterRng rng(11, p, 0);
    for (int i = 0; i < 2000; ++i) acc.add(rng.normal());
  }
  EXPECT_NEAR(acc.mean(), 0.0, 4.0 / std::sqrt(1e5));
  EXPECT_NEAR(acc.variance(), 1.0, 0.02);
  EXPECT_NEAR(acc.central4(), 3.0, 0.1);
}

TEST(CounterRng, PoissonMeanMatches) {
  MomentAccumulator acc;
  CounterRng rng(5, 1, 1);
  for (int i = 0; i < 50000; ++i) acc.add(rng.poisson(0.3));
  EXPECT_NEAR(acc.mean(), 0.3, 4.0 * std::sqrt(0.3 / 50000));
  EXPECT_EQ(rng.poisson(0.0), 0u);
}

TEST(MomentAccumulator, MatchesTwoPassMoments) {
  std::mt19937_64 gen(3);
  std::gamma_distribution<double> g(2.0, 1.5);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = g(gen);
  MomentAccumulator acc;
  for (double x : xs) acc.add(x);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  EXPECT_NEAR(acc.mean(), mean, 1e-12 * mean);
  EXPECT_NEAR(acc.central2(), m2 / n, 1e-10 * m2 / n);
  EXPECT_NEAR(acc.central3(), m3 / n, 1e-9 * std::abs(m3 / n));
  EXPECT_NEAR(acc.central4(), m4 / n, 1e-9 * m4 / n);
  EXPECT_NEAR(acc.variance(), m2 / (n - 1), 1e-10 * m2 / n);
}

TEST(MomentAccumulator, MergeEqualsSequential) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd(1.0, 3.0);
  MomentAccumulator all, a, b, c;
  for (int i = 0; i < 3000; ++i) {
    const double x = nd(gen) + (i > 1500 ? nd(gen) * nd(gen) : 0.0);
    all.add(x);
    (i < 1000 ? a : i < 1700 ? b : c).add(x);
  }
  MomentAccumulator m;
  m.merge(a);
  m.merge(b);
  m.merge(c);
  m.merge(MomentAccumulator{});
  EXPECT_EQ(m.count(), all.count());
  EXPECT_NEAR(m.mean(), all.mean(), 1e-12);
  EXPECT_NEAR(m.central2(), all.central2(), 1e-9);
  EXPECT_NEAR(m.central3(), all.central3(), 1e-8);
  EXPECT_NEAR(m.central4(), all.central4(), 1e-7);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  EXPECT_DOUBLE_EQ(compensated_sum(xs), 2.0);
}

TEST(Dates, ParseFormatRoundTrip) {
  const Date d = parse_date("2013-02-28");
  EXPECT_EQ(format_date(d), "2013-02-28");
  EXPECT_EQ(parse_date("20130228"), d);
  EXPECT_EQ(days_between(d, parse_date("2013-03-30")), 30);
  EXPECT_NEAR(year_fraction(d, add_days(d, 365)), 1.0, 1e-15);
  EXPECT_THROW(parse_date("2013/02/28"), ValidationError);
  EXPECT_THROW(parse_date("2013-02-3x"), ValidationError);
  EXPECT_FALSE(is_weekday(parse_date("2013-03-02")));
  EXPECT_TRUE(is_weekday(parse_date("2013-03-04")));
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 4.605170185988091}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_THROW(parse_double("1.0x"), ValidationError);
  EXPECT_THROW(parse_double(""), ValidationError);
  EXPECT_EQ(format_fixed(1.23456789, 6), "1.234568");
}

TEST(Csv, ReadsTabAndCommaFilesWithLineNumbers) {
  testing_support::ScratchDir dir;
  const auto p = dir.write("a.tsv", "x\ty\n\n1\t2\n3\t4\n");
  const auto t = read_delimited(p);
  EXPECT_EQ(t.delimiter, '\t');
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.lines[0], 3u);
  EXPECT_EQ(t.column("y"), 1u);
  EXPECT_THROW(t.column("z"), Error);
  const auto empty = dir.write("e.csv", "");
  EXPECT_THROW(read_delimited(empty), DatasetError);
  EXPECT_THROW(read_delimited(dir / "missing.csv"), DatasetError);
}

TEST(Config, TypedAccessAndErrors) {
  const auto c = Config::parse("[a]\nx = 1.5\nn = 3\nflag = yes\nlist = p,q,,r\nbad = nope\n");
  EXPECT_DOUBLE_EQ(c.get("a", "x", 0.0), 1.5);
  EXPECT_EQ(c.get("a", "n", 0L), 3);
  EXPECT_TRUE(c.get_flag("a", "flag", false));
  EXPECT_EQ(c.get_list("a", "list", {}), (std::vector<std::string>{"p", "q", "r"}));
  EXPECT_EQ(c.get("a", "missing", 7L), 7);
  EXPECT_THROW(c.get("a", "bad", 0.0), ValidationError);
  EXPECT_THROW(c.get("a", "x", 0L), ValidationError);
  EXPECT_THROW(c.get_flag("a", "bad", false), ValidationError);
  EXPECT_THROW(Config::parse("[a\nx=1"), ValidationError);
}
