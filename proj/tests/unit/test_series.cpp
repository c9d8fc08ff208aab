#include <gtest/gtest.h>

#include <cmath>

#include "momentswap/series.hpp"
#include "momentswap/sim.hpp"
#include "scratch.hpp"

using namespace momentswap;

namespace {

ContractPanelRow row(const MarketModel& m, Date td, Date ex, double x) {
  ContractPanelRow r;
  static_cast<ContractState&>(r) = model_contract_state(m, x, year_fraction(td, ex));
  r.trade_date = td;
  r.expiry = ex;
  return r;
}

}  // namespace

TEST(ConstantMaturityIncrement, LinearWeightsInTimeToExpiry) {
  const Date t = make_date(2010, 1, 4);
  const Date lo = add_days(t, 20), hi = add_days(t, 50);
  EXPECT_NEAR(constant_maturity_increment(1.0, 4.0, lo, hi, t, 30), (20.0 * 1 + 10.0 * 4) / 30.0, 1e-15);
  EXPECT_DOUBLE_EQ(constant_maturity_increment(1.0, 4.0, lo, hi, t, 20), 1.0);
  EXPECT_DOUBLE_EQ(constant_maturity_increment(1.0, 4.0, lo, hi, t, 50), 4.0);
  EXPECT_THROW(constant_maturity_increment(1, 4, lo, hi, t, 60), BracketError);
  EXPECT_THROW(constant_maturity_increment(1, 4, lo, hi, t, 10), BracketError);
  EXPECT_THROW(constant_maturity_increment(1, 4, hi, lo, t, 30), BracketError);
}

TEST(FindBracket, ExactHitCollapsesToOneLeg) {
  const Date t = make_date(2010, 1, 4);
  const std::vector<Date> c{add_days(t, 10), add_days(t, 30), add_days(t, 45)};
  const auto b = find_bracket(c, t, 30);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->lower, b->upper);
  EXPECT_EQ(b->lower_weight, 1.0);
  const auto b2 = find_bracket(c, t, 40);
  EXPECT_EQ(b2->lower, c[1]);
  EXPECT_EQ(b2->upper, c[2]);
  EXPECT_NEAR(b2->lower_weight, 5.0 / 15.0, 1e-15);
  EXPECT_NEAR(b2->lower_weight + b2->upper_weight, 1.0, 1e-15);
  EXPECT_FALSE(find_bracket(c, t, 60));
}

TEST(Partition, EveryStepthDate) {
  std::vector<Date> d;
  for (int i = 0; i < 23; ++i) d.push_back(add_days(make_date(2010, 1, 4), i));
  EXPECT_EQ(make_partition(d, Frequency::daily).dates.size(), 23u);
  EXPECT_EQ(make_partition(d, Frequency::weekly).dates.size(), 5u);
  EXPECT_EQ(make_partition(d, Frequency::monthly).dates.size(), 2u);
  std::swap(d[0], d[5]);
  EXPECT_THROW(make_partition(d, Frequency::weekly), ValidationError);
  EXPECT_EQ(parse_frequency("W"), Frequency::weekly);
  EXPECT_THROW(parse_frequency("hourly"), ValidationError);
  EXPECT_THROW(parse_series_method("d"), ValidationError);
}

TEST(IncrementSeries, PointsAreWeightedLegIncrements) {
  MarketModel m;
  m.sigma = 0.2;
  m.seed = 3;
  SyntheticMarketConfig cfg;
  cfg.trading_days = 120;
  const auto panel = simulate_market_panel(m, Measure::Q, cfg);
  for (SwapKind k : {SwapKind::variance, SwapKind::lv, SwapKind::skew}) {
    const auto s = build_pnl_series(panel, k, Frequency::daily, 30);
    ASSERT_GT(s.points.size(), 100u);
    for (const auto& p : s.points) {
      EXPECT_NEAR(p.lower_weight + p.upper_weight, 1.0, 1e-14);
      EXPECT_GE(p.lower_weight, 0.0);
      EXPECT_LE(p.lower_expiry, add_days(p.start, 30));
      EXPECT_GE(p.upper_expiry, add_days(p.start, 30));
      EXPECT_NEAR(p.value, p.lower_weight * p.lower_increment + p.upper_weight * p.upper_increment, 1e-15);
      if (p.lower_expiry != p.upper_expiry) {
        EXPECT_NEAR(p.value,
                    constant_maturity_increment(p.lower_increment, p.upper_increment, p.lower_expiry,
                                                p.upper_expiry, p.start, 30),
                    1e-15);
      }
    }
  }
}

TEST(IncrementSeries, LegsAreFixedExpiryIncrements) {
  MarketModel m;
  m.seed = 8;
  SyntheticMarketConfig cfg;
  cfg.trading_days = 40;
  const auto panel = simulate_market_panel(m, Measure::Q, cfg);
  const PanelIndex idx(panel);
  const auto s = build_pnl_series(panel, SwapKind::variance, Frequency::daily, 30);
  for (const auto& p : s.points) {
    const auto* a = idx.find(p.start, p.lower_expiry);
    const auto* b = idx.find(p.date, p.lower_expiry);
    if (!a || !b) continue;
    EXPECT_NEAR(p.lower_increment, interval_pnl(SwapKind::variance, *a, *a, *b).value, 1e-15);
  }
}

TEST(IncrementSeries, MissingBracketRecordsGap) {
  MarketModel m;
  const Date d0 = make_date(2010, 1, 4);
  const Date e1 = add_days(d0, 25), e2 = add_days(d0, 60);
  ContractPanel panel;
  const double x = std::log(100.0);
  for (int i = 0; i < 5; ++i) {
    const Date t = add_days(d0, i);
    panel.push_back(row(m, t, e1, x + 0.01 * i));
    if (i != 2) panel.push_back(row(m, t, e2, x + 0.01 * i));
  }
  const auto s = build_pnl_series(panel, SwapKind::variance, Frequency::daily, 30);
  EXPECT_EQ(s.warnings.size(), 2u);
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_FALSE(s.points[0].after_gap);
  EXPECT_TRUE(s.points[1].after_gap);
  EXPECT_EQ(s.points[1].start, add_days(d0, 3));
}

TEST(IncrementSeries, ExactMaturityHitUsesSingleLeg) {
  MarketModel m;
  const Date d0 = make_date(2010, 1, 4);
  ContractPanel panel;
  for (int i = 0; i < 2; ++i)
    for (int e : {20, 30, 50}) panel.push_back(row(m, add_days(d0, i), add_days(d0, e), std::log(100.0) + 0.01 * i));
  const auto s = build_pnl_series(panel, SwapKind::variance, Frequency::daily, 30);
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_EQ(s.points[0].lower_expiry, add_days(d0, 30));
  EXPECT_EQ(s.points[0].upper_expiry, add_days(d0, 30));
  EXPECT_EQ(s.points[0].lower_weight, 1.0);
}

TEST(OtherMethods, RollAndLevelSeriesAreBuilt) {
  MarketModel m;
  m.seed = 5;
  SyntheticMarketConfig cfg;
  cfg.trading_days = 90;
  const auto panel = simulate_market_panel(m, Measure::Q, cfg);
  const auto a = build_pnl_series(panel, SwapKind::variance, Frequency::daily, 30, SeriesMethod::roll_at_maturity);
  const auto b = build_pnl_series(panel, SwapKind::variance, Frequency::daily, 30, SeriesMethod::level_interpolation);
  EXPECT_GT(a.points.size(), 80u);
  EXPECT_GT(b.points.size(), 40u);
  for (const auto& p : b.points) EXPECT_NEAR(p.value, p.realised_part + p.implied_part, 1e-15);
  EXPECT_THROW(build_pnl_series(panel, SwapKind::variance, Frequency::daily, 0), ValidationError);
}

TEST(SeriesCsv, RoundTripsAndCumulates) {
  testing_support::ScratchDir dir;
  PnlSeries s;
  for (int i = 0; i < 4; ++i) {
    SeriesPoint p;
    p.date = add_days(make_date(2010, 1, 4), i);
    p.value = 0.1 * i - 0.05;
    p.realised_part = 0.3 * i;
    p.implied_part = p.value - p.realised_part;
    s.points.push_back(p);
  }
  write_series_csv(dir / "sub" / "s.csv", s);
  const auto back = read_series_csv(dir / "sub" / "s.csv");
  ASSERT_EQ(back.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i].date, s.points[i].date);
    EXPECT_EQ(back[i].value, s.points[i].value);
  }
  const auto c = cumulate(s);
  EXPECT_NEAR(c.back(), -0.05 + 0.05 + 0.15 + 0.25, 1e-15);
  const auto t = read_delimited(dir / "sub" / "s.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"date", "increment", "realised_part", "implied_part", "cumulative"}));
}
