#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "momentswap/surface.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace momentswap;

namespace {

RawOtmCurve bs_curve(Date td, Date ex, double F, double vol, double step, double sd = 3.0) {
  RawOtmCurve c;
  c.trade_date = td;
  c.expiry = ex;
  c.forward = F;
  const double tau = year_fraction(td, ex), w = sd * vol * std::sqrt(tau);
  for (double k = std::ceil(F * std::exp(-w) / step) * step; k <= F * std::exp(w); k += step)
    c.points.push_back({k, k < F ? oracle::bs_put(F, k, vol, tau) : oracle::bs_call(F, k, vol, tau)});
  return c;
}

double reprice_rmse(const StrikeGrid& g, const RawOtmCurve& c) {
  double s = 0.0;
  for (const auto& p : c.points) s += std::pow(g.otm_price_at(p.strike) - p.price, 2);
  return std::sqrt(s / c.points.size());
}

}  // namespace

TEST(BlackGrid, MatchesIndependentBlackScholes) {
  const Date td = make_date(2012, 3, 1);
  const auto g = make_black_grid(td, add_days(td, 90), 1400.0, 0.25);
  ASSERT_EQ(g.size(), 2000u);
  for (std::size_t j = 0; j < g.size(); j += 97) {
    const double k = g.strikes[j];
    const double ref = k < 1400.0 ? oracle::bs_put(1400, k, 0.25, g.tau()) : oracle::bs_call(1400, k, 0.25, g.tau());
    EXPECT_NEAR(g.otm_prices[j], ref, 1e-9 * 1400);
  }
  EXPECT_NEAR(g.strikes.front(), 1400 * std::exp(-6 * 0.25 * std::sqrt(g.tau())), 1e-9);
  EXPECT_NEAR(g.strikes.back(), 1400 * std::exp(6 * 0.25 * std::sqrt(g.tau())), 1e-9);
}

TEST(GridStrikes, ArithmeticRangeIsClippedAboveZero) {
  GridConfig cfg;
  cfg.multiplicative = false;
  cfg.points = 11;
  const auto g = make_black_grid(make_date(2012, 3, 1), make_date(2013, 3, 1), 100.0, 0.6, cfg);
  EXPECT_GT(g.strikes.front(), 0.0);
  EXPECT_NEAR(g.strikes.back(), 100 * (1 + 6 * 0.6), 1e-9);
}

TEST(FitSingleMaturity, RepricesCleanBlackQuotes) {
  const Date td = make_date(2012, 3, 1);
  const auto c = bs_curve(td, add_days(td, 60), 1350.0, 0.22, 5.0);
  const auto g = fit_single_maturity(c);
  EXPECT_LT(reprice_rmse(g, c), 0.05);
  EXPECT_LE(g.fit_rmse, 0.25 + 1e-9);
  EXPECT_NEAR(g.avg_implied_vol, 0.22, 1e-6);
  const std::vector<StrikeGrid> one{g};
  const auto rep = check_static_arbitrage(one);
  EXPECT_TRUE(rep.clean()) << rep.violations.front();
  EXPECT_FALSE(rep.calendar_checked);
  EXPECT_FALSE(rep.calendar_note.empty());
}

TEST(FitSingleMaturity, BadInputsRaiseWithConstraintName) {
  const Date td = make_date(2012, 3, 1);
  auto c = bs_curve(td, add_days(td, 60), 100.0, 0.2, 1.0);
  auto neg = c;
  neg.points[3].price = -1.0;
  try {
    fit_single_maturity(neg);
    FAIL();
  } catch (const SurfaceFitError& e) {
    EXPECT_EQ(e.constraint(), "price bound");
  }
  auto unsorted = c;
  std::swap(unsorted.points[1], unsorted.points[2]);
  EXPECT_THROW(fit_single_maturity(unsorted), SurfaceFitError);
  auto tiny = c;
  tiny.points.resize(2);
  EXPECT_THROW(fit_single_maturity(tiny), SurfaceFitError);
  auto zero_f = c;
  zero_f.forward = 0.0;
  EXPECT_THROW(fit_single_maturity(zero_f), SurfaceFitError);
}

TEST(FitSurface, NoisyTermStructureIsArbitrageFree) {
  const Date td = make_date(2012, 3, 1);
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  std::vector<RawOtmCurve> curves;
  for (int days : {30, 60, 120}) {
    auto c = bs_curve(td, add_days(td, days), 1300.0, 0.18 + days / 2000.0, 5.0);
    for (auto& p : c.points) p.price = std::max(0.0, p.price * (1.0 + 0.002 * nd(gen)) + 0.02 * nd(gen));
    curves.push_back(c);
  }
  const auto fit = fit_surface(curves);
  ASSERT_EQ(fit.grids.size(), 3u);
  const auto rep = check_static_arbitrage(fit.grids);
  EXPECT_TRUE(rep.clean()) << (rep.clean() ? "" : rep.violations.front());
  EXPECT_TRUE(rep.calendar_checked);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(reprice_rmse(fit.grids[i], curves[i]), 0.25);
}

TEST(FitSurface, RejectsMixedTradeDates) {
  const Date td = make_date(2012, 3, 1);
  std::vector<RawOtmCurve> curves{bs_curve(td, add_days(td, 30), 100, 0.2, 1),
                                  bs_curve(add_days(td, 1), add_days(td, 60), 100, 0.2, 1)};
  EXPECT_THROW(fit_surface(curves), SurfaceFitError);
  EXPECT_THROW(fit_surface(std::span<const RawOtmCurve>{}), SurfaceFitError);
}

TEST(CheckStaticArbitrage, DetectsButterflyAndCalendarViolations) {
  const Date td = make_date(2012, 3, 1);
  GridConfig cfg;
  cfg.points = 201;
  auto shortg = make_black_grid(td, add_days(td, 30), 100, 0.3, cfg);
  auto longg = make_black_grid(td, add_days(td, 60), 100, 0.1, cfg);
  std::vector<StrikeGrid> gs{shortg, longg};
  const auto cal = check_static_arbitrage(gs);
  EXPECT_FALSE(cal.clean());
  EXPECT_LT(cal.min_calendar, 0.0);

  auto bumped = shortg;
  bumped.otm_prices[100] += 0.5;
  std::vector<StrikeGrid> one{bumped};
  const auto bf = check_static_arbitrage(one);
  EXPECT_FALSE(bf.clean());
  EXPECT_LT(bf.min_butterfly, -0.1);
}

TEST(RepairCalendar, LiftsLongerMaturity) {
  const Date td = make_date(2012, 3, 1);
  GridConfig cfg;
  cfg.points = 301;
  std::vector<StrikeGrid> gs{make_black_grid(td, add_days(td, 60), 100, 0.1, cfg),
                             make_black_grid(td, add_days(td, 30), 100, 0.3, cfg)};
  repair_calendar(gs);
  EXPECT_LT(gs[0].expiry, gs[1].expiry);
  EXPECT_TRUE(check_static_arbitrage(gs, 1e-10).clean());
}

TEST(GridStore, RoundTripsBitForBit) {
  testing_support::ScratchDir dir;
  const Date td = make_date(2012, 3, 1);
  GridConfig cfg;
  cfg.points = 50;
  std::vector<StrikeGrid> gs{make_black_grid(td, add_days(td, 30), 1234.5, 0.21, cfg),
                             make_black_grid(td, add_days(td, 91), 1234.5, 0.23, cfg)};
  gs[1].fit_rmse = 0.0123;
  write_grid_store(dir / "g", gs);
  const auto back = read_grid_store(dir / "g");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].expiry, gs[i].expiry);
    EXPECT_EQ(back[i].forward, gs[i].forward);
    EXPECT_EQ(back[i].fit_rmse, gs[i].fit_rmse);
    EXPECT_EQ(back[i].strikes, gs[i].strikes);
    EXPECT_EQ(back[i].otm_prices, gs[i].otm_prices);
  }
  EXPECT_THROW(read_grid_store(dir / "none"), DatasetError);
}
