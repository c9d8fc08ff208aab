#include <gtest/gtest.h>

#include <cmath>

#include "momentswap/sim.hpp"
#include "oracles.hpp"

using namespace momentswap;

namespace {

MarketModel jump_model() {
  MarketModel m;
  m.kind = ModelKind::gbm_jumps;
  m.sigma = 0.18;
  m.jump_intensity = 3.0;
  m.jump_mean = -0.15;
  m.jump_vol = 0.1;
  return m;
}

}  // namespace

TEST(ModelContracts, ZeroVolatilityGivesPowersOfLogForward) {
  MarketModel m;
  m.sigma = 0.0;
  const double x = std::log(150.0);
  const auto s = model_contract_state(m, x, 0.5);
  for (int p = 1; p <= 6; ++p) EXPECT_NEAR(s.X[p], std::pow(x, p), 1e-12 * std::pow(x, p));
  EXPECT_EQ(s.v_eta, 0.0);
}

TEST(ModelContracts, GbmVarianceIsSigmaSquaredTau) {
  MarketModel m;
  m.sigma = 0.3;
  const auto s = model_contract_state(m, std::log(90.0), 0.2);
  EXPECT_NEAR(s.X[2] - s.X[1] * s.X[1], 0.09 * 0.2, 1e-13);
  EXPECT_NEAR(s.X[1], std::log(90.0) - 0.5 * 0.09 * 0.2, 1e-14);
  EXPECT_NEAR(s.v_eta, 0.09 * 0.2, 1e-15);
  EXPECT_NEAR(s.conv_var_rate, 0.09 * 0.2, 1e-15);
}

TEST(ModelContracts, JumpDiffusionMomentsMatchQuadratureOracle) {
  const auto m = jump_model();
  const double tau = 0.3, x = std::log(1200.0);
  const auto s = model_contract_state(m, x, tau);
  const double lam = m.lambda() * tau;
  for (int p = 1; p <= 6; ++p) {
    const double ref = oracle::jump_diffusion_expectation(
        [&](double y) { return std::pow(x + y, p); }, m.q_drift() * tau, m.sigma * std::sqrt(tau), lam,
        m.jump_mean, m.jump_vol);
    EXPECT_NEAR(s.X[p], ref, 1e-10 * std::abs(ref)) << "p=" << p;
  }
  const double v_ref = oracle::jump_diffusion_expectation(
      [](double y) { return 2.0 * (y * std::exp(y) - std::exp(y) + 1.0); }, m.q_drift() * tau,
      m.sigma * std::sqrt(tau), lam, m.jump_mean, m.jump_vol);
  EXPECT_NEAR(s.v_eta, v_ref, 1e-12);
  const double c_ref = oracle::jump_diffusion_expectation([](double y) { return -2.0 * y; }, m.q_drift() * tau,
                                                          m.sigma * std::sqrt(tau), lam, m.jump_mean, m.jump_vol);
  EXPECT_NEAR(s.conv_var_rate, c_ref, 1e-12);
  const double fwd = oracle::jump_diffusion_expectation([](double y) { return std::exp(y); }, m.q_drift() * tau,
                                                        m.sigma * std::sqrt(tau), lam, m.jump_mean, m.jump_vol);
  EXPECT_NEAR(fwd, 1.0, 1e-12);
}

TEST(Simulation, ForwardIsMartingaleUnderQ) {
  const auto m = jump_model();
  McConfig cfg;
  cfg.n_paths = 40000;
  const auto st = simulate_characteristic(Characteristic::rv, m, Measure::Q, 5, cfg);
  EXPECT_NEAR(st.terminal_forward.mean(), m.initial_forward, 4.0 * st.terminal_forward.standard_error());
}

TEST(Simulation, ResultsDoNotDependOnThreadCount) {
  auto m = jump_model();
  m.seed = 99;
  McConfig one, many;
  one.n_paths = many.n_paths = 10000;
  one.chunk = many.chunk = 512;
  many.threads = 4;
  const auto a = simulate_characteristic(Characteristic::fourth, m, Measure::Q, 5, one);
  const auto b = simulate_characteristic(Characteristic::fourth, m, Measure::Q, 5, many);
  EXPECT_EQ(a.pnl.mean(), b.pnl.mean());
  EXPECT_EQ(a.pnl.variance(), b.pnl.variance());
  EXPECT_EQ(a.ap_gap.central4(), b.ap_gap.central4());
}

TEST(Simulation, SeedChangesPaths) {
  auto m = jump_model();
  const auto a = simulate_path(m, Measure::Q, 30, 10, 7);
  m.seed = 2;
  const auto b = simulate_path(m, Measure::Q, 30, 10, 7);
  EXPECT_NE(a.back().forward, b.back().forward);
  EXPECT_EQ(a.back().forward, simulate_path(jump_model(), Measure::Q, 30, 10, 7).back().forward);
}

TEST(Simulation, PathEndsSettled) {
  const auto path = simulate_path(jump_model(), Measure::Q, 30, 6, 1);
  ASSERT_EQ(path.size(), 7u);
  const double x = path.back().x();
  for (int p = 1; p <= 6; ++p) EXPECT_NEAR(path.back().X[p], std::pow(x, p), 1e-12 * std::pow(std::abs(x), p));
  const auto set = simulate_paths(jump_model(), Measure::Q, 30, 6, 3);
  EXPECT_EQ(set.paths.size(), 3u);
  EXPECT_EQ(set.paths[1].back().forward, simulate_path(jump_model(), Measure::Q, 30, 6, 1).back().forward);
}

TEST(Simulation, VarianceSwapAggregatesOnSmallRun) {
  MarketModel m;
  McConfig cfg;
  cfg.n_paths = 20000;
  const std::vector<std::size_t> parts{1, 10};
  for (const auto& r : verify_aggregation(Characteristic::variance, m, Measure::Q, parts, cfg))
    EXPECT_TRUE(r.deviation.within(4.0)) << r.steps << " z=" << r.deviation.z();
  const auto eps = estimate_q_bias(Characteristic::variance, m, 10, cfg);
  EXPECT_TRUE(eps.within(4.0)) << eps.z();
}

TEST(Simulation, PhysicalBiasMatchesDriftShiftOracle) {
  McConfig cfg;
  cfg.n_paths = 40000;
  const double T = cfg.horizon_days / kDaysPerYear;
  for (MarketModel m : {MarketModel{}, jump_model()}) {
    m.p_drift = 0.5;
    const auto lv = estimate_p_bias(Characteristic::lv, m, 10, cfg);
    const double lv_ref = oracle::drift_shift_gap(oracle::lv_term, m.p_drift, T, 10);
    EXPECT_NEAR(lv.value, lv_ref, 4 * lv.se);
    EXPECT_FALSE(lv.within(4.0));
    const auto psi = estimate_p_bias(Characteristic::psi, m, 10, cfg);
    const double psi_ref = oracle::drift_shift_gap(oracle::skew_cubic, m.p_drift, T, 10);
    EXPECT_NEAR(psi.value, psi_ref, 4 * psi.se);
  }
}

TEST(Simulation, OneStepMonitoringEqualsOneShot) {
  const auto r = bias_report(Characteristic::lv, jump_model(), Measure::P, 1, McConfig{2000, 30, 1, 4096});
  EXPECT_EQ(r.b.value, 0.0);
  EXPECT_EQ(r.n_paths, 2000u);
  EXPECT_NEAR(r.sigma_sq.value, r.one_shot_sigma_sq.value, 1e-18);
}

TEST(Simulation, InvalidInputsThrow) {
  MarketModel m;
  m.sigma = -0.1;
  EXPECT_THROW(m.validate(), ValidationError);
  MarketModel ok;
  EXPECT_THROW(simulate_characteristic(Characteristic::rv, ok, Measure::Q, 0), ValidationError);
  McConfig bad;
  bad.chunk = 0;
  EXPECT_THROW(simulate_characteristic(Characteristic::rv, ok, Measure::Q, 1, bad), ValidationError);
  EXPECT_THROW(parse_model_kind("heston"), ValidationError);
  EXPECT_THROW(parse_measure("R"), ValidationError);
  EXPECT_THROW(parse_characteristic("gamma"), ValidationError);
}

TEST(SyntheticMarket, ThirdFridaysAndWeeklyListings) {
  EXPECT_EQ(format_date(third_friday(2010, 1)), "2010-01-15");
  EXPECT_EQ(format_date(third_friday(2013, 3)), "2013-03-15");
  EXPECT_EQ(format_date(third_friday(2014, 8)), "2014-08-15");
  SyntheticMarketConfig cfg;
  const auto ex = detail::listed_expiries(make_date(2010, 1, 4), cfg);
  ASSERT_FALSE(ex.empty());
  EXPECT_TRUE(std::is_sorted(ex.begin(), ex.end()));
  EXPECT_EQ(std::adjacent_find(ex.begin(), ex.end()), ex.end());
  for (Date e : ex) EXPECT_GE(days_between(make_date(2010, 1, 4), e), cfg.min_days);
}

TEST(SyntheticMarket, PanelSharesForwardAcrossExpiries) {
  MarketModel m;
  SyntheticMarketConfig cfg;
  cfg.trading_days = 5;
  const auto panel = simulate_market_panel(m, Measure::Q, cfg);
  for (const auto& r : panel) {
    const auto& first = *std::find_if(panel.begin(), panel.end(),
                                      [&](const ContractPanelRow& o) { return o.trade_date == r.trade_date; });
    EXPECT_EQ(r.forward, first.forward);
  }
  SyntheticQuoteConfig qc;
  qc.market.trading_days = 2;
  const auto q = simulate_option_quotes(m, qc);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_GT(q[0].size(), 20u);
}
