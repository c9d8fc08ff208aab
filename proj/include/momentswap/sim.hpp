#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "momentswap/accumulate.hpp"
#include "momentswap/black.hpp"
#include "momentswap/contracts.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/market_data.hpp"
#include "momentswap/philox.hpp"
#include "momentswap/swaps.hpp"

namespace momentswap {

enum class ModelKind { gbm, gbm_jumps };
enum class Measure { P, Q };

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "gbm") return ModelKind::gbm;
  if (s == "gbm_jumps") return ModelKind::gbm_jumps;
  throw ValidationError("unsupported model kind '" + std::string(s) + "'");
}

inline Measure parse_measure(std::string_view s) {
  if (s == "P" || s == "p") return Measure::P;
  if (s == "Q" || s == "q") return Measure::Q;
  throw ValidationError("unknown measure '" + std::string(s) + "'");
}

// Log-forward dynamics with normally distributed jumps. Under Q the drift is
// the martingale compensator -sigma^2/2 - lambda kappa; under P the
// annualized p_drift is added to it.
struct MarketModel {
  ModelKind kind = ModelKind::gbm;
  double sigma = 0.2;
  double p_drift = 0.0;
  double jump_intensity = 0.0;  // per year
  double jump_mean = 0.0;
  double jump_vol = 0.0;
  double initial_forward = 100.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be >= 0");
    if (!(initial_forward > 0.0)) throw ValidationError("initial forward must be positive");
    if (kind == ModelKind::gbm_jumps && (!(jump_intensity >= 0.0) || !(jump_vol >= 0.0)))
      throw ValidationError("jump intensity and jump vol must be non-negative");
  }

  double lambda() const { return kind == ModelKind::gbm_jumps ? jump_intensity : 0.0; }
  // E[e^J] - 1
  double kappa() const {
    return kind == ModelKind::gbm_jumps ? std::expm1(jump_mean + 0.5 * jump_vol * jump_vol) : 0.0;
  }
  double q_drift() const { return -0.5 * sigma * sigma - lambda() * kappa(); }
  double drift(Measure m) const { return q_drift() + (m == Measure::P ? p_drift : 0.0); }
};

namespace detail {

// E[J^n] for J ~ N(mu, s^2), n = 0..6.
inline std::array<double, 7> normal_raw_moments(double mu, double s) {
  std::array<double, 7> m{};
  m[0] = 1.0;
  m[1] = mu;
  for (int n = 2; n <= 6; ++n) m[n] = mu * m[n - 1] + (n - 1) * s * s * m[n - 2];
  return m;
}

}  // namespace detail

// Cumulants kappa_1..6 of x_T - x_t under Q over `tau` years.
inline std::array<double, 7> log_return_cumulants(const MarketModel& m, double tau) {
  std::array<double, 7> k{};
  const double lam = m.lambda();
  const auto jm = detail::normal_raw_moments(m.jump_mean, m.jump_vol);
  k[1] = (m.q_drift() + lam * jm[1]) * tau;
  k[2] = (m.sigma * m.sigma + lam * jm[2]) * tau;
  for (int n = 3; n <= 6; ++n) k[n] = lam * jm[n] * tau;
  return k;
}

// Exact Q-prices at log forward x with `tau` years to expiry.
inline ContractState model_contract_state(const MarketModel& m, double x, double tau) {
  ContractState s;
  s.forward = std::exp(x);
  tau = std::max(tau, 0.0);
  const auto k = log_return_cumulants(m, tau);
  std::array<double, 7> raw{};
  raw[0] = 1.0;
  for (int n = 1; n <= 6; ++n) {
    double acc = 0.0;
    double binom = 1.0;  // C(n-1, j)
    for (int j = 0; j < n; ++j) {
      acc += binom * k[j + 1] * raw[n - 1 - j];
      binom = binom * (n - 1 - j) / (j + 1);
    }
    raw[n] = acc;
  }
  for (int p = 1; p <= 6; ++p) {
    double acc = 0.0, binom = 1.0;  // C(p, j)
    for (int j = 0; j <= p; ++j) {
      acc += binom * std::pow(x, p - j) * raw[j];
      binom = binom * (p - j) / (j + 1);
    }
    s.X[p] = acc;
  }
  const double lam = m.lambda(), kap = m.kappa();
  s.v_eta = 2.0 * tau *
            (0.5 * m.sigma * m.sigma + lam * ((m.jump_mean + m.jump_vol * m.jump_vol) * (1.0 + kap) - kap));
  s.conv_var_rate = -2.0 * k[1];
  return s;
}

// Log-forward increment over `dt` years drawn from the (seed, path, step)
// stream. Exact for any dt.
inline double draw_log_increment(const MarketModel& m, Measure meas, double dt, std::uint64_t path,
                                 std::uint32_t step) {
  CounterRng rng(m.seed, path, step);
  double dx = m.drift(meas) * dt + m.sigma * std::sqrt(dt) * rng.normal();
  const double lam = m.lambda();
  if (lam > 0.0) {
    const unsigned n = rng.poisson(lam * dt);
    if (n > 0) dx += n * m.jump_mean + std::sqrt(static_cast<double>(n)) * m.jump_vol * rng.normal();
  }
  return dx;
}

// Contract states at the n_steps + 1 monitoring dates of one path; expiry at
// `horizon_days` and equally spaced monitoring. With `power_contracts` off,
// only the first state carries X^(p); later states hold the forward, v_eta
// and the conventional rate, which is all the log-return payoffs read.
inline void simulate_path(const MarketModel& m, Measure meas, double horizon_days,
                          std::size_t n_steps, std::uint64_t path, std::vector<ContractState>& out,
                          bool power_contracts = true) {
  const double T = horizon_days / kDaysPerYear;
  const double dt = T / static_cast<double>(n_steps);
  out.resize(n_steps + 1);
  double x = std::log(m.initial_forward);
  out[0] = model_contract_state(m, x, T);
  const double v_rate = out[0].v_eta / T, c_rate = out[0].conv_var_rate / T;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    x += draw_log_increment(m, meas, dt, path, static_cast<std::uint32_t>(i));
    const double remaining = i == n_steps ? 0.0 : T - dt * static_cast<double>(i);
    if (power_contracts) {
      out[i] = model_contract_state(m, x, remaining);
    } else {
      out[i].forward = std::exp(x);
      out[i].v_eta = v_rate * remaining;
      out[i].conv_var_rate = c_rate * remaining;
    }
  }
}

inline std::vector<ContractState> simulate_path(const MarketModel& m, Measure meas,
                                                double horizon_days, std::size_t n_steps,
                                                std::uint64_t path) {
  std::vector<ContractState> out;
  simulate_path(m, meas, horizon_days, n_steps, path, out);
  return out;
}

struct PathSet {
  std::size_t n_steps = 0;
  std::vector<std::vector<ContractState>> paths;
};

inline PathSet simulate_paths(const MarketModel& m, Measure meas, double horizon_days,
                              std::size_t n_steps, std::size_t n_paths) {
  m.validate();
  if (n_steps == 0) throw ValidationError("partition needs at least one step");
  PathSet ps{n_steps, {}};
  ps.paths.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) ps.paths.push_back(simulate_path(m, meas, horizon_days, n_steps, p));
  return ps;
}

// Realised characteristics evaluated on consecutive contract states.
enum class Characteristic { variance, third, fourth, rv, lv, psi, cube, erp };

inline std::string_view to_string(Characteristic c) {
  switch (c) {
    case Characteristic::variance: return "variance";
    case Characteristic::third: return "third";
    case Characteristic::fourth: return "fourth";
    case Characteristic::rv: return "rv";
    case Characteristic::lv: return "lv";
    case Characteristic::psi: return "psi";
    case Characteristic::cube: return "cube";
    case Characteristic::erp: return "erp";
  }
  return "?";
}

inline Characteristic parse_characteristic(std::string_view s) {
  for (auto c : {Characteristic::variance, Characteristic::third, Characteristic::fourth,
                 Characteristic::rv, Characteristic::lv, Characteristic::psi, Characteristic::cube,
                 Characteristic::erp})
    if (to_string(c) == s) return c;
  throw ValidationError("unknown payoff '" + std::string(s) + "'");
}

// phi over the step prev -> cur for a position opened at `inception`. The
// one-shot payoff phi(x_T - x_0) is the same call with prev = inception.
inline double characteristic_payoff(Characteristic c, const ContractState& inception,
                                    const ContractState& prev, const ContractState& cur) {
  const double x_hat = cur.x() - prev.x();
  switch (c) {
    case Characteristic::variance:
      return interval_pnl(SwapKind::variance, inception, prev, cur).realised_part;
    case Characteristic::third:
      return interval_pnl(SwapKind::third, inception, prev, cur).realised_part;
    case Characteristic::fourth:
      return interval_pnl(SwapKind::fourth, inception, prev, cur).realised_part;
    case Characteristic::rv: return x_hat * x_hat;
    case Characteristic::lv: return log_variance_term(x_hat);
    case Characteristic::psi: return psi_payoff(x_hat, cur.v_eta - prev.v_eta);
    case Characteristic::cube: return x_hat * x_hat * x_hat;
    case Characteristic::erp: return cur.X[1] - prev.X[1];
  }
  return 0.0;
}

// Fixed rate paid against the characteristic, read off the inception state.
// rv and lv are both paid the conventional rate 2 * int q/k^2; the cube has
// no traded rate and is paid zero.
inline double characteristic_rate(Characteristic c, const ContractState& s0) {
  switch (c) {
    case Characteristic::variance: return swap_rate(SwapKind::variance, s0, s0);
    case Characteristic::third: return swap_rate(SwapKind::third, s0, s0);
    case Characteristic::fourth: return swap_rate(SwapKind::fourth, s0, s0);
    case Characteristic::rv:
    case Characteristic::lv: return s0.conv_var_rate;
    case Characteristic::psi: return characteristic_rate(SwapKind::psi, s0);
    case Characteristic::cube:
    case Characteristic::erp: return 0.0;
  }
  return 0.0;
}

struct McConfig {
  std::size_t n_paths = 100000;
  double horizon_days = 30.0;
  unsigned threads = 1;
  std::size_t chunk = 4096;
};

// Per-path statistics of one characteristic on one partition:
//   monitored  S = sum_i phi(x^_i)
//   one_shot   O = phi(x_T - x_0)
//   pnl        S - rate_0 (swap P&L of the floating receiver)
//   ap_gap     S - O
struct PathStatistics {
  MomentAccumulator monitored;
  MomentAccumulator one_shot;
  MomentAccumulator pnl;
  MomentAccumulator ap_gap;
  MomentAccumulator terminal_forward;

  void merge(const PathStatistics& o) {
    monitored.merge(o.monitored);
    one_shot.merge(o.one_shot);
    pnl.merge(o.pnl);
    ap_gap.merge(o.ap_gap);
    terminal_forward.merge(o.terminal_forward);
  }
};

// Streams paths in fixed chunks; chunk results are merged in chunk order, so
// the answer does not depend on the thread count.
inline PathStatistics simulate_characteristic(Characteristic c, const MarketModel& m, Measure meas,
                                              std::size_t n_steps, const McConfig& cfg = {}) {
  m.validate();
  if (n_steps == 0) throw ValidationError("partition needs at least one step");
  if (cfg.chunk == 0) throw ValidationError("chunk size must be positive");
  const std::size_t n_chunks = (cfg.n_paths + cfg.chunk - 1) / cfg.chunk;
  std::vector<PathStatistics> parts(n_chunks);
  const bool needs_power = c == Characteristic::variance || c == Characteristic::third ||
                           c == Characteristic::fourth || c == Characteristic::erp;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t ch; (ch = next.fetch_add(1)) < n_chunks;) {
      PathStatistics& st = parts[ch];
      const std::size_t first = ch * cfg.chunk;
      const std::size_t last = std::min(first + cfg.chunk, cfg.n_paths);
      std::vector<ContractState> path;
      for (std::size_t p = first; p < last; ++p) {
        simulate_path(m, meas, cfg.horizon_days, n_steps, p, path, needs_power);
        double monitored = 0.0;
        for (std::size_t i = 1; i < path.size(); ++i)
          monitored += characteristic_payoff(c, path[0], path[i - 1], path[i]);
        const double one_shot = characteristic_payoff(c, path[0], path[0], path.back());
        st.monitored.add(monitored);
        st.one_shot.add(one_shot);
        st.pnl.add(monitored - characteristic_rate(c, path[0]));
        st.ap_gap.add(monitored - one_shot);
        st.terminal_forward.add(path.back().forward);
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n_chunks)));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  PathStatistics total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

struct Estimate {
  double value = 0.0;
  double se = 0.0;

  double z() const { return se > 0.0 ? value / se : (value == 0.0 ? 0.0 : INFINITY); }
  bool within(double k) const { return std::abs(value) <= k * se; }
};

struct AggregationRow {
  std::size_t steps = 0;
  Estimate deviation;  // E[sum phi(x^)] - E[phi(x_T - x_0)]
};

// Aggregation check: per partition, the paired MC mean of
// sum phi(x^) - phi(x_T - x_0).
inline std::vector<AggregationRow> verify_aggregation(Characteristic c, const MarketModel& m,
                                                      Measure meas,
                                                      std::span<const std::size_t> partitions,
                                                      const McConfig& cfg = {}) {
  std::vector<AggregationRow> out;
  for (std::size_t n : partitions) {
    const auto st = simulate_characteristic(c, m, meas, n, cfg);
    out.push_back({n, {st.ap_gap.mean(), st.ap_gap.standard_error()}});
  }
  return out;
}

// Q-bias: mean swap P&L (monitored payoff minus inception rate) under Q.
inline Estimate estimate_q_bias(Characteristic c, const MarketModel& m, std::size_t n_steps,
                                const McConfig& cfg = {}) {
  const auto st = simulate_characteristic(c, m, Measure::Q, n_steps, cfg);
  return {st.pnl.mean(), st.pnl.standard_error()};
}

// P-bias: E^P[sum phi(x^)] - E^P[phi(x_T - x_0)], the aggregation gap under P.
inline Estimate estimate_p_bias(Characteristic c, const MarketModel& m, std::size_t n_steps,
                                const McConfig& cfg = {}) {
  const auto st = simulate_characteristic(c, m, Measure::P, n_steps, cfg);
  return {st.ap_gap.mean(), st.ap_gap.standard_error()};
}

// Cross-path variance of the monitored payoff and its standard error.
inline Estimate estimator_variance(Characteristic c, const MarketModel& m, Measure meas,
                                   std::size_t n_steps, const McConfig& cfg = {}) {
  const auto st = simulate_characteristic(c, m, meas, n_steps, cfg);
  return {st.monitored.variance(), st.monitored.variance_standard_error()};
}

struct BiasReport {
  std::string payoff;
  std::size_t steps = 0;
  Measure measure = Measure::Q;
  Estimate epsilon;     // mean swap P&L
  Estimate b;           // aggregation gap
  Estimate sigma_sq;    // variance of the monitored payoff
  Estimate one_shot_sigma_sq;
  std::size_t n_paths = 0;
};

inline BiasReport bias_report(Characteristic c, const MarketModel& m, Measure meas,
                              std::size_t n_steps, const McConfig& cfg = {}) {
  const auto st = simulate_characteristic(c, m, meas, n_steps, cfg);
  BiasReport r;
  r.payoff = std::string(to_string(c));
  r.steps = n_steps;
  r.measure = meas;
  r.epsilon = {st.pnl.mean(), st.pnl.standard_error()};
  r.b = {st.ap_gap.mean(), st.ap_gap.standard_error()};
  r.sigma_sq = {st.monitored.variance(), st.monitored.variance_standard_error()};
  r.one_shot_sigma_sq = {st.one_shot.variance(), st.one_shot.variance_standard_error()};
  r.n_paths = st.pnl.count();
  return r;
}

// Third Friday of a month, the standard equity-index option expiry.
inline Date third_friday(int year, unsigned month) {
  const Date first = make_date(year, month, 1);
  const unsigned wd = std::chrono::weekday{first}.c_encoding();  // 0 = Sunday
  const unsigned offset = (5 + 7 - wd) % 7;
  return add_days(first, static_cast<long>(offset) + 14);
}

struct SyntheticMarketConfig {
  Date start = make_date(2010, 1, 4);
  std::size_t trading_days = 250;
  std::size_t listed_months = 6;  // monthly expiries listed at any time
  long weekly_horizon_days = 35;  // Friday expiries listed this far ahead
  long min_days = 7;
  long max_days = 365;
};

namespace detail {

inline std::vector<Date> weekdays_from(Date start, std::size_t n) {
  std::vector<Date> out;
  for (Date d = start; out.size() < n; d = add_days(d, 1))
    if (is_weekday(d)) out.push_back(d);
  return out;
}

inline std::vector<Date> listed_expiries(Date t, const SyntheticMarketConfig& cfg) {
  std::vector<Date> out;
  const std::chrono::year_month_day ymd{t};
  int y = int(ymd.year());
  unsigned mo = unsigned(ymd.month());
  while (out.size() < cfg.listed_months) {
    const Date e = third_friday(y, mo);
    const long d = days_between(t, e);
    if (d >= cfg.min_days && d <= cfg.max_days) out.push_back(e);
    if (d > cfg.max_days) break;
    if (++mo > 12) {
      mo = 1;
      ++y;
    }
  }
  const unsigned wd = std::chrono::weekday{t}.c_encoding();
  for (Date f = add_days(t, static_cast<long>((5 + 7 - wd) % 7)); days_between(t, f) <= cfg.weekly_horizon_days;
       f = add_days(f, 7)) {
    const long d = days_between(t, f);
    if (d >= cfg.min_days && d <= cfg.max_days && std::find(out.begin(), out.end(), f) == out.end())
      out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Daily contract panel of a simulated market: one forward path (all expiries
// share the forward) and exact model prices for every listed expiry.
inline ContractPanel simulate_market_panel(const MarketModel& m, Measure meas,
                                           const SyntheticMarketConfig& cfg = {}) {
  m.validate();
  const auto days = detail::weekdays_from(cfg.start, cfg.trading_days);
  ContractPanel panel;
  double x = std::log(m.initial_forward);
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (i > 0) {
      const double dt = year_fraction(days[i - 1], days[i]);
      x += draw_log_increment(m, meas, dt, 0, static_cast<std::uint32_t>(i));
    }
    for (Date e : detail::listed_expiries(days[i], cfg)) {
      ContractPanelRow r;
      static_cast<ContractState&>(r) = model_contract_state(m, x, year_fraction(days[i], e));
      r.trade_date = days[i];
      r.expiry = e;
      panel.push_back(r);
    }
  }
  return panel;
}

struct SyntheticQuoteConfig {
  SyntheticMarketConfig market;
  double strike_step = 1.0;
  double strike_range_sd = 3.0;  // quoted strikes within F exp(+-r sigma sqrt(tau))
  double skew = 0.0;             // implied vol slope per unit log-moneyness
  double noise = 0.0;            // relative price noise (standard deviation)
};

// Option quotes of a simulated GBM market, priced with Black at a
// skewed implied volatility, for exercising the ingest-to-series pipeline.
inline std::vector<QuoteSet> simulate_option_quotes(const MarketModel& m,
                                                    const SyntheticQuoteConfig& cfg = {}) {
  m.validate();
  const auto days = detail::weekdays_from(cfg.market.start, cfg.market.trading_days);
  std::vector<QuoteSet> out;
  double x = std::log(m.initial_forward);
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (i > 0) x += draw_log_increment(m, Measure::P, year_fraction(days[i - 1], days[i]), 0,
                                       static_cast<std::uint32_t>(i));
    const double F = std::exp(x);
    QuoteSet qs;
    qs.trade_date = days[i];
    std::uint64_t serial = 0;
    for (Date e : detail::listed_expiries(days[i], cfg.market)) {
      const double tau = year_fraction(days[i], e);
      const double width = cfg.strike_range_sd * m.sigma * std::sqrt(tau);
      const double k_lo = std::ceil(F * std::exp(-width) / cfg.strike_step) * cfg.strike_step;
      auto& bucket = qs.by_expiry[e];
      for (double k = k_lo; k <= F * std::exp(width); k += cfg.strike_step) {
        const double vol = std::max(m.sigma + cfg.skew * std::log(k / F), 0.02);
        for (OptionSide side : {OptionSide::put, OptionSide::call}) {
          double price = black_price(side, F, k, vol, tau);
          if (cfg.noise > 0.0) {
            CounterRng rng(m.seed ^ 0x5bd1e995u, i, static_cast<std::uint32_t>(serial));
            price *= 1.0 + cfg.noise * rng.normal();
          }
          ++serial;
          OptionQuote q;
          q.trade_date = days[i];
          q.expiry = e;
          q.strike = k;
          q.side = side;
          q.mid = price;
          q.volume = 100.0;
          q.implied_vol = vol;
          bucket.push_back(q);
        }
      }
    }
    out.push_back(std::move(qs));
  }
  return out;
}

}  // namespace momentswap
