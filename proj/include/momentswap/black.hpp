#pragma once

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

namespace momentswap {

enum class OptionSide { put, call };

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Undiscounted (forward) Black prices.
inline double black_price(OptionSide side, double forward, double strike, double vol,
                          double tau) noexcept {
  const double sd = vol * std::sqrt(std::max(tau, 0.0));
  if (sd <= 0.0)
    return side == OptionSide::call ? std::max(forward - strike, 0.0)
                                    : std::max(strike - forward, 0.0);
  const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  if (side == OptionSide::call) return forward * normal_cdf(d1) - strike * normal_cdf(d2);
  return strike * normal_cdf(-d2) - forward * normal_cdf(-d1);
}

// Out-of-the-money price: put below the forward, call at or above it.
inline double black_otm_price(double forward, double strike, double vol, double tau) noexcept {
  return black_price(strike < forward ? OptionSide::put : OptionSide::call, forward, strike, vol,
                     tau);
}

// Black implied volatility, or nullopt when the price carries no time value
// or breaches the no-arbitrage bounds.
inline std::optional<double> black_implied_vol(OptionSide side, double price, double forward,
                                               double strike, double tau) {
  if (!(tau > 0.0) || !(price > 0.0)) return std::nullopt;
  const double intrinsic = side == OptionSide::call ? std::max(forward - strike, 0.0)
                                                    : std::max(strike - forward, 0.0);
  const double upper = side == OptionSide::call ? forward : strike;
  if (price <= intrinsic || price >= upper) return std::nullopt;
  double lo = 1e-8, hi = 1.0;
  auto f = [&](double v) { return black_price(side, forward, strike, v, tau) - price; };
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e3) return std::nullopt;
  }
  if (f(lo) > 0.0) return std::nullopt;
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace momentswap
