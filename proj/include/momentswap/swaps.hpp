#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "momentswap/contracts.hpp"
#include "momentswap/error.hpp"

namespace momentswap {

// Discretisation-invariant payoff phi(x^) = alpha' x^ + x^' Omega x^ over a
// state of power log contracts. `orders` names the state: {1} is [X],
// {1, 2} is [X, X2], and so on.
struct SwapSpec {
  std::string label = "custom";
  std::vector<int> orders;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd omega;
  double x0 = 0.0;  // inception log contract price

  std::size_t dim() const { return orders.size(); }
};

// State x_t and Sigma_t = E_t[x_T x_T'].
struct StateVector {
  std::vector<int> orders;
  Eigen::VectorXd values;
  Eigen::MatrixXd sigma;
};

struct PnlIncrement {
  double value = 0.0;
  double realised_part = 0.0;
  double implied_part = 0.0;
};

inline SwapSpec make_custom_swap(Eigen::VectorXd alpha, Eigen::MatrixXd omega,
                                 std::vector<int> orders, std::string label = "custom") {
  const auto n = static_cast<Eigen::Index>(orders.size());
  if (alpha.size() != n || omega.rows() != n || omega.cols() != n)
    throw DimensionError("alpha and omega must match the state dimension");
  for (int p : orders)
    if (p < 1 || p > 3) throw ValidationError("state orders must lie in 1..3");
  return SwapSpec{std::move(label), std::move(orders), std::move(alpha), std::move(omega), 0.0};
}

inline SwapSpec make_variance_swap(double X0 = 0.0) {
  SwapSpec s{"variance", {1}, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1), X0};
  return s;
}

inline SwapSpec make_third_moment_swap(double X0) {
  Eigen::MatrixXd om(2, 2);
  om << -2.0 * X0, 0.5, 0.5, 0.0;
  return SwapSpec{"third", {1, 2}, Eigen::VectorXd::Zero(2), om, X0};
}

inline SwapSpec make_fourth_moment_swap(double X0) {
  Eigen::MatrixXd om(3, 3);
  om << 3.0 * X0 * X0, -1.5 * X0, 0.5, -1.5 * X0, 0.0, 0.0, 0.5, 0.0, 0.0;
  return SwapSpec{"fourth", {1, 2, 3}, Eigen::VectorXd::Zero(3), om, X0};
}

// Long log contract: alpha = e1, Omega = 0. Its P&L over the life of the
// contract is the ERP estimator x_T - X_t.
inline SwapSpec make_erp_swap() {
  return SwapSpec{"erp", {1}, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1), 0.0};
}

// Implied state from traded contracts: E[X_T^(a) X_T^(b)] = X^(a+b) because
// every power log contract settles on a power of x_T.
inline StateVector implied_state(const ContractState& c, const std::vector<int>& orders) {
  const auto n = static_cast<Eigen::Index>(orders.size());
  StateVector s{orders, Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index a = 0; a < n; ++a) {
    if (orders[a] < 1 || orders[a] > 3) throw ValidationError("state orders must lie in 1..3");
    s.values(a) = c.X[orders[a]];
    for (Eigen::Index b = 0; b < n; ++b) s.sigma(a, b) = c.X[orders[a] + orders[b]];
  }
  return s;
}

namespace detail {

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline void check_dims(const SwapSpec& spec, Eigen::Index values, Eigen::Index sig_r,
                       Eigen::Index sig_c) {
  const auto n = static_cast<Eigen::Index>(spec.dim());
  if (spec.alpha.size() != n || spec.omega.rows() != n || spec.omega.cols() != n)
    throw DimensionError("swap spec is internally inconsistent");
  if (values != n || sig_r != n || sig_c != n)
    throw DimensionError("state dimension " + std::to_string(values) +
                         " does not match swap dimension " + std::to_string(n));
}

}  // namespace detail

// Fair-value swap rate tr(Omega (Sigma - x x')); the linear part has zero
// rate because the state is a martingale.
inline double swap_rate(const SwapSpec& spec, const StateVector& state) {
  detail::check_dims(spec, state.values.size(), state.sigma.rows(), state.sigma.cols());
  const Eigen::MatrixXd om = detail::symmetric_part(spec.omega);
  const Eigen::MatrixXd centred = state.sigma - state.values * state.values.transpose();
  return (om * centred).trace();
}

// P&L of the floating-receiver over one monitoring interval:
// alpha' x^ + tr(Omega (Sigma^ - 2 x_prev x^')). The realised part is the
// payoff phi(x^); the rest is the change in the fair value of what remains.
inline PnlIncrement incremental_pnl(const SwapSpec& spec, const Eigen::VectorXd& x_prev,
                                    const Eigen::VectorXd& x_hat, const Eigen::MatrixXd& sigma_hat) {
  detail::check_dims(spec, x_hat.size(), sigma_hat.rows(), sigma_hat.cols());
  if (x_prev.size() != x_hat.size()) throw DimensionError("x_prev and x_hat differ in size");
  const Eigen::MatrixXd om = detail::symmetric_part(spec.omega);
  PnlIncrement inc;
  inc.value = spec.alpha.dot(x_hat) + (om * sigma_hat).trace() - 2.0 * x_hat.dot(om * x_prev);
  inc.realised_part = spec.alpha.dot(x_hat) + x_hat.dot(om * x_hat);
  inc.implied_part = inc.value - inc.realised_part;
  return inc;
}

// Weights w_p with pi^ = sum_p w_p X^(p)^ for a swap on a power log state
// whose Sigma is the implied proxy. Selling the top contract and holding
// h_p = -w_p of the others replicates the swap.
inline std::array<double, 7> hedge_weights(const SwapSpec& spec, const Eigen::VectorXd& x_prev) {
  const auto n = static_cast<Eigen::Index>(spec.dim());
  if (x_prev.size() != n) throw DimensionError("x_prev does not match swap dimension");
  const Eigen::MatrixXd om = detail::symmetric_part(spec.omega);
  const Eigen::VectorXd lin = spec.alpha - 2.0 * om * x_prev;
  std::array<double, 7> w{};
  for (Eigen::Index a = 0; a < n; ++a) {
    w[spec.orders[a]] += lin(a);
    for (Eigen::Index b = 0; b < n; ++b) w[spec.orders[a] + spec.orders[b]] += om(a, b);
  }
  return w;
}

// Moment P&L in units of implied standard deviation^n.
inline double standardise_moment_pnl(double pnl, double X0, double X20, int n) {
  if (n != 3 && n != 4) throw ValidationError("standardisation order must be 3 or 4");
  const double var = X20 - X0 * X0;
  if (!(var > 0.0)) throw ValidationError("implied variance must be positive to standardise");
  return pnl * std::pow(var, -0.5 * n);
}

inline double realised_variance(std::span<const double> x_hat) {
  double s = 0.0;
  for (double x : x_hat) s += x * x;
  return s;
}

inline double log_variance_term(double x) { return 2.0 * (std::expm1(x) - x); }

inline double log_variance(std::span<const double> x_hat) {
  double s = 0.0;
  for (double x : x_hat) s += log_variance_term(x);
  return s;
}

// psi~(x) = 6 (x e^x - 2 e^x + x + 2), written to keep precision near zero.
inline double psi_cubic(double x) {
  if (std::abs(x) < 0.5) {
    // sum over n >= 3 of 6 (n - 2) x^n / n!
    double term = x * x * x / 6.0, sum = 0.0;
    for (int n = 3; n < 30; ++n) {
      sum += 6.0 * (n - 2) * term;
      term *= x / (n + 1);
    }
    return sum;
  }
  return 6.0 * (x * std::exp(x) - 2.0 * std::expm1(x) + x);
}

inline double psi_payoff(double x_hat, double v_eta_hat) {
  return 3.0 * v_eta_hat * std::expm1(x_hat) + psi_cubic(x_hat);
}

inline double erp_estimator(double x_T, double X_t) { return x_T - X_t; }

// Swap families the pipeline builds series for.
// `logreturn` is the log change of the forward, used for descriptive
// statistics of constant-maturity futures returns.
enum class SwapKind { variance, third, fourth, skew, kurtosis, rv, lv, psi, erp, logreturn };

inline std::string_view to_string(SwapKind k) {
  switch (k) {
    case SwapKind::variance: return "variance";
    case SwapKind::third: return "third";
    case SwapKind::fourth: return "fourth";
    case SwapKind::skew: return "skew";
    case SwapKind::kurtosis: return "kurtosis";
    case SwapKind::rv: return "rv";
    case SwapKind::lv: return "lv";
    case SwapKind::psi: return "psi";
    case SwapKind::erp: return "erp";
    case SwapKind::logreturn: return "logreturn";
  }
  return "?";
}

inline SwapKind parse_swap_kind(std::string_view s) {
  for (SwapKind k : {SwapKind::variance, SwapKind::third, SwapKind::fourth, SwapKind::skew,
                     SwapKind::kurtosis, SwapKind::rv, SwapKind::lv, SwapKind::psi, SwapKind::erp,
                     SwapKind::logreturn})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown swap spec '" + std::string(s) + "'");
}

inline SwapSpec make_swap(SwapKind k, double X0) {
  switch (k) {
    case SwapKind::variance: return make_variance_swap(X0);
    case SwapKind::third:
    case SwapKind::skew: return make_third_moment_swap(X0);
    case SwapKind::fourth:
    case SwapKind::kurtosis: return make_fourth_moment_swap(X0);
    case SwapKind::erp: return make_erp_swap();
    default: throw ValidationError("'" + std::string(to_string(k)) + "' is not a power log swap");
  }
}

// Fixed rate of the characteristic swaps on log returns, read off one
// maturity's contracts: rv and lv use the conventional rate 2 * int q/k^2,
// psi uses 3 v_eta + 6 (X - x).
inline double characteristic_rate(SwapKind k, const ContractState& c) {
  switch (k) {
    case SwapKind::rv:
    case SwapKind::lv: return c.conv_var_rate;
    case SwapKind::psi: return 3.0 * c.v_eta + 6.0 * (c.X[1] - c.x());
    default: throw ValidationError("'" + std::string(to_string(k)) + "' has no characteristic rate");
  }
}

// P&L over one monitoring interval on a fixed expiry for a position opened
// at `inception` and marked at `prev` and `cur`. Moment swaps fix Omega at
// inception; skew and kurtosis divide by inception implied variance^(n/2).
inline PnlIncrement interval_pnl(SwapKind k, const ContractState& inception,
                                 const ContractState& prev, const ContractState& cur) {
  switch (k) {
    case SwapKind::logreturn: {
      const double x_hat = cur.x() - prev.x();
      return PnlIncrement{x_hat, x_hat, 0.0};
    }
    case SwapKind::rv:
    case SwapKind::lv:
    case SwapKind::psi: {
      const double x_hat = cur.x() - prev.x();
      PnlIncrement inc;
      if (k == SwapKind::rv)
        inc.realised_part = x_hat * x_hat;
      else if (k == SwapKind::lv)
        inc.realised_part = log_variance_term(x_hat);
      else
        inc.realised_part = psi_payoff(x_hat, cur.v_eta - prev.v_eta);
      inc.implied_part = characteristic_rate(k, cur) - characteristic_rate(k, prev);
      inc.value = inc.realised_part + inc.implied_part;
      return inc;
    }
    default: break;
  }
  const SwapSpec spec = make_swap(k, inception.X[1]);
  const StateVector s0 = implied_state(prev, spec.orders);
  const StateVector s1 = implied_state(cur, spec.orders);
  PnlIncrement inc = incremental_pnl(spec, s0.values, s1.values - s0.values, s1.sigma - s0.sigma);
  if (k == SwapKind::skew || k == SwapKind::kurtosis) {
    const int n = k == SwapKind::skew ? 3 : 4;
    inc.value = standardise_moment_pnl(inc.value, inception.X[1], inception.X[2], n);
    inc.realised_part = standardise_moment_pnl(inc.realised_part, inception.X[1], inception.X[2], n);
    inc.implied_part = inc.value - inc.realised_part;
  }
  return inc;
}

// Fair rate at `c` of the swap opened at `inception` (standardised for skew
// and kurtosis).
inline double swap_rate(SwapKind k, const ContractState& inception, const ContractState& c) {
  switch (k) {
    case SwapKind::rv:
    case SwapKind::lv:
    case SwapKind::psi: return characteristic_rate(k, c);
    case SwapKind::logreturn: return 0.0;
    default: break;
  }
  const SwapSpec spec = make_swap(k, inception.X[1]);
  double s = swap_rate(spec, implied_state(c, spec.orders));
  if (k == SwapKind::skew) s = standardise_moment_pnl(s, inception.X[1], inception.X[2], 3);
  if (k == SwapKind::kurtosis) s = standardise_moment_pnl(s, inception.X[1], inception.X[2], 4);
  return s;
}

}  // namespace momentswap
