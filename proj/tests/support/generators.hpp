#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "momentswap/swaps.hpp"

namespace testing_support {

// Random swap on a power log state of dimension 1..3 with a deliberately
// non-symmetric Omega.
inline momentswap::SwapSpec random_spec(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dim(1, 3);
  std::normal_distribution<double> nd;
  const int n = dim(gen);
  std::vector<int> orders;
  for (int p = 1; p <= n; ++p) orders.push_back(p);
  Eigen::VectorXd alpha(n);
  Eigen::MatrixXd omega(n, n);
  for (int a = 0; a < n; ++a) {
    alpha(a) = nd(gen);
    for (int b = 0; b < n; ++b) omega(a, b) = nd(gen);
  }
  return momentswap::make_custom_swap(alpha, omega, orders, "random");
}

// Internally consistent path of states: arbitrary values and symmetric
// second-moment matrices along the way, settling at Sigma_T = x_T x_T'.
inline std::vector<momentswap::StateVector> random_state_path(std::mt19937_64& gen,
                                                              const std::vector<int>& orders,
                                                              int steps) {
  std::normal_distribution<double> nd;
  const auto n = static_cast<Eigen::Index>(orders.size());
  std::vector<momentswap::StateVector> path;
  Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(n, [&] { return 3.0 * nd(gen); });
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) x += Eigen::VectorXd::NullaryExpr(n, [&] { return 0.2 * nd(gen); });
    Eigen::MatrixXd s;
    if (i == steps) {
      s = x * x.transpose();
    } else {
      const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return 0.3 * nd(gen); });
      s = x * x.transpose() + b * b.transpose();
    }
    path.push_back({orders, x, s});
  }
  return path;
}

inline double realised_payoff(const momentswap::SwapSpec& spec, const Eigen::VectorXd& x_hat) {
  return spec.alpha.dot(x_hat) + x_hat.dot(spec.omega * x_hat);
}

}  // namespace testing_support
