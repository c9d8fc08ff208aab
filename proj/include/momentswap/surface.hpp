#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momentswap/black.hpp"
#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/market_data.hpp"
#include "momentswap/qp.hpp"

namespace momentswap {

struct GridConfig {
  std::size_t points = 2000;
  double sigma_range = 6.0;
  // Strikes in [F exp(-r s sqrt(tau)), F exp(r s sqrt(tau))]; when false the
  // range is F (1 +- r s sqrt(tau)), clipped above zero.
  bool multiplicative = true;
  // Largest in-sample RMSE, in price units, the automatic smoothing choice
  // may accept.
  double target_rmse = 0.25;
  // Fixed smoothing weight on normalized prices; unset selects it by GCV.
  std::optional<double> smoothing;
  bool calendar_repair = true;
};

// One maturity's OTM price curve on an equally spaced strike grid.
struct StrikeGrid {
  Date trade_date;
  Date expiry;
  double forward = 0.0;
  std::vector<double> strikes;
  std::vector<double> otm_prices;
  double avg_implied_vol = 0.0;
  double fit_rmse = 0.0;  // in-sample RMSE of the smoother, price units

  double tau() const { return year_fraction(trade_date, expiry); }
  std::size_t size() const { return strikes.size(); }

  double call_price(std::size_t j) const {
    return otm_prices[j] + std::max(forward - strikes[j], 0.0);
  }

  // Linear interpolation of OTM prices; zero outside the grid.
  double otm_price_at(double k) const {
    if (strikes.empty() || k < strikes.front() || k > strikes.back()) return 0.0;
    auto it = std::upper_bound(strikes.begin(), strikes.end(), k);
    if (it == strikes.end()) return otm_prices.back();
    const std::size_t j = static_cast<std::size_t>(it - strikes.begin());
    const double w = (k - strikes[j - 1]) / (strikes[j] - strikes[j - 1]);
    return (1.0 - w) * otm_prices[j - 1] + w * otm_prices[j];
  }
};

// Natural cubic spline in value / second-derivative form, extended linearly
// beyond its end knots.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  NaturalSpline(std::vector<double> knots, std::vector<double> values,
                std::vector<double> second_derivs)
      : m_(std::move(knots)), g_(std::move(values)), gamma_(std::move(second_derivs)) {}

  double operator()(double x) const {
    const std::size_t n = m_.size();
    if (x <= m_.front()) return g_.front() + (x - m_.front()) * left_slope();
    if (x >= m_.back()) return g_.back() + (x - m_.back()) * right_slope();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(m_.begin(), m_.end(), x) - m_.begin()) - 1;
    const std::size_t j = std::min(i + 1, n - 1);
    const double h = m_[j] - m_[i];
    const double a = x - m_[i], b = m_[j] - x;
    return (a * g_[j] + b * g_[i]) / h -
           a * b / 6.0 * ((1.0 + a / h) * gamma_[j] + (1.0 + b / h) * gamma_[i]);
  }

  double left_slope() const {
    const double h = m_[1] - m_[0];
    return (g_[1] - g_[0]) / h - h * (2.0 * gamma_[0] + gamma_[1]) / 6.0;
  }
  double right_slope() const {
    const std::size_t n = m_.size();
    const double h = m_[n - 1] - m_[n - 2];
    return (g_[n - 1] - g_[n - 2]) / h + h * (gamma_[n - 2] + 2.0 * gamma_[n - 1]) / 6.0;
  }

  const std::vector<double>& knots() const { return m_; }
  const std::vector<double>& values() const { return g_; }
  const std::vector<double>& second_derivatives() const { return gamma_; }

 private:
  std::vector<double> m_, g_, gamma_;
};

struct SplineFitResult {
  NaturalSpline spline;
  double smoothing = 0.0;
  double rmse = 0.0;  // normalized units
  bool constrained = false;
};

namespace detail {

// Band matrices of the roughness penalty: Q'g = R gamma relates knot values to
// interior second derivatives and gamma' R gamma is the integral of g''^2.
struct SplineBands {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

inline SplineBands spline_bands(const std::vector<double>& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  SplineBands b{Eigen::MatrixXd::Zero(n, n - 2), Eigen::MatrixXd::Zero(n - 2, n - 2)};
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double h0 = m[i] - m[i - 1], h1 = m[i + 1] - m[i];
    const Eigen::Index c = i - 1;
    b.Q(i - 1, c) = 1.0 / h0;
    b.Q(i, c) = -1.0 / h0 - 1.0 / h1;
    b.Q(i + 1, c) = 1.0 / h1;
    b.R(c, c) = (h0 + h1) / 3.0;
    if (c + 1 < n - 2) b.R(c, c + 1) = b.R(c + 1, c) = h1 / 6.0;
  }
  return b;
}

inline NaturalSpline make_spline(const std::vector<double>& m, const Eigen::VectorXd& g,
                                 const Eigen::VectorXd& gamma_interior) {
  const std::size_t n = m.size();
  std::vector<double> gv(g.data(), g.data() + n), gam(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) gam[i] = gamma_interior(static_cast<Eigen::Index>(i - 1));
  return NaturalSpline(m, std::move(gv), std::move(gam));
}

// Inequalities of the normalized call curve c(m) = C(mF)/F, written A z >= a
// over z = [g; gamma].
inline void shape_constraints(const std::vector<double>& m, Eigen::MatrixXd& A, Eigen::VectorXd& a,
                              std::vector<std::string>& names) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  const Eigen::Index nv = 2 * n - 2;
  const Eigen::Index rows = (n - 2) + 2 + n + 1;
  A = Eigen::MatrixXd::Zero(rows, nv);
  a = Eigen::VectorXd::Zero(rows);
  names.clear();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n - 2; ++i, ++r) {
    A(r, n + i) = 1.0;
    names.push_back("butterfly at knot " + std::to_string(i + 1));
  }
  const double hl = m[1] - m[0];
  A(r, 0) = -1.0 / hl;
  A(r, 1) = 1.0 / hl;
  A(r, n) = -hl / 6.0;
  a(r) = -1.0;
  names.push_back("call slope >= -1 at lowest strike");
  ++r;
  const double hr = m[n - 1] - m[n - 2];
  A(r, n - 1) = -1.0 / hr;
  A(r, n - 2) = 1.0 / hr;
  A(r, n + n - 3) = -hr / 6.0;
  names.push_back("call slope <= 0 at highest strike");
  ++r;
  for (Eigen::Index i = 0; i < n; ++i, ++r) {
    A(r, i) = 1.0;
    a(r) = std::max(1.0 - m[i], 0.0);
    names.push_back("intrinsic lower bound at knot " + std::to_string(i));
  }
  A(r, 0) = -1.0;
  a(r) = -1.0;
  names.push_back("call price <= forward");
}

}  // namespace detail

// Penalized least-squares cubic spline through normalized call prices
// (m_i, c_i), constrained to be convex, non-increasing with slope >= -1, and
// above intrinsic value. With no fixed smoothing weight, lambda minimises GCV
// of the unconstrained smoother, capped so the in-sample RMSE stays within
// `max_rmse` (normalized units).
inline SplineFitResult fit_call_spline(const std::vector<double>& m, const std::vector<double>& c,
                                       std::optional<double> smoothing, double max_rmse) {
  const std::size_t n = m.size();
  if (n < 3) throw SurfaceFitError("knot count", "at least three strikes are required");
  for (std::size_t i = 1; i < n; ++i)
    if (!(m[i] > m[i - 1])) throw SurfaceFitError("strike order", "strikes must strictly increase");
  const Eigen::Index N = static_cast<Eigen::Index>(n);
  const Eigen::Map<const Eigen::VectorXd> y(c.data(), N);
  const auto bands = detail::spline_bands(m);
  const Eigen::LLT<Eigen::MatrixXd> Rllt(bands.R);
  const Eigen::MatrixXd RinvQt = Rllt.solve(bands.Q.transpose());
  const Eigen::MatrixXd K = bands.Q * RinvQt;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd uy = eig.eigenvectors().transpose() * y;

  auto smooth = [&](double lambda) -> Eigen::VectorXd {
    const Eigen::VectorXd shrink = (1.0 + lambda * d.array()).inverse().matrix();
    return eig.eigenvectors() * shrink.cwiseProduct(uy);
  };
  auto rmse_of = [&](const Eigen::VectorXd& g) {
    return std::sqrt((g - y).squaredNorm() / static_cast<double>(n));
  };

  double lambda;
  if (smoothing) {
    lambda = *smoothing;
  } else {
    // Ladder of ten weights per decade; RMSE increases with lambda.
    double best_gcv = std::numeric_limits<double>::infinity();
    double best = 0.0;
    std::vector<double> ladder;
    for (int e = -160; e <= 20; ++e) ladder.push_back(std::pow(10.0, e / 10.0));
    for (double lam : ladder) {
      const Eigen::VectorXd g = smooth(lam);
      const double trace = (1.0 + lam * d.array()).inverse().sum();
      const double dof = static_cast<double>(n) - trace;
      if (dof <= 1e-9) continue;
      const double gcv = static_cast<double>(n) * (g - y).squaredNorm() / (dof * dof);
      if (gcv < best_gcv) {
        best_gcv = gcv;
        best = lam;
      }
    }
    lambda = best;
    if (rmse_of(smooth(lambda)) > max_rmse) {
      double lo = 0.0, hi = lambda;
      for (int it = 0; it < 60; ++it) {
        const double mid = lo > 0.0 ? std::sqrt(lo * hi) : hi * 1e-3;
        if (rmse_of(smooth(mid)) > max_rmse)
          hi = mid;
        else
          lo = mid;
        if (lo > 0.0 && hi / lo < 1.01) break;
      }
      lambda = lo;
    }
  }

  Eigen::MatrixXd A;
  Eigen::VectorXd a;
  std::vector<std::string> names;
  detail::shape_constraints(m, A, a, names);
  // With gamma = R^-1 Q' g substituted the program is in g alone:
  // min 1/2 g'(I + lambda K)g - y'g  s.t.  (A_g + A_gamma R^-1 Q') g >= a.
  const Eigen::MatrixXd Ag = A.leftCols(N) + A.rightCols(N - 2) * RinvQt;

  // Constraints do not depend on lambda, so each solve starts from the
  // previous optimum and its active set.
  Eigen::VectorXd start = Eigen::VectorXd::Ones(N);
  std::vector<int> active;
  auto solve_at = [&](double lam) -> SplineFitResult {
    SplineFitResult out;
    out.smoothing = lam;
    const Eigen::VectorXd g = smooth(lam);
    if ((Ag * g - a).minCoeff() >= -1e-14) {
      out.spline = detail::make_spline(m, g, RinvQt * g);
      out.rmse = rmse_of(g);
      return out;
    }
    QuadraticProgram qp;
    qp.hessian = Eigen::MatrixXd::Identity(N, N) + lam * K;
    qp.linear = -y;
    qp.eq = Eigen::MatrixXd(0, N);
    qp.eq_rhs = Eigen::VectorXd(0);
    qp.ineq = Ag;
    qp.ineq_rhs = a;
    qp.ineq_names = names;
    QpSolution sol;
    try {
      sol = solve_qp(qp, start, active);
    } catch (const QpError& e) {
      throw SurfaceFitError(e.constraint(), e.what());
    }
    start = sol.x;
    active = sol.active;
    out.spline = detail::make_spline(m, sol.x, RinvQt * sol.x);
    out.rmse = rmse_of(sol.x);
    out.constrained = true;
    return out;
  };

  SplineFitResult fit = solve_at(lambda);
  if (!smoothing) {
    for (int step = 0; step < 8 && fit.rmse > max_rmse && lambda > 1e-300; ++step) {
      lambda *= 0.1;
      fit = solve_at(lambda);
    }
  }
  return fit;
}

namespace detail {

// Lower convex hull of (x_j, y_j), evaluated back at every x_j.
inline void lower_convex_hull(const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 3) return;
  std::vector<std::size_t> hull;
  for (std::size_t j = 0; j < n; ++j) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (x[b] - x[a]) * (y[j] - y[a]) - (y[b] - y[a]) * (x[j] - x[a]);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(j);
  }
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t a = hull[h], b = hull[h + 1];
    for (std::size_t j = a + 1; j < b; ++j) {
      const double w = (x[j] - x[a]) / (x[b] - x[a]);
      y[j] = (1.0 - w) * y[a] + w * y[b];
    }
  }
}

// Piecewise-linear normalized call curve c(m) = C(mF)/F of a grid, extended
// linearly beyond its ends.
inline double normalized_call(const StrikeGrid& g, double m) {
  const double k = m * g.forward;
  const auto& ks = g.strikes;
  const std::size_t n = ks.size();
  std::size_t j;
  if (k <= ks.front())
    j = 1;
  else if (k >= ks.back())
    j = n - 1;
  else
    j = static_cast<std::size_t>(std::upper_bound(ks.begin(), ks.end(), k) - ks.begin());
  const double c0 = g.call_price(j - 1), c1 = g.call_price(j);
  const double w = (k - ks[j - 1]) / (ks[j] - ks[j - 1]);
  return ((1.0 - w) * c0 + w * c1) / g.forward;
}

inline std::vector<double> grid_strikes(double forward, double sigma, double tau,
                                        const GridConfig& cfg) {
  if (cfg.points < 3) throw ValidationError("grid needs at least three points");
  const double width = cfg.sigma_range * sigma * std::sqrt(tau);
  double lo, hi;
  if (cfg.multiplicative) {
    lo = forward * std::exp(-width);
    hi = forward * std::exp(width);
  } else {
    lo = std::max(forward * (1.0 - width), forward * 1e-6);
    hi = forward * (1.0 + width);
  }
  if (!(hi > lo)) throw SurfaceFitError("grid range", "degenerate strike range");
  std::vector<double> k(cfg.points);
  const double dk = (hi - lo) / static_cast<double>(cfg.points - 1);
  for (std::size_t j = 0; j < cfg.points; ++j) k[j] = lo + dk * static_cast<double>(j);
  k.back() = hi;
  return k;
}

inline void set_call_prices(StrikeGrid& g, const std::vector<double>& calls) {
  for (std::size_t j = 0; j < g.strikes.size(); ++j)
    g.otm_prices[j] = std::max(calls[j] - std::max(g.forward - g.strikes[j], 0.0), 0.0);
}

inline std::vector<double> call_prices(const StrikeGrid& g) {
  std::vector<double> c(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) c[j] = g.call_price(j);
  return c;
}

}  // namespace detail

// Exact flat-volatility Black grid over the same strike range fit_surface uses.
inline StrikeGrid make_black_grid(Date trade_date, Date expiry, double forward, double vol,
                                  const GridConfig& cfg = {}) {
  StrikeGrid g;
  g.trade_date = trade_date;
  g.expiry = expiry;
  g.forward = forward;
  g.avg_implied_vol = vol;
  const double tau = g.tau();
  g.strikes = detail::grid_strikes(forward, vol, tau, cfg);
  g.otm_prices.resize(g.strikes.size());
  for (std::size_t j = 0; j < g.strikes.size(); ++j)
    g.otm_prices[j] = black_otm_price(forward, g.strikes[j], vol, tau);
  return g;
}

// Average Black implied volatility of a curve's OTM quotes.
inline double average_implied_vol(const RawOtmCurve& c) {
  const double tau = c.tau();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : c.points) {
    const auto side = p.strike < c.forward ? OptionSide::put : OptionSide::call;
    if (auto iv = black_implied_vol(side, p.price, c.forward, p.strike, tau)) {
      sum += *iv;
      ++count;
    }
  }
  if (count == 0)
    throw SurfaceFitError("implied volatility",
                          "no quote of expiry " + format_date(c.expiry) + " has an implied volatility");
  return sum / static_cast<double>(count);
}

// Smooth one maturity and sample it on the strike grid. Inside the quoted
// range the spline is used; outside it the implied volatility of the nearest
// quoted strike is held flat.
inline StrikeGrid fit_single_maturity(const RawOtmCurve& curve, const GridConfig& cfg = {}) {
  const double F = curve.forward;
  if (!(F > 0.0)) throw SurfaceFitError("forward", "forward must be positive");
  const double tau = curve.tau();
  if (!(tau > 0.0)) throw SurfaceFitError("maturity", "expiry must follow trade date");
  const std::size_t n = curve.points.size();
  std::vector<double> m(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = curve.points[i].strike;
    if (!(curve.points[i].price >= 0.0))
      throw SurfaceFitError("price bound", "negative option price in input");
    m[i] = k / F;
    c[i] = (curve.points[i].price + std::max(F - k, 0.0)) / F;
  }
  const auto fit = fit_call_spline(m, c, cfg.smoothing, cfg.target_rmse / F);

  StrikeGrid g;
  g.trade_date = curve.trade_date;
  g.expiry = curve.expiry;
  g.forward = F;
  g.avg_implied_vol = average_implied_vol(curve);
  g.fit_rmse = fit.rmse * F;
  g.strikes = detail::grid_strikes(F, g.avg_implied_vol, tau, cfg);
  g.otm_prices.assign(g.strikes.size(), 0.0);

  const double k_lo = curve.points.front().strike, k_hi = curve.points.back().strike;
  auto end_vol = [&](double k) {
    const double q = F * fit.spline(k / F) - std::max(F - k, 0.0);
    const auto side = k < F ? OptionSide::put : OptionSide::call;
    return black_implied_vol(side, q, F, k, tau).value_or(g.avg_implied_vol);
  };
  const double vol_lo = end_vol(k_lo), vol_hi = end_vol(k_hi);
  std::vector<double> calls(g.strikes.size());
  for (std::size_t j = 0; j < g.strikes.size(); ++j) {
    const double k = g.strikes[j];
    if (k < k_lo)
      calls[j] = black_price(OptionSide::call, F, k, vol_lo, tau);
    else if (k > k_hi)
      calls[j] = black_price(OptionSide::call, F, k, vol_hi, tau);
    else
      calls[j] = F * fit.spline(k / F);
    calls[j] = std::clamp(calls[j], std::max(F - k, 0.0), F);
  }
  detail::lower_convex_hull(g.strikes, calls);
  detail::set_call_prices(g, calls);
  return g;
}

// Raises each longer maturity's call prices to the shorter maturity's at equal
// forward moneyness, walking from the shortest expiry outwards.
inline void repair_calendar(std::vector<StrikeGrid>& grids) {
  std::sort(grids.begin(), grids.end(),
            [](const StrikeGrid& a, const StrikeGrid& b) { return a.expiry < b.expiry; });
  for (std::size_t i = 1; i < grids.size(); ++i) {
    auto& g = grids[i];
    auto calls = detail::call_prices(g);
    bool changed = false;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double floor = g.forward * detail::normalized_call(grids[i - 1], g.strikes[j] / g.forward);
      if (floor > calls[j]) {
        calls[j] = floor;
        changed = true;
      }
    }
    if (changed) detail::set_call_prices(g, calls);
  }
}

struct SurfaceFit {
  std::vector<StrikeGrid> grids;  // ordered by expiry
  std::vector<std::string> warnings;
};

// Fits every maturity of one trade date, then repairs calendar spreads.
inline SurfaceFit fit_surface(std::span<const RawOtmCurve> curves, const GridConfig& cfg = {}) {
  if (curves.empty()) throw SurfaceFitError("input", "no option curves to fit");
  SurfaceFit out;
  for (const auto& c : curves) {
    if (c.trade_date != curves.front().trade_date)
      throw SurfaceFitError("input", "curves belong to different trade dates");
    auto g = fit_single_maturity(c, cfg);
    if (g.fit_rmse > cfg.target_rmse * (1.0 + 1e-9))
      out.warnings.push_back("expiry " + format_date(c.expiry) + ": in-sample RMSE " +
                             format_double(g.fit_rmse) + " exceeds target");
    out.grids.push_back(std::move(g));
  }
  if (cfg.calendar_repair) repair_calendar(out.grids);
  std::sort(out.grids.begin(), out.grids.end(),
            [](const StrikeGrid& a, const StrikeGrid& b) { return a.expiry < b.expiry; });
  return out;
}

struct ArbitrageReport {
  double min_butterfly = std::numeric_limits<double>::infinity();
  double min_calendar = std::numeric_limits<double>::quiet_NaN();
  bool calendar_checked = false;
  std::string calendar_note;
  std::vector<std::string> violations;

  std::size_t violation_count() const { return violations.size(); }
  bool clean() const { return violations.empty(); }
};

// Butterflies are measured on call-equivalent prices q(k) + (F - k)^+, which
// are convex in strike for an arbitrage-free curve; raw OTM prices peak at
// the forward and are not. Calendar spreads compare normalized call prices of
// consecutive expiries of the same trade date at equal forward moneyness.
inline ArbitrageReport check_static_arbitrage(std::span<const StrikeGrid> grids,
                                              double tolerance = 1e-10) {
  ArbitrageReport rep;
  for (const auto& g : grids) {
    const std::string tag = format_date(g.trade_date) + "/" + format_date(g.expiry);
    for (std::size_t j = 0; j < g.size(); ++j)
      if (g.otm_prices[j] < -tolerance)
        rep.violations.push_back(tag + ": negative price at strike " + format_double(g.strikes[j]));
    for (std::size_t j = 1; j + 1 < g.size(); ++j) {
      const double h1 = g.strikes[j] - g.strikes[j - 1], h2 = g.strikes[j + 1] - g.strikes[j];
      const double b = 2.0 * (h2 * g.call_price(j - 1) + h1 * g.call_price(j + 1)) / (h1 + h2) -
                       2.0 * g.call_price(j);
      rep.min_butterfly = std::min(rep.min_butterfly, b);
      if (b < -tolerance)
        rep.violations.push_back(tag + ": butterfly " + format_double(b) + " at strike " +
                                 format_double(g.strikes[j]));
    }
  }

  std::map<Date, std::vector<const StrikeGrid*>> by_date;
  for (const auto& g : grids) by_date[g.trade_date].push_back(&g);
  for (auto& [date, gs] : by_date) {
    std::sort(gs.begin(), gs.end(), [](auto* a, auto* b) { return a->expiry < b->expiry; });
    for (std::size_t i = 1; i < gs.size(); ++i) {
      const StrikeGrid& shorter = *gs[i - 1];
      const StrikeGrid& longer = *gs[i];
      rep.calendar_checked = true;
      for (std::size_t j = 0; j < longer.size(); ++j) {
        const double k = longer.strikes[j];
        const double spread =
            longer.call_price(j) - longer.forward * detail::normalized_call(shorter, k / longer.forward);
        rep.min_calendar = std::isnan(rep.min_calendar) ? spread : std::min(rep.min_calendar, spread);
        if (spread < -tolerance)
          rep.violations.push_back(format_date(date) + ": calendar spread " + format_double(spread) +
                                   " between " + format_date(shorter.expiry) + " and " +
                                   format_date(longer.expiry) + " at strike " + format_double(k));
      }
    }
  }
  if (!rep.calendar_checked) rep.calendar_note = "n/a: fewer than two maturities per trade date";
  return rep;
}

// Grid store: index.csv (trade_date, expiry, forward, avg_implied_vol,
// fit_rmse, file) plus one grid_<date>_<expiry>.csv per curve with columns
// strike, otm_price at full precision.
inline void write_grid_store(const std::filesystem::path& dir, std::span<const StrikeGrid> grids) {
  std::filesystem::create_directories(dir);
  CsvWriter index(dir / "index.csv");
  index.row("trade_date", "expiry", "forward", "avg_implied_vol", "fit_rmse", "file");
  for (const auto& g : grids) {
    const std::string file =
        "grid_" + format_date(g.trade_date) + "_" + format_date(g.expiry) + ".csv";
    index.row(format_date(g.trade_date), format_date(g.expiry), g.forward, g.avg_implied_vol,
              g.fit_rmse, file);
    CsvWriter w(dir / file);
    w.row("strike", "otm_price");
    for (std::size_t j = 0; j < g.size(); ++j) w.row(g.strikes[j], g.otm_prices[j]);
  }
}

inline std::vector<StrikeGrid> read_grid_store(const std::filesystem::path& dir) {
  const auto index_path = dir / "index.csv";
  if (!std::filesystem::exists(index_path))
    throw DatasetError("grid store '" + dir.string() + "' has no index.csv");
  const auto idx = read_delimited(index_path);
  std::vector<StrikeGrid> out;
  const std::size_t c_td = idx.column("trade_date"), c_ex = idx.column("expiry"),
                    c_f = idx.column("forward"), c_v = idx.column("avg_implied_vol"),
                    c_r = idx.column("fit_rmse"), c_file = idx.column("file");
  for (std::size_t r = 0; r < idx.rows.size(); ++r) {
    const auto& row = idx.rows[r];
    StrikeGrid g;
    try {
      g.trade_date = parse_date(row.at(c_td));
      g.expiry = parse_date(row.at(c_ex));
      g.forward = parse_double(row.at(c_f));
      g.avg_implied_vol = parse_double(row.at(c_v));
      g.fit_rmse = parse_double(row.at(c_r));
    } catch (const std::exception& e) {
      throw RowError(idx.source, idx.lines[r], e.what());
    }
    const auto t = read_delimited(dir / row.at(c_file));
    const std::size_t ck = t.column("strike"), cq = t.column("otm_price");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      try {
        g.strikes.push_back(parse_double(t.rows[i].at(ck)));
        g.otm_prices.push_back(parse_double(t.rows[i].at(cq)));
      } catch (const std::exception& e) {
        throw RowError(t.source, t.lines[i], e.what());
      }
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const StrikeGrid& a, const StrikeGrid& b) {
    return std::tie(a.trade_date, a.expiry) < std::tie(b.trade_date, b.expiry);
  });
  return out;
}

}  // namespace momentswap
