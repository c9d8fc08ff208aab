#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/surface.hpp"

namespace momentswap {

enum class Quadrature { left_riemann, trapezoid };

namespace detail {

// d^2/dk^2 (ln k)^p for p = 1..6.
inline double power_log_weight(int p, double k) {
  if (p < 1 || p > 6) throw ValidationError("unsupported power log order " + std::to_string(p));
  if (!(k > 0.0)) throw ValidationError("strike must be positive");
  const double l = std::log(k);
  const double inv_k2 = 1.0 / (k * k);
  if (p == 1) return -inv_k2;
  return p * std::pow(l, p - 2) * inv_k2 * (p - 1 - l);
}

inline void validate_grid(const StrikeGrid& g) {
  if (!(g.forward > 0.0) || !std::isfinite(g.forward))
    throw ValidationError("grid forward must be positive");
  if (g.strikes.size() != g.otm_prices.size() || g.strikes.size() < 2)
    throw ValidationError("grid strikes and prices must pair up (at least two points)");
  if (!(g.strikes.front() > 0.0)) throw ValidationError("grid strikes must be positive");
  for (std::size_t j = 1; j < g.strikes.size(); ++j)
    if (!(g.strikes[j] > g.strikes[j - 1]))
      throw ValidationError("grid strikes must strictly increase");
  for (double q : g.otm_prices)
    if (!std::isfinite(q) || q < -1e-10) throw ValidationError("grid prices must be non-negative");
}

// Sum over j = 2..N of w(k_j) q(k_j) (k_j - k_{j-1}), or its trapezoid
// counterpart.
template <class Weight>
double integrate_grid(const StrikeGrid& g, Weight&& w, Quadrature rule) {
  validate_grid(g);
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  double prev = w(g.strikes[0]) * g.otm_prices[0];
  for (std::size_t j = 1; j < g.strikes.size(); ++j) {
    const double cur = w(g.strikes[j]) * g.otm_prices[j];
    const double dk = g.strikes[j] - g.strikes[j - 1];
    add(rule == Quadrature::left_riemann ? cur * dk : 0.5 * (cur + prev) * dk);
    prev = cur;
  }
  return sum + comp;
}

}  // namespace detail

// Second strike derivative of (ln k)^p, the replication weight of the p-th
// power log contract. Orders 1..4.
inline double gamma_weight(int p, double k) {
  if (p < 1 || p > 4) throw ValidationError("unsupported power log order " + std::to_string(p));
  return detail::power_log_weight(p, k);
}

// Forward price of the claim paying (ln F_T)^p: (ln F)^p plus the strike
// integral of the replication weight against OTM prices. Orders 1..6; orders
// five and six feed the implied second-moment matrix of fourth-moment swaps.
inline double price_power_log_contract(const StrikeGrid& g, int p,
                                       Quadrature rule = Quadrature::left_riemann) {
  if (p < 1 || p > 6) throw ValidationError("unsupported power log order " + std::to_string(p));
  const double x = std::log(g.forward);
  const double integral =
      detail::integrate_grid(g, [p](double k) { return detail::power_log_weight(p, k); }, rule);
  return std::pow(x, p) + integral;
}

// Entropy variance 2 F^-1 * integral of q(k) / k.
inline double price_entropy_contract(const StrikeGrid& g,
                                     Quadrature rule = Quadrature::left_riemann) {
  return 2.0 / g.forward * detail::integrate_grid(g, [](double k) { return 1.0 / k; }, rule);
}

// Conventional variance swap rate 2 * integral of q(k) / k^2.
inline double conventional_variance_rate(const StrikeGrid& g,
                                         Quadrature rule = Quadrature::left_riemann) {
  return 2.0 * detail::integrate_grid(g, [](double k) { return 1.0 / (k * k); }, rule);
}

struct ImpliedMoments {
  double mean = 0.0;      // E[ln(F_T / F)]
  double variance = 0.0;  // central moments of ln F_T
  double third = 0.0;
  double fourth = 0.0;
};

// Central moments of the terminal log price replicated with weights of
// (ln(k/F))^p. Centring at the forward keeps the integrands small, so the
// higher moments do not suffer the cancellation that X3 - 3 X X2 + 2 X^3
// incurs when ln F is large.
inline ImpliedMoments implied_central_moments(const StrikeGrid& g,
                                              Quadrature rule = Quadrature::left_riemann) {
  std::array<double, 5> raw{1.0, 0.0, 0.0, 0.0, 0.0};
  const double F = g.forward;
  for (int p = 1; p <= 4; ++p)
    raw[p] = detail::integrate_grid(
        g, [p, F](double k) { return detail::power_log_weight(p, k / F) / (F * F); }, rule);
  ImpliedMoments m;
  const double mu = raw[1];
  m.mean = mu;
  m.variance = raw[2] - mu * mu;
  m.third = raw[3] - 3.0 * mu * raw[2] + 2.0 * mu * mu * mu;
  m.fourth = raw[4] - 4.0 * mu * raw[3] + 6.0 * mu * mu * raw[2] - 3.0 * mu * mu * mu * mu;
  return m;
}

// Forward, power log contracts X^(1..6), entropy variance and conventional
// variance rate of one maturity at one instant.
struct ContractState {
  double forward = 0.0;
  std::array<double, 7> X{1.0, 0, 0, 0, 0, 0, 0};  // X[p] = X^(p), X[0] = 1
  double v_eta = 0.0;
  double conv_var_rate = 0.0;

  double x() const { return std::log(forward); }
  double implied_variance() const { return X[2] - X[1] * X[1]; }
  double implied_fourth_central() const {
    const double m = X[1];
    return X[4] - 4.0 * m * X[3] + 6.0 * m * m * X[2] - 3.0 * m * m * m * m;
  }
};

struct ContractPanelRow : ContractState {
  Date trade_date;
  Date expiry;

  double tau() const { return year_fraction(trade_date, expiry); }
};

inline ContractPanelRow price_contracts(const StrikeGrid& g,
                                        Quadrature rule = Quadrature::left_riemann) {
  ContractPanelRow r;
  r.trade_date = g.trade_date;
  r.expiry = g.expiry;
  r.forward = g.forward;
  for (int p = 1; p <= 6; ++p) r.X[p] = price_power_log_contract(g, p, rule);
  r.v_eta = price_entropy_contract(g, rule);
  r.conv_var_rate = conventional_variance_rate(g, rule);
  return r;
}

// All rows sorted by (trade_date, expiry).
using ContractPanel = std::vector<ContractPanelRow>;

inline const std::vector<std::string>& panel_columns() {
  static const std::vector<std::string> cols{"trade_date", "expiry", "tau", "F",  "X",
                                             "X2",         "X3",     "X4",  "X5", "X6",
                                             "v_eta",      "conv_var_rate"};
  return cols;
}

// Panel store: one panel_<date>.csv per trade date, one row per expiry.
inline void write_panel_store(const std::filesystem::path& dir, const ContractPanel& panel) {
  std::filesystem::create_directories(dir);
  std::map<Date, std::vector<const ContractPanelRow*>> by_date;
  for (const auto& r : panel) by_date[r.trade_date].push_back(&r);
  for (const auto& [date, rows] : by_date) {
    CsvWriter w(dir / ("panel_" + format_date(date) + ".csv"));
    w.row(panel_columns());
    for (const auto* r : rows)
      w.row(format_date(r->trade_date), format_date(r->expiry), r->tau(), r->forward, r->X[1],
            r->X[2], r->X[3], r->X[4], r->X[5], r->X[6], r->v_eta, r->conv_var_rate);
  }
}

inline ContractPanel read_panel_file(const std::filesystem::path& file) {
  const auto t = read_delimited(file);
  std::vector<std::size_t> col;
  for (const auto& name : panel_columns()) col.push_back(t.column(name));
  ContractPanel out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    ContractPanelRow r;
    try {
      r.trade_date = parse_date(row.at(col[0]));
      r.expiry = parse_date(row.at(col[1]));
      r.forward = parse_double(row.at(col[3]));
      for (int p = 1; p <= 6; ++p) r.X[p] = parse_double(row.at(col[3 + p]));
      r.v_eta = parse_double(row.at(col[10]));
      r.conv_var_rate = parse_double(row.at(col[11]));
    } catch (const std::exception& e) {
      throw RowError(t.source, t.lines[i], e.what());
    }
    out.push_back(r);
  }
  return out;
}

inline ContractPanel read_panel_store(const std::filesystem::path& dir) {
  ContractPanel out;
  for (const auto& f : list_store(dir, "panel_")) {
    auto rows = read_panel_file(f);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  std::sort(out.begin(), out.end(), [](const ContractPanelRow& a, const ContractPanelRow& b) {
    return std::tie(a.trade_date, a.expiry) < std::tie(b.trade_date, b.expiry);
  });
  return out;
}

}  // namespace momentswap
