#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "momentswap/contracts.hpp"
#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/swaps.hpp"

namespace momentswap {

enum class Frequency { daily = 1, weekly = 5, monthly = 20 };

inline std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::daily: return "daily";
    case Frequency::weekly: return "weekly";
    case Frequency::monthly: return "monthly";
  }
  return "?";
}

inline Frequency parse_frequency(std::string_view s) {
  if (s == "daily" || s == "D" || s == "1") return Frequency::daily;
  if (s == "weekly" || s == "W" || s == "5") return Frequency::weekly;
  if (s == "monthly" || s == "M" || s == "20") return Frequency::monthly;
  throw ValidationError("unknown frequency '" + std::string(s) + "'");
}

// Every `step`-th trading date, starting from the first.
struct MonitoringPartition {
  Frequency frequency = Frequency::daily;
  std::vector<Date> dates;
};

inline MonitoringPartition make_partition(std::span<const Date> trading_dates, Frequency f) {
  MonitoringPartition p{f, {}};
  const std::size_t step = static_cast<std::size_t>(f);
  for (std::size_t i = 0; i < trading_dates.size(); i += step) {
    if (!p.dates.empty() && !(trading_dates[i] > p.dates.back()))
      throw ValidationError("trading dates must strictly increase");
    p.dates.push_back(trading_dates[i]);
  }
  return p;
}

enum class SeriesMethod { roll_at_maturity, level_interpolation, increment_interpolation };

inline SeriesMethod parse_series_method(std::string_view s) {
  if (s == "a") return SeriesMethod::roll_at_maturity;
  if (s == "b") return SeriesMethod::level_interpolation;
  if (s == "c") return SeriesMethod::increment_interpolation;
  throw ValidationError("unknown series method '" + std::string(s) + "' (expected a, b or c)");
}

// Increment of a contract with constant time to maturity tau, interpolated
// from the increments of the fixed-expiry contracts bracketing t + tau.
inline double constant_maturity_increment(double incr_lower, double incr_upper, Date T_l, Date T_u,
                                          Date t, long tau_days) {
  const Date target = add_days(t, tau_days);
  if (!(T_l < T_u)) throw BracketError("lower expiry must precede upper expiry");
  if (target < T_l || target > T_u)
    throw BracketError("t + tau = " + format_date(target) + " is outside [" + format_date(T_l) +
                       ", " + format_date(T_u) + "]");
  const double span = static_cast<double>(days_between(T_l, T_u));
  const double w_l = static_cast<double>(days_between(target, T_u)) / span;
  const double w_u = static_cast<double>(days_between(T_l, target)) / span;
  return w_l * incr_lower + w_u * incr_upper;
}

struct SeriesPoint {
  Date start;  // beginning of the monitoring interval
  Date date;   // end of the interval, the increment's time stamp
  double value = 0.0;
  double realised_part = 0.0;
  double implied_part = 0.0;
  // Legs of the position: fixed expiries, weights fixed at `start`, and the
  // per-expiry increments they combine.
  Date lower_expiry{};
  Date upper_expiry{};
  double lower_weight = 1.0;
  double upper_weight = 0.0;
  double lower_increment = 0.0;
  double upper_increment = 0.0;
  bool after_gap = false;
};

struct PnlSeries {
  std::string label;
  SwapKind kind = SwapKind::variance;
  long tau_days = 30;
  SeriesMethod method = SeriesMethod::increment_interpolation;
  MonitoringPartition partition;
  std::vector<SeriesPoint> points;
  std::vector<std::string> warnings;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(p.value);
    return v;
  }
};

// Running sum anchored at zero: element i is the sum of the first i + 1
// increments.
inline std::vector<double> cumulate(std::span<const double> increments) {
  std::vector<double> out;
  out.reserve(increments.size());
  double s = 0.0;
  for (double x : increments) out.push_back(s += x);
  return out;
}

inline std::vector<double> cumulate(const PnlSeries& s) {
  const auto v = s.values();
  return cumulate(std::span<const double>(v));
}

// Panel indexed by trade date, then expiry.
class PanelIndex {
 public:
  explicit PanelIndex(const ContractPanel& panel) {
    for (const auto& r : panel) rows_[r.trade_date][r.expiry] = &r;
    for (const auto& [d, _] : rows_) dates_.push_back(d);
  }

  const std::vector<Date>& dates() const { return dates_; }

  const ContractPanelRow* find(Date trade, Date expiry) const {
    auto it = rows_.find(trade);
    if (it == rows_.end()) return nullptr;
    auto jt = it->second.find(expiry);
    return jt == it->second.end() ? nullptr : jt->second;
  }

  std::vector<Date> expiries(Date trade) const {
    std::vector<Date> out;
    auto it = rows_.find(trade);
    if (it != rows_.end())
      for (const auto& [e, _] : it->second) out.push_back(e);
    return out;
  }

  // Expiries quoted on both dates and still alive after `t1`.
  std::vector<Date> common_expiries(Date t0, Date t1) const {
    std::vector<Date> out;
    for (Date e : expiries(t0))
      if (e > t1 && find(t1, e)) out.push_back(e);
    return out;
  }

  // Latest trade date in (t0, t1] on which `expiry` is quoted.
  std::optional<Date> last_quote(Date expiry, Date t0, Date t1) const {
    auto it = std::upper_bound(dates_.begin(), dates_.end(), t1);
    while (it != dates_.begin()) {
      --it;
      if (*it <= t0) break;
      if (find(*it, expiry)) return *it;
    }
    return std::nullopt;
  }

 private:
  std::map<Date, std::map<Date, const ContractPanelRow*>> rows_;
  std::vector<Date> dates_;
};

struct Bracket {
  Date lower;
  Date upper;
  double lower_weight = 1.0;
  double upper_weight = 0.0;
};

// Expiries around t + tau from `candidates`, with interpolation weights; an
// exact hit collapses to a single leg.
inline std::optional<Bracket> find_bracket(std::span<const Date> candidates, Date t, long tau_days) {
  const Date target = add_days(t, tau_days);
  std::optional<Date> lo, hi;
  for (Date e : candidates) {
    if (e <= target && (!lo || e > *lo)) lo = e;
    if (e >= target && (!hi || e < *hi)) hi = e;
  }
  if (!lo || !hi) return std::nullopt;
  if (*lo == *hi) return Bracket{*lo, *lo, 1.0, 0.0};
  const double span = static_cast<double>(days_between(*lo, *hi));
  return Bracket{*lo, *hi, static_cast<double>(days_between(target, *hi)) / span,
                 static_cast<double>(days_between(*lo, target)) / span};
}

namespace detail {

inline ContractState blend(const ContractState& a, const ContractState& b, double wa, double wb) {
  ContractState s;
  s.forward = wa * a.forward + wb * b.forward;
  for (int p = 0; p <= 6; ++p) s.X[p] = wa * a.X[p] + wb * b.X[p];
  s.v_eta = wa * a.v_eta + wb * b.v_eta;
  s.conv_var_rate = wa * a.conv_var_rate + wb * b.conv_var_rate;
  return s;
}

inline PnlSeries series_increment_interpolation(const PanelIndex& idx, SwapKind kind,
                                                const MonitoringPartition& part, long tau) {
  PnlSeries s;
  bool gap = false;
  for (std::size_t i = 1; i < part.dates.size(); ++i) {
    const Date t0 = part.dates[i - 1], t1 = part.dates[i];
    // A leg that stops trading inside the interval is closed at its last
    // quote; the upper leg must still be quoted at t1.
    std::map<Date, Date> mark;
    std::vector<Date> cands;
    for (Date e : idx.expiries(t0)) {
      const auto d = idx.last_quote(e, t0, t1);
      if (!d) continue;
      if (*d != t1 && e >= add_days(t0, tau)) continue;
      mark[e] = *d;
      cands.push_back(e);
    }
    const auto br = find_bracket(cands, t0, tau);
    if (!br) {
      s.warnings.push_back("no bracketing expiries for " + format_date(t0) + " -> " +
                           format_date(t1) + "; gap recorded");
      gap = true;
      continue;
    }
    auto leg = [&](Date e) {
      const auto* a = idx.find(t0, e);
      const auto* b = idx.find(mark.at(e), e);
      return interval_pnl(kind, *a, *a, *b);
    };
    const PnlIncrement lo = leg(br->lower);
    const PnlIncrement hi = br->upper == br->lower ? lo : leg(br->upper);
    SeriesPoint pt;
    pt.start = t0;
    pt.date = t1;
    pt.lower_expiry = br->lower;
    pt.upper_expiry = br->upper;
    pt.lower_weight = br->lower_weight;
    pt.upper_weight = br->upper_weight;
    pt.lower_increment = lo.value;
    pt.upper_increment = hi.value;
    pt.value = br->lower_weight * lo.value + br->upper_weight * hi.value;
    pt.realised_part = br->lower_weight * lo.realised_part + br->upper_weight * hi.realised_part;
    pt.implied_part = pt.value - pt.realised_part;
    pt.after_gap = gap;
    gap = false;
    s.points.push_back(pt);
  }
  return s;
}

inline PnlSeries series_roll_at_maturity(const PanelIndex& idx, SwapKind kind,
                                         const MonitoringPartition& part, long tau) {
  PnlSeries s;
  std::optional<Date> held;
  const ContractPanelRow* inception = nullptr;
  bool gap = false;
  for (std::size_t i = 1; i < part.dates.size(); ++i) {
    const Date t0 = part.dates[i - 1], t1 = part.dates[i];
    const auto cands = idx.common_expiries(t0, t1);
    if (!held || std::find(cands.begin(), cands.end(), *held) == cands.end()) {
      held.reset();
      const Date target = add_days(t0, tau);
      for (Date e : cands)
        if (!held || std::abs(days_between(target, e)) < std::abs(days_between(target, *held)))
          held = e;
      if (!held) {
        s.warnings.push_back("no expiry to hold over " + format_date(t0) + " -> " +
                             format_date(t1) + "; gap recorded");
        gap = true;
        continue;
      }
      inception = idx.find(t0, *held);
    }
    const auto* a = idx.find(t0, *held);
    const auto* b = idx.find(t1, *held);
    const PnlIncrement inc = interval_pnl(kind, *inception, *a, *b);
    SeriesPoint pt;
    pt.start = t0;
    pt.date = t1;
    pt.lower_expiry = pt.upper_expiry = *held;
    pt.lower_increment = pt.upper_increment = inc.value;
    pt.value = inc.value;
    pt.realised_part = inc.realised_part;
    pt.implied_part = inc.implied_part;
    pt.after_gap = gap;
    gap = false;
    s.points.push_back(pt);
  }
  return s;
}

// Synthetic constant-maturity state at every trading date, interpolated in
// levels between the expiries bracketing t + tau.
inline std::map<Date, ContractState> constant_maturity_levels(const PanelIndex& idx, long tau) {
  std::map<Date, ContractState> out;
  for (Date t : idx.dates()) {
    const auto exps = idx.expiries(t);
    std::vector<Date> alive;
    for (Date e : exps)
      if (e > t) alive.push_back(e);
    const auto br = find_bracket(alive, t, tau);
    if (!br) continue;
    out[t] = blend(*idx.find(t, br->lower), *idx.find(t, br->upper), br->lower_weight,
                   br->upper_weight);
  }
  return out;
}

// At each partition date t: realised characteristic of the constant-maturity
// state over the window (t, t + tau] minus the interpolated rate at t. The
// windows of neighbouring dates overlap.
inline PnlSeries series_level_interpolation(const PanelIndex& idx, SwapKind kind,
                                            const MonitoringPartition& part, long tau) {
  PnlSeries s;
  const auto levels = constant_maturity_levels(idx, tau);
  const auto& all = part.dates;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Date t = all[i];
    const Date end = add_days(t, tau);
    if (all.back() < end) break;
    auto it0 = levels.find(t);
    if (it0 == levels.end()) {
      s.warnings.push_back("no constant-maturity level at " + format_date(t));
      continue;
    }
    const ContractState& inception = it0->second;
    double realised = 0.0;
    bool complete = true;
    const ContractState* prev = &inception;
    for (std::size_t j = i + 1; j < all.size() && all[j] <= end; ++j) {
      auto it = levels.find(all[j]);
      if (it == levels.end()) {
        complete = false;
        break;
      }
      realised += interval_pnl(kind, inception, *prev, it->second).realised_part;
      prev = &it->second;
    }
    if (!complete) {
      s.warnings.push_back("window starting " + format_date(t) + " has missing levels");
      continue;
    }
    SeriesPoint pt;
    pt.start = t;
    pt.date = t;
    pt.realised_part = realised;
    pt.implied_part = -swap_rate(kind, inception, inception);
    pt.value = pt.realised_part + pt.implied_part;
    s.points.push_back(pt);
  }
  return s;
}

}  // namespace detail

// Constant-maturity P&L series for one swap family. Method (c), the default,
// holds the two expiries bracketing t + tau for one monitoring interval and
// interpolates their increments; every point is an executable position.
inline PnlSeries build_pnl_series(const ContractPanel& panel, SwapKind kind,
                                  const MonitoringPartition& partition, long tau_days = 30,
                                  SeriesMethod method = SeriesMethod::increment_interpolation) {
  if (tau_days <= 0) throw ValidationError("tau must be positive");
  const PanelIndex idx(panel);
  PnlSeries s;
  switch (method) {
    case SeriesMethod::increment_interpolation:
      s = detail::series_increment_interpolation(idx, kind, partition, tau_days);
      break;
    case SeriesMethod::roll_at_maturity:
      s = detail::series_roll_at_maturity(idx, kind, partition, tau_days);
      break;
    case SeriesMethod::level_interpolation:
      s = detail::series_level_interpolation(idx, kind, partition, tau_days);
      break;
  }
  s.label = std::string(to_string(kind));
  s.kind = kind;
  s.tau_days = tau_days;
  s.method = method;
  s.partition = partition;
  return s;
}

inline PnlSeries build_pnl_series(const ContractPanel& panel, SwapKind kind, Frequency freq,
                                  long tau_days = 30,
                                  SeriesMethod method = SeriesMethod::increment_interpolation) {
  const PanelIndex idx(panel);
  return build_pnl_series(panel, kind, make_partition(idx.dates(), freq), tau_days, method);
}

// Series CSV: date, increment, realised_part, implied_part, cumulative.
inline void write_series_csv(const std::filesystem::path& path, const PnlSeries& s) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  CsvWriter w(path);
  w.row("date", "increment", "realised_part", "implied_part", "cumulative");
  double cum = 0.0;
  for (const auto& p : s.points) {
    cum += p.value;
    w.row(format_date(p.date), p.value, p.realised_part, p.implied_part, cum);
  }
}

struct DatedValue {
  Date date;
  double value;
};

inline std::vector<DatedValue> read_series_csv(const std::filesystem::path& path) {
  const auto t = read_delimited(path);
  const std::size_t cd = t.column("date"), cv = t.column("increment");
  std::vector<DatedValue> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    try {
      out.push_back({parse_date(t.rows[i].at(cd)), parse_double(t.rows[i].at(cv))});
    } catch (const std::exception& e) {
      throw RowError(t.source, t.lines[i], e.what());
    }
  }
  return out;
}

}  // namespace momentswap
