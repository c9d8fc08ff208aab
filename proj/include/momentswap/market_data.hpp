#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "momentswap/black.hpp"
#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"

namespace momentswap {

struct OptionQuote {
  Date trade_date;
  Date expiry;
  double strike = 0.0;
  OptionSide side = OptionSide::call;
  double mid = 0.0;
  double volume = 0.0;
  double implied_vol = 0.0;

  long days_to_expiry() const { return days_between(trade_date, expiry); }
};

// All quotes observed on one trade date, grouped by expiry.
struct QuoteSet {
  Date trade_date;
  std::map<Date, std::vector<OptionQuote>> by_expiry;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, qs] : by_expiry) n += qs.size();
    return n;
  }

  bool contains(const OptionQuote& q) const {
    auto it = by_expiry.find(q.expiry);
    if (it == by_expiry.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [&](const OptionQuote& o) {
      return o.strike == q.strike && o.side == q.side;
    });
  }
};

struct OtmPoint {
  double strike;
  double price;
};

// One maturity's out-of-the-money prices: puts below the forward, calls at
// and above it, strictly increasing strikes.
struct RawOtmCurve {
  Date trade_date;
  Date expiry;
  double forward = 0.0;
  std::vector<OtmPoint> points;

  double tau() const { return year_fraction(trade_date, expiry); }
};

// Column names of the input file. An empty discount_factor means mids are
// already forward (undiscounted) prices.
struct QuoteSchema {
  std::string trade_date = "trade_date";
  std::string expiry = "expiry";
  std::string strike = "strike";
  std::string side = "side";
  std::string mid = "mid";
  std::string volume = "volume";
  std::string implied_vol = "implied_vol";
  std::string discount_factor;
};

struct FilterConfig {
  long min_days = 7;
  long max_days = 365;
  double max_dropped_mid = 0.5;  // quotes with mid <= this are removed
  double min_implied_vol = 0.01;  // removed when iv <= this
  double max_implied_vol = 1.0;   // removed when iv >= this
  std::size_t min_strikes = 3;
};

namespace detail {

inline OptionSide parse_side(std::string_view s) {
  if (s == "P" || s == "p" || s == "put" || s == "PUT" || s == "Put") return OptionSide::put;
  if (s == "C" || s == "c" || s == "call" || s == "CALL" || s == "Call") return OptionSide::call;
  throw ValidationError("unknown option side '" + std::string(s) + "'");
}

inline void insert_quote(std::map<Date, QuoteSet>& sets, const OptionQuote& q,
                         const std::string& source, std::size_t line) {
  auto& set = sets[q.trade_date];
  set.trade_date = q.trade_date;
  if (set.contains(q))
    throw RowError(source, line, "duplicate quote (expiry " + format_date(q.expiry) + ", strike " +
                                     format_double(q.strike) + ", " +
                                     (q.side == OptionSide::put ? "put" : "call") + ")");
  set.by_expiry[q.expiry].push_back(q);
}

}  // namespace detail

// Reads one or more delimited files into one QuoteSet per trade date,
// chronologically ordered. Quotes for the same date coming from different
// files are merged; a repeated (expiry, strike, side) is an error.
inline std::vector<QuoteSet> load_quotes(std::span<const std::filesystem::path> sources,
                                         const QuoteSchema& schema = {}) {
  std::map<Date, QuoteSet> sets;
  for (const auto& path : sources) {
    const DelimitedTable t = read_delimited(path);
    if (t.rows.empty()) throw DatasetError(t.source + ": no data rows");
    const std::size_t c_trade = t.column(schema.trade_date), c_exp = t.column(schema.expiry),
                      c_k = t.column(schema.strike), c_side = t.column(schema.side),
                      c_mid = t.column(schema.mid), c_vol = t.column(schema.volume),
                      c_iv = t.column(schema.implied_vol);
    std::optional<std::size_t> c_df;
    if (!schema.discount_factor.empty()) c_df = t.column(schema.discount_factor);

    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      const std::size_t line = t.lines[r];
      if (row.size() != t.header.size())
        throw RowError(t.source, line,
                       "expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(row.size()));
      OptionQuote q;
      try {
        q.trade_date = parse_date(row[c_trade]);
        q.expiry = parse_date(row[c_exp]);
        q.strike = parse_double(row[c_k]);
        q.side = detail::parse_side(row[c_side]);
        q.mid = parse_double(row[c_mid]);
        q.volume = parse_double(row[c_vol]);
        q.implied_vol = parse_double(row[c_iv]);
        if (c_df) {
          const double df = parse_double(row[*c_df]);
          if (!(df > 0.0)) throw ValidationError("discount factor must be positive");
          q.mid /= df;
        }
      } catch (const ValidationError& e) {
        throw RowError(t.source, line, e.what());
      }
      if (!(q.strike > 0.0)) throw RowError(t.source, line, "strike must be positive");
      if (q.expiry <= q.trade_date) throw RowError(t.source, line, "expiry must follow trade date");
      if (!(q.mid >= 0.0)) throw RowError(t.source, line, "mid price must be non-negative");
      if (!(q.volume >= 0.0)) throw RowError(t.source, line, "volume must be non-negative");
      if (!(q.implied_vol >= 0.0))
        throw RowError(t.source, line, "implied volatility must be non-negative");
      detail::insert_quote(sets, q, t.source, line);
    }
  }
  std::vector<QuoteSet> out;
  out.reserve(sets.size());
  for (auto& [_, s] : sets) out.push_back(std::move(s));
  return out;
}

inline std::vector<QuoteSet> load_quotes(const std::filesystem::path& source,
                                         const QuoteSchema& schema = {}) {
  return load_quotes(std::span<const std::filesystem::path>(&source, 1), schema);
}

// Quote-level liquidity filters, then removal of expiries quoted at fewer
// than `min_strikes` distinct strikes. Idempotent.
inline QuoteSet filter_quotes(const QuoteSet& qs, const FilterConfig& cfg = {}) {
  QuoteSet out;
  out.trade_date = qs.trade_date;
  for (const auto& [expiry, quotes] : qs.by_expiry) {
    std::vector<OptionQuote> kept;
    std::set<double> strikes;
    for (const auto& q : quotes) {
      const long days = q.days_to_expiry();
      if (days < cfg.min_days || days > cfg.max_days) continue;
      if (q.volume <= 0.0) continue;
      if (q.mid <= cfg.max_dropped_mid) continue;
      if (q.implied_vol <= cfg.min_implied_vol || q.implied_vol >= cfg.max_implied_vol) continue;
      kept.push_back(q);
      strikes.insert(q.strike);
    }
    if (strikes.size() >= cfg.min_strikes) out.by_expiry.emplace(expiry, std::move(kept));
  }
  return out;
}

// Put-call parity on forward prices at the strike minimising |P - C|; ties
// go to the lower strike.
inline double extract_forward(std::span<const OptionQuote> quotes) {
  std::map<double, std::pair<const OptionQuote*, const OptionQuote*>> pairs;
  for (const auto& q : quotes) {
    auto& slot = pairs[q.strike];
    (q.side == OptionSide::put ? slot.first : slot.second) = &q;
  }
  double best_gap = std::numeric_limits<double>::infinity();
  double forward = 0.0;
  bool found = false;
  for (const auto& [strike, pc] : pairs) {
    if (!pc.first || !pc.second) continue;
    const double gap = std::abs(pc.first->mid - pc.second->mid);
    if (gap < best_gap) {
      best_gap = gap;
      forward = strike + (pc.second->mid - pc.first->mid);
      found = true;
    }
  }
  if (!found) throw ForwardUnavailable("no strike quoted on both the put and the call side");
  return forward;
}

inline RawOtmCurve to_otm_curve(std::span<const OptionQuote> quotes, double forward) {
  if (quotes.empty()) throw CurveUnavailable("no quotes");
  RawOtmCurve c;
  c.trade_date = quotes.front().trade_date;
  c.expiry = quotes.front().expiry;
  c.forward = forward;
  std::map<double, double> otm;
  for (const auto& q : quotes) {
    const bool is_otm = q.side == OptionSide::put ? q.strike < forward : q.strike >= forward;
    if (is_otm) otm[q.strike] = q.mid;
  }
  for (const auto& [k, p] : otm) c.points.push_back({k, p});
  if (c.points.size() < 3)
    throw CurveUnavailable("only " + std::to_string(c.points.size()) +
                           " out-of-the-money points for expiry " + format_date(c.expiry));
  return c;
}

struct CurveBuildResult {
  std::vector<RawOtmCurve> curves;
  std::vector<std::pair<Date, std::string>> skipped;  // expiry, reason
};

// Forward extraction and OTM selection for every expiry of one trade date.
// Expiries that fail either step are reported rather than thrown.
inline CurveBuildResult build_otm_curves(const QuoteSet& qs) {
  CurveBuildResult out;
  for (const auto& [expiry, quotes] : qs.by_expiry) {
    try {
      const double f = extract_forward(quotes);
      out.curves.push_back(to_otm_curve(quotes, f));
    } catch (const ForwardUnavailable& e) {
      out.skipped.emplace_back(expiry, e.what());
    } catch (const CurveUnavailable& e) {
      out.skipped.emplace_back(expiry, e.what());
    }
  }
  return out;
}

// Normalized quote store: one file per trade date named quotes_<date>.csv with
// columns trade_date,expiry,strike,side,mid,volume,implied_vol.
inline std::filesystem::path write_quote_file(const std::filesystem::path& dir, const QuoteSet& qs) {
  std::filesystem::create_directories(dir);
  const auto path = dir / ("quotes_" + format_date(qs.trade_date) + ".csv");
  CsvWriter w(path);
  w.row("trade_date", "expiry", "strike", "side", "mid", "volume", "implied_vol");
  for (const auto& [expiry, quotes] : qs.by_expiry) {
    auto sorted = quotes;
    std::sort(sorted.begin(), sorted.end(), [](const OptionQuote& a, const OptionQuote& b) {
      return std::tie(a.strike, a.side) < std::tie(b.strike, b.side);
    });
    for (const auto& q : sorted)
      w.row(format_date(q.trade_date), format_date(q.expiry), q.strike,
            std::string(q.side == OptionSide::put ? "P" : "C"), q.mid, q.volume, q.implied_vol);
  }
  return path;
}

inline std::vector<std::filesystem::path> list_store(const std::filesystem::path& dir,
                                                     const std::string& prefix) {
  if (!std::filesystem::is_directory(dir))
    throw DatasetError("store '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with(prefix) && name.ends_with(".csv"))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<QuoteSet> read_quote_store(const std::filesystem::path& dir) {
  std::vector<QuoteSet> out;
  for (const auto& f : list_store(dir, "quotes_")) {
    auto sets = load_quotes(f);
    for (auto& s : sets) out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const QuoteSet& a, const QuoteSet& b) { return a.trade_date < b.trade_date; });
  return out;
}

}  // namespace momentswap
