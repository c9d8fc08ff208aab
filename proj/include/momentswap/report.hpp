#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/series.hpp"
#include "momentswap/stats.hpp"
#include "momentswap/svg.hpp"

namespace momentswap {

// Decimal places used by every report table.
inline constexpr int kReportPrecision = 6;

inline std::string series_file_name(SwapKind k, Frequency f) {
  return "series_" + std::string(to_string(k)) + "_" + std::string(to_string(f)) + ".csv";
}

struct StoredSeries {
  SwapKind kind;
  Frequency frequency;
  std::filesystem::path file;
  std::vector<DatedValue> data;

  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& d : data) v.push_back(d.value);
    return v;
  }
};

// Reads every series_<kind>_<freq>.csv in a series store, ordered by
// (kind, frequency). Files that do not follow the naming scheme are ignored.
inline std::vector<StoredSeries> read_series_store(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DatasetError("series store '" + dir.string() + "' does not exist");
  std::vector<StoredSeries> out;
  for (const auto& f : list_store(dir, "series_")) {
    const std::string stem = f.stem().string().substr(7);
    const auto us = stem.rfind('_');
    if (us == std::string::npos) continue;
    SwapKind k;
    Frequency fr;
    try {
      k = parse_swap_kind(stem.substr(0, us));
      fr = parse_frequency(stem.substr(us + 1));
    } catch (const ValidationError&) {
      continue;
    }
    out.push_back({k, fr, f, read_series_csv(f)});
  }
  std::sort(out.begin(), out.end(), [](const StoredSeries& a, const StoredSeries& b) {
    return std::pair(static_cast<int>(a.kind), static_cast<int>(a.frequency)) <
           std::pair(static_cast<int>(b.kind), static_cast<int>(b.frequency));
  });
  return out;
}

struct MomentTableRow {
  std::string series;
  std::string statistic;  // SD, Skew, ExKurt
  std::optional<double> daily, weekly_obs, weekly_iid, monthly_obs, monthly_iid;
};

// Observed moments per frequency next to the iid predictions scaled up from
// the daily series (weekly = 5, monthly = 20 base periods).
inline std::vector<MomentTableRow> moment_table(const std::vector<StoredSeries>& store) {
  std::map<SwapKind, std::map<Frequency, const StoredSeries*>> by_kind;
  for (const auto& s : store) by_kind[s.kind][s.frequency] = &s;
  std::vector<MomentTableRow> rows;
  for (const auto& [kind, freqs] : by_kind) {
    auto summary = [&](Frequency f) -> std::optional<MomentSummary> {
      auto it = freqs.find(f);
      if (it == freqs.end() || it->second->data.empty()) return std::nullopt;
      const auto v = it->second->values();
      return sample_moments(v);
    };
    const auto d = summary(Frequency::daily), w = summary(Frequency::weekly),
               m = summary(Frequency::monthly);
    std::optional<MomentSummary> wi, mi;
    if (d) {
      wi = iid_scale(*d, 5.0);
      mi = iid_scale(*d, 20.0);
    }
    using Field = std::optional<double> MomentSummary::*;
    for (auto [name, field] : {std::pair<const char*, Field>{"SD", &MomentSummary::stdev},
                               {"Skew", &MomentSummary::skewness},
                               {"ExKurt", &MomentSummary::excess_kurtosis}}) {
      auto get = [field](const std::optional<MomentSummary>& s) -> std::optional<double> {
        return s ? (*s).*field : std::nullopt;
      };
      rows.push_back({std::string(to_string(kind)), name, get(d), get(w), get(wi), get(m), get(mi)});
    }
  }
  return rows;
}

inline std::string cell(const std::optional<double>& v) {
  return v ? format_fixed(*v, kReportPrecision) : std::string("NA");
}

inline void write_moment_table(const std::filesystem::path& path,
                               const std::vector<MomentTableRow>& rows) {
  CsvWriter w(path);
  w.row("series", "statistic", "daily", "weekly_observed", "weekly_iid", "monthly_observed",
        "monthly_iid");
  for (const auto& r : rows)
    w.row(r.series, r.statistic, cell(r.daily), cell(r.weekly_obs), cell(r.weekly_iid),
          cell(r.monthly_obs), cell(r.monthly_iid));
}

// Pairwise correlations of all series at one frequency, aligned on common
// dates. Undefined pairs (zero variance) are written as NA.
inline void write_correlation_table(const std::filesystem::path& path,
                                    const std::vector<StoredSeries>& store, Frequency f) {
  std::vector<std::vector<DatedValue>> cols;
  std::vector<std::string> names;
  for (const auto& s : store)
    if (s.frequency == f) {
      cols.push_back(s.data);
      names.push_back(std::string(to_string(s.kind)));
    }
  CsvWriter w(path);
  std::vector<std::string> header{"series"};
  header.insert(header.end(), names.begin(), names.end());
  w.row(header);
  if (names.empty()) return;
  std::optional<CorrelationResult> r;
  try {
    r = correlation_matrix(cols, names);
  } catch (const InsufficientData&) {
  }
  for (std::size_t a = 0; a < names.size(); ++a) {
    std::vector<std::string> line{names[a]};
    for (std::size_t b = 0; b < names.size(); ++b) {
      const double v = r ? r->rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))
                         : std::numeric_limits<double>::quiet_NaN();
      line.push_back(std::isfinite(v) ? format_fixed(v, kReportPrecision) : "NA");
    }
    w.row(line);
  }
}

// Regression reports written by the regress stage: one row per coefficient.
inline const std::vector<std::string>& regression_columns() {
  static const std::vector<std::string> c{"series",   "model",     "term",  "estimate",
                                          "std_error", "t_stat",   "p_value", "adj_r2",
                                          "f_stat",   "f_p_value", "n_obs"};
  return c;
}

inline void write_regression_rows(CsvWriter& w, const std::string& series,
                                  const RegressionResult& r) {
  const std::string model = r.restricted ? "restricted" : "unrestricted";
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    w.row(series, model, r.names[i], format_fixed(r.coefficients(j), kReportPrecision),
          format_fixed(r.std_errors(j), kReportPrecision), format_fixed(r.t_stats(j), kReportPrecision),
          format_fixed(r.p_values(j), kReportPrecision), format_fixed(r.adjusted_r2, kReportPrecision),
          format_fixed(r.f_stat, kReportPrecision), format_fixed(r.f_p_value, kReportPrecision),
          std::to_string(r.n_obs));
  }
}

// Concatenates regression reports (files named regression_*.csv) into one
// table. A missing or empty directory yields the header only.
inline void write_regression_table(const std::filesystem::path& path,
                                   const std::optional<std::filesystem::path>& regress_dir) {
  CsvWriter w(path);
  w.row(regression_columns());
  if (!regress_dir || !std::filesystem::is_directory(*regress_dir)) return;
  for (const auto& f : list_store(*regress_dir, "regression_")) {
    const auto t = read_delimited(f);
    for (const auto& row : t.rows) w.row(row);
  }
}

inline double day_number(Date d) { return static_cast<double>(d.time_since_epoch().count()); }

inline std::string day_label(double v) {
  return format_date(Date{std::chrono::days{static_cast<long>(std::lround(v))}});
}

struct ReportFiles {
  std::vector<std::filesystem::path> files;
};

// Tables (csv) and figures (svg) from a series store and, optionally, a
// regression store. An empty series store still produces every file, with
// headers only and "no data" charts.
inline ReportFiles write_report(const std::filesystem::path& series_dir,
                                const std::optional<std::filesystem::path>& regress_dir,
                                const std::filesystem::path& out) {
  const auto store = read_series_store(series_dir);
  std::filesystem::create_directories(out);
  ReportFiles rf;
  auto add = [&](std::filesystem::path p) {
    rf.files.push_back(p);
    return p;
  };
  write_moment_table(add(out / "table_moments.csv"), moment_table(store));
  write_correlation_table(add(out / "table_correlation.csv"), store, Frequency::daily);
  write_regression_table(add(out / "table_regression.csv"), regress_dir);

  for (Frequency f : {Frequency::daily, Frequency::weekly, Frequency::monthly}) {
    svg::LineChart c;
    c.title = "Cumulative 30-day swap P&L, " + std::string(to_string(f)) + " monitoring";
    c.x_label = "date";
    c.y_label = "cumulative P&L";
    c.x_tick_format = day_label;
    for (const auto& s : store) {
      if (s.frequency != f) continue;
      svg::Line l{std::string(to_string(s.kind)), {}, {}};
      double cum = 0.0;
      for (const auto& d : s.data) {
        cum += d.value;
        l.x.push_back(day_number(d.date));
        l.y.push_back(cum);
      }
      c.lines.push_back(std::move(l));
    }
    svg::write(add(out / ("figure_cumulative_" + std::string(to_string(f)) + ".svg")), c);
  }

  svg::LineChart inc;
  inc.title = "Daily swap P&L increments";
  inc.x_label = "date";
  inc.y_label = "increment";
  inc.x_tick_format = day_label;
  for (const auto& s : store) {
    if (s.frequency != Frequency::daily) continue;
    svg::Line l{std::string(to_string(s.kind)), {}, {}};
    for (const auto& d : s.data) {
      l.x.push_back(day_number(d.date));
      l.y.push_back(d.value);
    }
    inc.lines.push_back(std::move(l));
  }
  svg::write(add(out / "figure_increments.svg"), inc);
  return rf;
}

}  // namespace momentswap
