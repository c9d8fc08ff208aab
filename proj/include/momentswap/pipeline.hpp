#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "momentswap/config.hpp"
#include "momentswap/contracts.hpp"
#include "momentswap/error.hpp"
#include "momentswap/market_data.hpp"
#include "momentswap/report.hpp"
#include "momentswap/series.hpp"
#include "momentswap/sim.hpp"
#include "momentswap/stats.hpp"
#include "momentswap/surface.hpp"
#include "momentswap/swaps.hpp"

namespace momentswap {

namespace fs = std::filesystem;

// A pipeline stage failed; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitStageFailure = 3;

enum class LogLevel { debug, info, warn };
using LogSink = std::function<void(LogLevel, const std::string&)>;

inline void log_to(const LogSink& sink, LogLevel l, const std::string& msg) {
  if (sink) sink(l, msg);
}

inline const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> s{"ingest", "surface", "contracts", "swaps", "series",
                                          "simulate", "regress", "report"};
  return s;
}

struct SimulationSettings {
  MarketModel model;
  Measure measure = Measure::Q;
  std::vector<std::string> checks{"ap", "qbias", "pbias", "variance"};
  std::vector<Characteristic> payoffs{Characteristic::variance, Characteristic::third,
                                      Characteristic::fourth,   Characteristic::rv,
                                      Characteristic::lv,       Characteristic::psi};
  std::vector<std::size_t> partitions{1, 5, 20, 30};
  McConfig mc;
};

inline const std::vector<std::string>& simulation_checks() {
  static const std::vector<std::string> c{"ap", "qbias", "pbias", "variance"};
  return c;
}

inline SimulationSettings read_simulation_settings(const Config& c, const std::string& section) {
  SimulationSettings s;
  auto& m = s.model;
  m.kind = parse_model_kind(c.get(section, "model", std::string("gbm")));
  m.sigma = c.get(section, "sigma", m.sigma);
  m.p_drift = c.get(section, "p_drift", m.p_drift);
  m.jump_intensity = c.get(section, "jump_intensity", m.jump_intensity);
  m.jump_mean = c.get(section, "jump_mean", m.jump_mean);
  m.jump_vol = c.get(section, "jump_vol", m.jump_vol);
  m.initial_forward = c.get(section, "initial_forward", m.initial_forward);
  s.measure = parse_measure(c.get(section, "measure", std::string("Q")));
  s.checks = c.get_list(section, "checks", s.checks);
  for (const auto& ch : s.checks)
    if (std::find(simulation_checks().begin(), simulation_checks().end(), ch) ==
        simulation_checks().end())
      throw ValidationError("unknown simulation check '" + ch + "'");
  if (c.has(section, "payoffs")) {
    s.payoffs.clear();
    for (const auto& p : c.get_list(section, "payoffs", {})) s.payoffs.push_back(parse_characteristic(p));
  }
  if (c.has(section, "partitions")) {
    s.partitions.clear();
    for (const auto& p : c.get_list(section, "partitions", {})) {
      const double v = parse_double(p);
      if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError("partition steps must be positive integers");
      s.partitions.push_back(static_cast<std::size_t>(v));
    }
  }
  const long paths = c.get(section, "paths", static_cast<long>(s.mc.n_paths));
  if (paths < 2) throw ValidationError("simulation needs at least two paths");
  s.mc.n_paths = static_cast<std::size_t>(paths);
  s.mc.horizon_days = c.get(section, "horizon_days", s.mc.horizon_days);
  if (!(s.mc.horizon_days > 0.0)) throw ValidationError("horizon_days must be positive");
  m.validate();
  return s;
}

// Everything a full run needs. Loaded from an INI file with sections
// [paths], [ingest], [filter], [surface], [contracts], [series], [simulate],
// [regress], [run]; see the README for the keys.
struct PipelineConfig {
  std::vector<fs::path> quotes;          // raw quote files or directories
  std::optional<fs::path> factors;
  fs::path out = "out";
  QuoteSchema schema;
  FilterConfig filter;
  GridConfig grid;
  Quadrature quadrature = Quadrature::left_riemann;
  std::vector<SwapKind> specs{SwapKind::variance, SwapKind::third, SwapKind::fourth,
                              SwapKind::skew,     SwapKind::kurtosis, SwapKind::rv,
                              SwapKind::lv,       SwapKind::psi,   SwapKind::logreturn};
  std::vector<long> taus{30};
  std::vector<Frequency> frequencies{Frequency::daily, Frequency::weekly, Frequency::monthly};
  SeriesMethod method = SeriesMethod::increment_interpolation;
  SimulationSettings simulation;
  std::optional<Date> period_from, period_to;
  CovarianceType covariance = CovarianceType::classical;
  std::vector<std::string> stages = all_stages();
  std::uint64_t seed = 1;
  unsigned threads = 1;

  fs::path store(const std::string& stage) const {
    static const std::map<std::string, std::string> dirs{
        {"ingest", "quotes"}, {"surface", "grids"},  {"contracts", "panel"},
        {"swaps", "pnl"},     {"series", "series"},  {"simulate", "simulation"},
        {"regress", "regression"}, {"report", "report"}};
    return out / dirs.at(stage);
  }

  fs::path series_store(long tau) const { return store("series") / ("tau" + std::to_string(tau)); }

  bool runs(const std::string& stage) const {
    return std::find(stages.begin(), stages.end(), stage) != stages.end();
  }

  void set_seed(std::uint64_t s) {
    seed = s;
    simulation.model.seed = s;
  }

  void set_threads(unsigned t) {
    threads = std::max(1u, t);
    simulation.mc.threads = threads;
  }

  static PipelineConfig from(const Config& c, const fs::path& base = {}) {
    PipelineConfig p;
    auto resolve = [&](const std::string& s) {
      fs::path q(s);
      return q.is_relative() && !base.empty() ? base / q : q;
    };
    for (const auto& q : c.get_list("paths", "quotes", {})) p.quotes.push_back(resolve(q));
    if (c.has("paths", "factors")) p.factors = resolve(c.get("paths", "factors", std::string{}));
    p.out = resolve(c.get("paths", "out", std::string("out")));

    auto& s = p.schema;
    s.trade_date = c.get("ingest", "trade_date_column", s.trade_date);
    s.expiry = c.get("ingest", "expiry_column", s.expiry);
    s.strike = c.get("ingest", "strike_column", s.strike);
    s.side = c.get("ingest", "side_column", s.side);
    s.mid = c.get("ingest", "mid_column", s.mid);
    s.volume = c.get("ingest", "volume_column", s.volume);
    s.implied_vol = c.get("ingest", "implied_vol_column", s.implied_vol);
    s.discount_factor = c.get("ingest", "discount_factor_column", s.discount_factor);

    auto& f = p.filter;
    f.min_days = c.get("filter", "min_days", f.min_days);
    f.max_days = c.get("filter", "max_days", f.max_days);
    f.max_dropped_mid = c.get("filter", "min_mid", f.max_dropped_mid);
    f.min_implied_vol = c.get("filter", "min_implied_vol", f.min_implied_vol);
    f.max_implied_vol = c.get("filter", "max_implied_vol", f.max_implied_vol);
    f.min_strikes = static_cast<std::size_t>(c.get("filter", "min_strikes", static_cast<long>(f.min_strikes)));

    auto& g = p.grid;
    g.points = static_cast<std::size_t>(c.get("surface", "points", static_cast<long>(g.points)));
    g.sigma_range = c.get("surface", "sigma_range", g.sigma_range);
    g.multiplicative = c.get("surface", "range", std::string("multiplicative")) != "arithmetic";
    g.target_rmse = c.get("surface", "target_rmse", g.target_rmse);
    if (c.has("surface", "smoothing")) g.smoothing = c.get("surface", "smoothing", 0.0);
    g.calendar_repair = c.get_flag("surface", "calendar_repair", g.calendar_repair);

    const auto rule = c.get("contracts", "quadrature", std::string("left_riemann"));
    if (rule == "trapezoid")
      p.quadrature = Quadrature::trapezoid;
    else if (rule != "left_riemann")
      throw ValidationError("quadrature must be left_riemann or trapezoid");

    if (c.has("series", "specs")) {
      p.specs.clear();
      for (const auto& k : c.get_list("series", "specs", {})) p.specs.push_back(parse_swap_kind(k));
    }
    if (c.has("series", "tau")) {
      p.taus.clear();
      for (const auto& t : c.get_list("series", "tau", {})) {
        const double v = parse_double(t);
        if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError("tau must be a positive number of days");
        p.taus.push_back(static_cast<long>(v));
      }
    }
    if (c.has("series", "frequencies")) {
      p.frequencies.clear();
      for (const auto& fr : c.get_list("series", "frequencies", {})) p.frequencies.push_back(parse_frequency(fr));
    }
    p.method = parse_series_method(c.get("series", "method", std::string("c")));

    p.simulation = read_simulation_settings(c, "simulate");

    if (c.has("regress", "period")) {
      const auto [from, to] = parse_period(c.get("regress", "period", std::string{}));
      p.period_from = from;
      p.period_to = to;
    }
    const auto cov = c.get("regress", "covariance", std::string("classical"));
    if (cov == "hc1")
      p.covariance = CovarianceType::hc1;
    else if (cov != "classical")
      throw ValidationError("covariance must be classical or hc1");

    p.stages = c.get_list("run", "stages", all_stages());
    p.set_seed(static_cast<std::uint64_t>(c.get("run", "seed", 1L)));
    p.set_threads(static_cast<unsigned>(c.get("run", "threads", 1L)));
    return p;
  }

  // "from:to" with either side optional.
  static std::pair<std::optional<Date>, std::optional<Date>> parse_period(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ValidationError("period must look like from:to");
    std::optional<Date> a, b;
    if (colon > 0) a = parse_date(s.substr(0, colon));
    if (colon + 1 < s.size()) b = parse_date(s.substr(colon + 1));
    if (a && b && *b < *a) throw ValidationError("period ends before it starts");
    return {a, b};
  }

  // Checks stage names, parameter ranges and that every input a requested
  // stage reads exists, either on disk or as the output of an earlier
  // requested stage.
  void validate() const {
    for (const auto& s : stages)
      if (std::find(all_stages().begin(), all_stages().end(), s) == all_stages().end())
        throw ValidationError("unknown stage '" + s + "'");
    if (grid.points < 3) throw ValidationError("grid needs at least three points");
    if (!(grid.sigma_range > 0.0)) throw ValidationError("sigma_range must be positive");
    if (!(grid.target_rmse > 0.0)) throw ValidationError("target_rmse must be positive");
    if (filter.min_days > filter.max_days) throw ValidationError("filter min_days exceeds max_days");
    if (taus.empty()) throw ValidationError("at least one tau is required");
    simulation.model.validate();

    auto needs = [&](const std::string& stage, const std::string& producer) {
      if (runs(stage) && !runs(producer) && !fs::exists(store(producer)))
        throw ValidationError("stage '" + stage + "' needs the " + producer + " store at '" +
                              store(producer).string() + "'");
    };
    if (runs("ingest")) {
      if (quotes.empty()) throw ValidationError("ingest needs [paths] quotes");
      for (const auto& q : quotes)
        if (!fs::exists(q)) throw ValidationError("quote input '" + q.string() + "' does not exist");
    }
    needs("surface", "ingest");
    needs("contracts", "surface");
    needs("swaps", "contracts");
    needs("series", "contracts");
    if (runs("regress")) {
      if (!factors) throw ValidationError("regress needs [paths] factors");
      if (!fs::exists(*factors))
        throw ValidationError("factor file '" + factors->string() + "' does not exist");
      needs("regress", "series");
    }
    needs("report", "series");
  }
};

// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read '" + p.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream o;
  for (unsigned i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return o.str();
}

// Runs `body` against a scratch directory and moves it into place only when
// the body succeeds, so a store is either complete or absent.
inline void publish_store(const std::string& stage, const fs::path& final_dir,
                          const std::function<void(const fs::path&)>& body) {
  const fs::path tmp = final_dir.parent_path() / ("." + final_dir.filename().string() + ".partial");
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    body(tmp);
  } catch (const StageError&) {
    fs::remove_all(tmp);
    throw;
  } catch (const std::exception& e) {
    fs::remove_all(tmp);
    throw StageError(stage, e.what());
  }
  fs::remove_all(final_dir);
  fs::rename(tmp, final_dir);
}

// ---- stages ---------------------------------------------------------------

inline std::size_t run_ingest(std::span<const fs::path> inputs, const QuoteSchema& schema,
                              const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".csv" || ext == ".tsv" || ext == ".txt"))
          found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) throw DatasetError("no quote files found");
  const auto sets = load_quotes(files, schema);
  for (const auto& qs : sets) write_quote_file(out, qs);
  return sets.size();
}

struct SurfaceStageSummary {
  std::size_t dates = 0;
  std::size_t grids = 0;
  std::vector<std::string> warnings;
};

inline SurfaceStageSummary run_surface(const fs::path& quote_store, const FilterConfig& filter,
                                       const GridConfig& cfg, const fs::path& out,
                                       const LogSink& log = {}) {
  SurfaceStageSummary sum;
  std::vector<StrikeGrid> all;
  fs::create_directories(out);
  CsvWriter diag(out / "arbitrage.csv");
  diag.row("trade_date", "expiries", "min_butterfly", "min_calendar", "violations");
  for (const auto& raw : read_quote_store(quote_store)) {
    const auto qs = filter_quotes(raw, filter);
    auto built = build_otm_curves(qs);
    for (auto& [expiry, why] : built.skipped)
      sum.warnings.push_back(format_date(qs.trade_date) + " expiry " + format_date(expiry) + ": " + why);
    if (built.curves.empty()) {
      sum.warnings.push_back(format_date(qs.trade_date) + ": no usable maturities");
      continue;
    }
    auto fit = fit_surface(built.curves, cfg);
    for (auto& w : fit.warnings) sum.warnings.push_back(format_date(qs.trade_date) + ": " + w);
    const auto rep = check_static_arbitrage(fit.grids);
    diag.row(format_date(qs.trade_date), std::to_string(fit.grids.size()), rep.min_butterfly,
             rep.calendar_checked ? format_double(rep.min_calendar) : std::string("NA"),
             std::to_string(rep.violation_count()));
    if (!rep.clean())
      sum.warnings.push_back(format_date(qs.trade_date) + ": " + std::to_string(rep.violation_count()) +
                             " static arbitrage violations");
    log_to(log, LogLevel::debug, "surface " + format_date(qs.trade_date) + ": " +
                                     std::to_string(fit.grids.size()) + " maturities");
    ++sum.dates;
    sum.grids += fit.grids.size();
    all.insert(all.end(), std::make_move_iterator(fit.grids.begin()),
               std::make_move_iterator(fit.grids.end()));
  }
  write_grid_store(out, all);
  std::ofstream w(out / "warnings.txt");
  for (const auto& s : sum.warnings) w << s << '\n';
  return sum;
}

inline std::size_t run_contracts(const fs::path& grid_store, Quadrature rule, const fs::path& out) {
  ContractPanel panel;
  for (const auto& g : read_grid_store(grid_store)) panel.push_back(price_contracts(g, rule));
  write_panel_store(out, panel);
  return panel.size();
}

// Fixed-expiry swap P&L: for every expiry, a position opened on the first
// date it is quoted and marked daily to the last.
inline void write_fixed_expiry_pnl(const ContractPanel& panel, SwapKind kind, const fs::path& file) {
  std::map<Date, std::vector<const ContractPanelRow*>> by_expiry;
  for (const auto& r : panel) by_expiry[r.expiry].push_back(&r);
  CsvWriter w(file);
  w.row("trade_date", "expiry", "inception", "swap_rate", "increment", "realised_part",
        "implied_part", "cumulative");
  for (auto& [expiry, rows] : by_expiry) {
    std::sort(rows.begin(), rows.end(),
              [](auto* a, auto* b) { return a->trade_date < b->trade_date; });
    const auto& inc = *rows.front();
    double cum = 0.0;
    w.row(format_date(inc.trade_date), format_date(expiry), format_date(inc.trade_date),
          swap_rate(kind, inc, inc), 0.0, 0.0, 0.0, 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto p = interval_pnl(kind, inc, *rows[i - 1], *rows[i]);
      cum += p.value;
      w.row(format_date(rows[i]->trade_date), format_date(expiry), format_date(inc.trade_date),
            swap_rate(kind, inc, *rows[i]), p.value, p.realised_part, p.implied_part, cum);
    }
  }
}

inline void run_swaps(const fs::path& panel_store, std::span<const SwapKind> kinds, const fs::path& out) {
  const auto panel = read_panel_store(panel_store);
  fs::create_directories(out);
  for (SwapKind k : kinds)
    write_fixed_expiry_pnl(panel, k, out / ("pnl_" + std::string(to_string(k)) + ".csv"));
}

inline std::vector<std::string> run_series(const ContractPanel& panel, std::span<const SwapKind> kinds,
                                           std::span<const Frequency> freqs, long tau,
                                           SeriesMethod method, const fs::path& out) {
  std::vector<std::string> warnings;
  fs::create_directories(out);
  for (SwapKind k : kinds)
    for (Frequency f : freqs) {
      const auto s = build_pnl_series(panel, k, f, tau, method);
      for (const auto& w : s.warnings)
        warnings.push_back(std::string(to_string(k)) + "/" + std::string(to_string(f)) + ": " + w);
      write_series_csv(out / series_file_name(k, f), s);
    }
  return warnings;
}

// One row per (check, payoff, partition): check, payoff, measure, steps,
// estimate, std_error, z, n_paths.
inline void run_simulation(const SimulationSettings& s, const fs::path& file, const LogSink& log = {}) {
  CsvWriter w(file);
  w.row("check", "payoff", "measure", "steps", "estimate", "std_error", "z", "n_paths");
  auto emit = [&](const std::string& check, Characteristic c, Measure m, std::size_t steps,
                  const Estimate& e, std::size_t n) {
    w.row(check, std::string(to_string(c)), std::string(m == Measure::P ? "P" : "Q"),
          std::to_string(steps), e.value, e.se, e.z(), std::to_string(n));
  };
  for (Characteristic c : s.payoffs)
    for (std::size_t steps : s.partitions) {
      log_to(log, LogLevel::debug, "simulate " + std::string(to_string(c)) + " steps " + std::to_string(steps));
      const bool wants_p = std::find(s.checks.begin(), s.checks.end(), "pbias") != s.checks.end();
      const bool wants_other = std::any_of(s.checks.begin(), s.checks.end(),
                                           [](const std::string& x) { return x != "pbias"; });
      std::optional<PathStatistics> main, under_p;
      if (wants_other) main = simulate_characteristic(c, s.model, s.measure, steps, s.mc);
      if (wants_p)
        under_p = s.measure == Measure::P && main ? main
                                                 : simulate_characteristic(c, s.model, Measure::P, steps, s.mc);
      for (const auto& check : s.checks) {
        if (check == "ap") {
          emit("ap", c, s.measure, steps, {main->ap_gap.mean(), main->ap_gap.standard_error()},
               main->ap_gap.count());
        } else if (check == "qbias") {
          emit("qbias", c, s.measure, steps, {main->pnl.mean(), main->pnl.standard_error()},
               main->pnl.count());
        } else if (check == "pbias") {
          emit("pbias", c, Measure::P, steps, {under_p->ap_gap.mean(), under_p->ap_gap.standard_error()},
               under_p->ap_gap.count());
        } else if (check == "variance") {
          emit("variance", c, s.measure, steps,
               {main->monitored.variance(), main->monitored.variance_standard_error()},
               main->monitored.count());
          emit("variance_one_shot", c, s.measure, steps,
               {main->one_shot.variance(), main->one_shot.variance_standard_error()},
               main->one_shot.count());
        }
      }
    }
}

struct RegressionRun {
  RegressionResult unrestricted;
  RegressionResult restricted;
};

inline RegressionRun regress_series(std::span<const DatedValue> series, std::span<const FactorRow> factors,
                                    std::optional<Date> from, std::optional<Date> to,
                                    CovarianceType cov) {
  const auto data = align_with_factors(series, factors, from, to);
  RegressionOptions opt;
  opt.covariance = cov;
  RegressionRun r;
  r.unrestricted = ols_factor_regression(data.y, data.factors, opt);
  opt.restricted = true;
  r.restricted = ols_factor_regression(data.y, data.factors, opt);
  return r;
}

inline void run_regress(const std::vector<StoredSeries>& store, const fs::path& factor_file,
                        std::optional<Date> from, std::optional<Date> to, CovarianceType cov,
                        const fs::path& out) {
  const auto factors = load_factor_file(factor_file);
  fs::create_directories(out);
  for (const auto& s : store) {
    if (s.frequency != Frequency::daily) continue;
    const std::string name = std::string(to_string(s.kind));
    const auto r = regress_series(s.data, factors, from, to, cov);
    CsvWriter w(out / ("regression_" + name + ".csv"));
    w.row(regression_columns());
    write_regression_rows(w, name, r.unrestricted);
    write_regression_rows(w, name, r.restricted);
  }
}

// ---- manifest -------------------------------------------------------------

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

inline std::vector<ManifestEntry> collect_manifest(const fs::path& out) {
  std::vector<ManifestEntry> entries;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out).generic_string();
    if (rel == "manifest.json" || rel.starts_with(".")) continue;
    entries.push_back({rel, sha256_file(e.path()), e.file_size()});
  }
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  return entries;
}

inline nlohmann::ordered_json manifest_json(const std::vector<std::string>& stages, std::uint64_t seed,
                                            const std::vector<ManifestEntry>& entries) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["stages"] = stages;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& e : entries)
    j["files"].push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  return j;
}

struct PipelineResult {
  std::vector<std::string> stages_run;
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> warnings;
};

// Runs the requested stages in dependency order. Each stage reads its
// predecessors' stores and publishes its own atomically; the manifest lists
// every file under the output directory with its SHA-256.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const LogSink& log = {}) {
  cfg.validate();
  fs::create_directories(cfg.out);
  PipelineResult res;
  auto stage = [&](const std::string& name, const std::function<void(const fs::path&)>& body) {
    if (!cfg.runs(name)) return;
    log_to(log, LogLevel::info, "stage " + name);
    publish_store(name, cfg.store(name), body);
    res.stages_run.push_back(name);
  };
  auto warn = [&](const std::string& w) {
    log_to(log, LogLevel::warn, w);
    res.warnings.push_back(w);
  };

  stage("ingest", [&](const fs::path& tmp) {
    const auto n = run_ingest(cfg.quotes, cfg.schema, tmp);
    log_to(log, LogLevel::info, "ingested " + std::to_string(n) + " trade dates");
  });
  stage("surface", [&](const fs::path& tmp) {
    const auto s = run_surface(cfg.store("ingest"), cfg.filter, cfg.grid, tmp, log);
    for (const auto& w : s.warnings) log_to(log, LogLevel::debug, "surface: " + w);
    if (!s.warnings.empty())
      warn("surface: " + std::to_string(s.warnings.size()) + " warnings, see " +
           (cfg.store("surface") / "warnings.txt").string());
    if (s.grids == 0) throw DatasetError("no maturity could be fitted");
    log_to(log, LogLevel::info, "fitted " + std::to_string(s.grids) + " grids on " +
                                    std::to_string(s.dates) + " dates");
  });
  stage("contracts", [&](const fs::path& tmp) {
    const auto n = run_contracts(cfg.store("surface"), cfg.quadrature, tmp);
    log_to(log, LogLevel::info, "priced " + std::to_string(n) + " panel rows");
  });
  stage("swaps", [&](const fs::path& tmp) { run_swaps(cfg.store("contracts"), cfg.specs, tmp); });
  stage("series", [&](const fs::path& tmp) {
    const auto panel = read_panel_store(cfg.store("contracts"));
    for (long tau : cfg.taus) {
      const auto ws = run_series(panel, cfg.specs, cfg.frequencies, tau, cfg.method,
                                 tmp / ("tau" + std::to_string(tau)));
      for (const auto& w : ws) log_to(log, LogLevel::debug, "series tau" + std::to_string(tau) + " " + w);
      if (!ws.empty())
        warn("series tau" + std::to_string(tau) + ": " + std::to_string(ws.size()) +
             " warnings (gaps without bracketing expiries); rerun with --log-level debug for details");
    }
  });
  stage("simulate", [&](const fs::path& tmp) { run_simulation(cfg.simulation, tmp / "report.csv", log); });
  stage("regress", [&](const fs::path& tmp) {
    for (long tau : cfg.taus)
      run_regress(read_series_store(cfg.series_store(tau)), *cfg.factors, cfg.period_from, cfg.period_to,
                  cfg.covariance, tmp / ("tau" + std::to_string(tau)));
  });
  stage("report", [&](const fs::path& tmp) {
    for (long tau : cfg.taus) {
      const auto t = "tau" + std::to_string(tau);
      const fs::path reg = cfg.store("regress") / t;
      write_report(cfg.series_store(tau), fs::exists(reg) ? std::optional(reg) : std::nullopt, tmp / t);
    }
  });

  res.manifest = collect_manifest(cfg.out);
  std::ofstream m(cfg.out / "manifest.json", std::ios::binary);
  if (!m) throw StageError("manifest", "cannot write manifest");
  m << manifest_json(res.stages_run, cfg.seed, res.manifest).dump(2) << '\n';
  return res;
}

// ---- synthetic inputs -----------------------------------------------------

// Daily factor file in the research-file layout (percent returns), with the
// market factor taken from the given log returns and the other three drawn
// as independent noise.
inline void write_synthetic_factor_file(const fs::path& file, std::span<const Date> dates,
                                        std::span<const double> market_log_returns, std::uint64_t seed) {
  if (dates.size() != market_log_returns.size()) throw DimensionError("dates and returns differ");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream o(file, std::ios::binary);
  if (!o) throw Error("cannot write '" + file.string() + "'");
  o << "Synthetic daily factors\n\n,Mkt-RF,SMB,HML,Mom,RF\n";
  for (std::size_t i = 0; i < dates.size(); ++i) {
    CounterRng rng(seed ^ 0x9e3779b97f4a7c15ull, 0xfac7, static_cast<std::uint32_t>(i));
    const double smb = 0.5 * rng.normal(), hml = 0.5 * rng.normal(), mom = 0.7 * rng.normal();
    const auto d = format_date(dates[i]);
    o << d.substr(0, 4) << d.substr(5, 2) << d.substr(8, 2) << ',' << format_fixed(100.0 * market_log_returns[i], 4)
      << ',' << format_fixed(smb, 4) << ',' << format_fixed(hml, 4) << ',' << format_fixed(mom, 4)
      << ",0.0000\n";
  }
}

// Option quotes (one raw file per trade date) plus a matching factor file
// for a simulated market.
inline std::size_t write_synthetic_inputs(const MarketModel& m, const SyntheticQuoteConfig& cfg,
                                          const fs::path& dir) {
  const auto sets = simulate_option_quotes(m, cfg);
  fs::create_directories(dir / "quotes");
  std::vector<Date> dates;
  std::vector<double> rets;
  double prev = NAN;
  for (const auto& qs : sets) {
    write_quote_file(dir / "quotes", qs);
    const double F = extract_forward(qs.by_expiry.begin()->second);
    dates.push_back(qs.trade_date);
    rets.push_back(std::isnan(prev) ? 0.0 : std::log(F / prev));
    prev = F;
  }
  write_synthetic_factor_file(dir / "factors.csv", dates, rets, m.seed);
  return sets.size();
}

}  // namespace momentswap
