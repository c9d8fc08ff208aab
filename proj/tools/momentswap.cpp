#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>

#include "momentswap/momentswap.hpp"

namespace ms = momentswap;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string log_level = "info";
};

ms::Config load_config(const Globals& g) {
  if (g.config_path.empty()) return {};
  if (!fs::exists(g.config_path))
    throw ms::ValidationError("config file '" + g.config_path + "' does not exist");
  return ms::Config::load(g.config_path);
}

ms::PipelineConfig pipeline_config(const Globals& g) {
  const auto cfg = load_config(g);
  const fs::path base = g.config_path.empty() ? fs::path{} : fs::path(g.config_path).parent_path();
  auto p = ms::PipelineConfig::from(cfg, base);
  if (g.seed) p.set_seed(*g.seed);
  if (g.threads) p.set_threads(*g.threads);
  return p;
}

ms::LogSink spdlog_sink() {
  return [](ms::LogLevel l, const std::string& msg) {
    switch (l) {
      case ms::LogLevel::debug: spdlog::debug(msg); break;
      case ms::LogLevel::info: spdlog::info(msg); break;
      case ms::LogLevel::warn: spdlog::warn(msg); break;
    }
  };
}

std::vector<ms::SwapKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ms::SwapKind> out;
  for (const auto& n : names) out.push_back(ms::parse_swap_kind(n));
  return out;
}

// Write into a scratch directory, then move into place.
void publish(const std::string& stage, const fs::path& out, const std::function<void(const fs::path&)>& body) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  ms::publish_store(stage, fs::absolute(out), body);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretisation-invariant moment swaps: option surfaces, swap rates, "
               "constant-maturity P&L series, Monte Carlo checks and factor regressions."};
  app.require_subcommand(1);
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Show every subcommand and flag");
  Globals g;
  app.add_option("--config", g.config_path, "INI configuration file");
  app.add_option("--seed", g.seed, "Top-level random seed (overrides [run] seed)");
  app.add_option("--threads", g.threads, "Worker threads for simulation")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Normalise raw option quotes into a quote store");
  std::vector<std::string> ingest_inputs;
  std::string ingest_out;
  ingest->add_option("--input", ingest_inputs, "Quote file(s) or directories")->required();
  ingest->add_option("--out", ingest_out, "Quote store directory")->required();

  // surface
  auto* surface = app.add_subcommand("surface", "Fit arbitrage-free strike grids per trade date and expiry");
  std::string surface_quotes, surface_out;
  std::optional<std::size_t> grid_points;
  std::optional<double> sigma_range, target_rmse;
  surface->add_option("--quotes", surface_quotes, "Quote store directory")->required();
  surface->add_option("--out", surface_out, "Grid store directory")->required();
  surface->add_option("--points", grid_points, "Strikes per grid (default 2000)");
  surface->add_option("--sigma-range", sigma_range, "Grid half-width in implied standard deviations (default 6)");
  surface->add_option("--target-rmse", target_rmse, "Largest accepted fit RMSE in index points (default 0.25)");

  // contracts
  auto* contracts = app.add_subcommand("contracts", "Price power log contracts, entropy and conventional variance");
  std::string contracts_grids, contracts_out, quadrature;
  contracts->add_option("--grids", contracts_grids, "Grid store directory")->required();
  contracts->add_option("--out", contracts_out, "Panel store directory")->required();
  contracts->add_option("--quadrature", quadrature, "left_riemann (default) or trapezoid")
      ->check(CLI::IsMember({"left_riemann", "trapezoid"}));

  // swaps
  static const std::vector<std::string> swap_specs{"variance", "third", "fourth", "skew", "kurtosis",
                                                   "lv", "rv", "psi", "erp", "logreturn"};
  auto* swaps = app.add_subcommand("swaps", "Fixed-expiry swap rates and daily P&L for one swap family");
  std::string swaps_panel, swaps_out;
  std::vector<std::string> swaps_spec;
  swaps->add_option("--panel", swaps_panel, "Panel store directory")->required();
  swaps->add_option("--spec", swaps_spec, "Swap family (repeatable)")->required()->check(CLI::IsMember(swap_specs));
  swaps->add_option("--out", swaps_out, "P&L store directory")->required();

  // series
  auto* series = app.add_subcommand("series", "Constant-maturity P&L series");
  std::string series_panel, series_spec, series_freq = "daily", series_method = "c", series_out;
  long series_tau = 30;
  series->add_option("--panel", series_panel, "Panel store directory")->required();
  series->add_option("--spec", series_spec, "Swap family")->required()->check(CLI::IsMember(swap_specs));
  series->add_option("--freq", series_freq, "daily, weekly or monthly")
      ->check(CLI::IsMember({"daily", "weekly", "monthly"}));
  series->add_option("--tau", series_tau, "Constant maturity in calendar days")->check(CLI::PositiveNumber);
  series->add_option("--method", series_method, "a: roll at maturity, b: level interpolation, c: increment interpolation")
      ->check(CLI::IsMember({"a", "b", "c"}));
  series->add_option("--out", series_out, "Output CSV")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo aggregation and bias checks");
  std::string sim_model, sim_measure, sim_out;
  std::vector<std::string> sim_checks, sim_payoffs;
  std::vector<std::size_t> sim_steps;
  std::optional<std::size_t> sim_paths;
  simulate->add_option("--model", sim_model, "INI file with a [model] section (falls back to [simulate] of --config)");
  simulate->add_option("--measure", sim_measure, "P or Q")->check(CLI::IsMember({"P", "Q"}));
  simulate->add_option("--check", sim_checks, "ap, qbias, pbias or variance (repeatable)")
      ->check(CLI::IsMember({"ap", "qbias", "pbias", "variance"}));
  simulate->add_option("--payoff", sim_payoffs, "variance, third, fourth, rv, lv, psi, cube or erp (repeatable)")
      ->check(CLI::IsMember({"variance", "third", "fourth", "rv", "lv", "psi", "cube", "erp"}));
  simulate->add_option("--steps", sim_steps, "Monitoring steps per horizon (repeatable)");
  simulate->add_option("--paths", sim_paths, "Number of paths")->check(CLI::Range(2ul, 1ul << 40));
  simulate->add_option("--out", sim_out, "Report CSV")->required();

  // regress
  auto* regress = app.add_subcommand("regress", "Factor regression of a daily P&L series");
  std::string reg_pnl, reg_factors, reg_period = ":", reg_restricted = "no", reg_out, reg_cov = "classical";
  regress->add_option("--pnl", reg_pnl, "Series CSV (date, increment, ...)")->required();
  regress->add_option("--factors", reg_factors, "Daily factor research file")->required();
  regress->add_option("--period", reg_period, "from:to (yyyy-mm-dd, either side optional)");
  regress->add_option("--restricted", reg_restricted, "yes: drop size, growth and momentum")
      ->check(CLI::IsMember({"yes", "no"}));
  regress->add_option("--covariance", reg_cov, "classical or hc1")->check(CLI::IsMember({"classical", "hc1"}));
  regress->add_option("--out", reg_out, "Report CSV")->required();

  // report
  auto* report = app.add_subcommand("report", "Tables (csv) and figures (svg) from stored series");
  std::string rep_series, rep_regression, rep_out;
  report->add_option("--series", rep_series, "Series store directory")->required();
  report->add_option("--regression", rep_regression, "Regression store directory");
  report->add_option("--out", rep_out, "Report directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline driven by --config");
  std::string run_out;
  std::vector<std::string> run_stages;
  run->add_option("--out", run_out, "Output directory (overrides [paths] out)");
  run->add_option("--stages", run_stages, "Subset of stages to run (repeatable)")
      ->check(CLI::IsMember(ms::all_stages()));

  // synth
  auto* synth = app.add_subcommand("synth", "Write simulated option quotes and a factor file");
  std::string synth_out;
  std::size_t synth_days = 250;
  double synth_sigma = 0.2, synth_drift = 0.05, synth_skew = -0.1, synth_noise = 0.0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--days", synth_days, "Trading days")->check(CLI::PositiveNumber);
  synth->add_option("--sigma", synth_sigma, "Volatility of the simulated forward");
  synth->add_option("--p-drift", synth_drift, "Physical drift over the martingale drift");
  synth->add_option("--skew", synth_skew, "Implied vol slope per unit log-moneyness");
  synth->add_option("--noise", synth_noise, "Relative price noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ms::kExitOk : ms::kExitValidation;
  }

  auto logger = spdlog::stderr_color_mt("momentswap");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  spdlog::set_pattern("[%l] %v");
  const auto sink = spdlog_sink();

  try {
    if (*ingest) {
      const auto cfg = pipeline_config(g);
      std::vector<fs::path> inputs(ingest_inputs.begin(), ingest_inputs.end());
      for (const auto& p : inputs)
        if (!fs::exists(p)) throw ms::ValidationError("input '" + p.string() + "' does not exist");
      publish("ingest", ingest_out, [&](const fs::path& tmp) {
        spdlog::info("ingested {} trade dates", ms::run_ingest(inputs, cfg.schema, tmp));
      });
    } else if (*surface) {
      auto cfg = pipeline_config(g);
      if (grid_points) cfg.grid.points = *grid_points;
      if (sigma_range) cfg.grid.sigma_range = *sigma_range;
      if (target_rmse) cfg.grid.target_rmse = *target_rmse;
      if (!fs::is_directory(surface_quotes))
        throw ms::ValidationError("quote store '" + surface_quotes + "' does not exist");
      publish("surface", surface_out, [&](const fs::path& tmp) {
        const auto s = ms::run_surface(surface_quotes, cfg.filter, cfg.grid, tmp, sink);
        for (const auto& w : s.warnings) spdlog::debug(w);
        if (!s.warnings.empty()) spdlog::warn("{} warnings, see warnings.txt in the grid store", s.warnings.size());
        spdlog::info("fitted {} grids on {} dates", s.grids, s.dates);
      });
    } else if (*contracts) {
      auto cfg = pipeline_config(g);
      if (quadrature == "trapezoid") cfg.quadrature = ms::Quadrature::trapezoid;
      if (quadrature == "left_riemann") cfg.quadrature = ms::Quadrature::left_riemann;
      if (!fs::is_directory(contracts_grids))
        throw ms::ValidationError("grid store '" + contracts_grids + "' does not exist");
      publish("contracts", contracts_out, [&](const fs::path& tmp) {
        spdlog::info("priced {} panel rows", ms::run_contracts(contracts_grids, cfg.quadrature, tmp));
      });
    } else if (*swaps) {
      if (!fs::is_directory(swaps_panel))
        throw ms::ValidationError("panel store '" + swaps_panel + "' does not exist");
      const auto kinds = parse_kinds(swaps_spec);
      publish("swaps", swaps_out, [&](const fs::path& tmp) { ms::run_swaps(swaps_panel, kinds, tmp); });
    } else if (*series) {
      if (!fs::is_directory(series_panel))
        throw ms::ValidationError("panel store '" + series_panel + "' does not exist");
      const auto panel = ms::read_panel_store(series_panel);
      try {
        const auto s = ms::build_pnl_series(panel, ms::parse_swap_kind(series_spec),
                                            ms::parse_frequency(series_freq), series_tau,
                                            ms::parse_series_method(series_method));
        for (const auto& w : s.warnings) spdlog::warn(w);
        ms::write_series_csv(series_out, s);
        spdlog::info("{} increments written to {}", s.points.size(), series_out);
      } catch (const ms::ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw ms::StageError("series", e.what());
      }
    } else if (*simulate) {
      ms::SimulationSettings s;
      if (!sim_model.empty()) {
        if (!fs::exists(sim_model)) throw ms::ValidationError("model file '" + sim_model + "' does not exist");
        const auto mc = ms::Config::load(sim_model);
        s = ms::read_simulation_settings(mc, mc.has("model", "sigma") || mc.has("model", "model") ? "model" : "simulate");
      } else {
        s = ms::read_simulation_settings(load_config(g), "simulate");
      }
      const auto base = pipeline_config(g);
      s.model.seed = g.seed ? *g.seed : base.seed;
      s.mc.threads = base.threads;
      if (!sim_measure.empty()) s.measure = ms::parse_measure(sim_measure);
      if (!sim_checks.empty()) s.checks = sim_checks;
      if (!sim_payoffs.empty()) {
        s.payoffs.clear();
        for (const auto& p : sim_payoffs) s.payoffs.push_back(ms::parse_characteristic(p));
      }
      if (!sim_steps.empty()) s.partitions = sim_steps;
      for (auto n : s.partitions)
        if (n == 0) throw ms::ValidationError("--steps must be positive");
      if (sim_paths) s.mc.n_paths = *sim_paths;
      try {
        if (fs::path(sim_out).has_parent_path()) fs::create_directories(fs::path(sim_out).parent_path());
        ms::run_simulation(s, sim_out, sink);
      } catch (const ms::ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw ms::StageError("simulate", e.what());
      }
      spdlog::info("simulation report written to {}", sim_out);
    } else if (*regress) {
      if (!fs::exists(reg_pnl)) throw ms::ValidationError("series file '" + reg_pnl + "' does not exist");
      if (!fs::exists(reg_factors)) throw ms::ValidationError("factor file '" + reg_factors + "' does not exist");
      const auto [from, to] = ms::PipelineConfig::parse_period(reg_period);
      try {
        const auto data = ms::read_series_csv(reg_pnl);
        const auto factors = ms::load_factor_file(reg_factors);
        const auto r = ms::regress_series(data, factors, from, to,
                                          reg_cov == "hc1" ? ms::CovarianceType::hc1 : ms::CovarianceType::classical);
        if (fs::path(reg_out).has_parent_path()) fs::create_directories(fs::path(reg_out).parent_path());
        ms::CsvWriter w(reg_out);
        w.row(ms::regression_columns());
        const auto name = fs::path(reg_pnl).stem().string();
        ms::write_regression_rows(w, name, reg_restricted == "yes" ? r.restricted : r.unrestricted);
        const auto& chosen = reg_restricted == "yes" ? r.restricted : r.unrestricted;
        spdlog::info("n = {}, adjusted R2 = {:.4f}, F = {:.3f} (p = {:.4f})", chosen.n_obs, chosen.adjusted_r2,
                     chosen.f_stat, chosen.f_p_value);
      } catch (const ms::ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw ms::StageError("regress", e.what());
      }
    } else if (*report) {
      if (!fs::is_directory(rep_series))
        throw ms::ValidationError("series store '" + rep_series + "' does not exist");
      if (!rep_regression.empty() && !fs::is_directory(rep_regression))
        throw ms::ValidationError("regression store '" + rep_regression + "' does not exist");
      publish("report", rep_out, [&](const fs::path& tmp) {
        ms::write_report(rep_series, rep_regression.empty() ? std::nullopt : std::optional<fs::path>(rep_regression),
                         tmp);
      });
    } else if (*run) {
      auto cfg = pipeline_config(g);
      if (!run_out.empty()) cfg.out = run_out;
      if (!run_stages.empty()) cfg.stages = run_stages;
      const auto res = ms::run_pipeline(cfg, sink);
      spdlog::info("{} stages, {} files in manifest {}", res.stages_run.size(), res.manifest.size(),
                   (cfg.out / "manifest.json").string());
    } else if (*synth) {
      ms::MarketModel m;
      m.sigma = synth_sigma;
      m.p_drift = synth_drift;
      m.seed = g.seed ? *g.seed : pipeline_config(g).seed;
      ms::SyntheticQuoteConfig sc;
      sc.market.trading_days = synth_days;
      sc.skew = synth_skew;
      sc.noise = synth_noise;
      const auto n = ms::write_synthetic_inputs(m, sc, synth_out);
      spdlog::info("wrote {} trade dates of quotes and a factor file to {}", n, synth_out);
    }
  } catch (const ms::ValidationError& e) {
    spdlog::error("{}", e.what());
    return ms::kExitValidation;
  } catch (const ms::StageError& e) {
    spdlog::error("{}", e.what());
    return ms::kExitStageFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return ms::kExitStageFailure;
  }
  return ms::kExitOk;
}
