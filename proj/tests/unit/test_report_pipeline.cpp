#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "momentswap/pipeline.hpp"
#include "momentswap/report.hpp"
#include "momentswap/svg.hpp"
#include "scratch.hpp"

using namespace momentswap;
using testing_support::ScratchDir;
using testing_support::slurp;

namespace {

PipelineConfig small_config(const fs::path& inputs, const fs::path& out) {
  auto c = PipelineConfig::from(Config::parse(
      "[paths]\nquotes = quotes\nfactors = factors.csv\n"
      "[surface]\npoints = 300\n"
      "[series]\nspecs = variance,lv,skew\nfrequencies = daily,weekly\n"
      "[simulate]\nchecks = ap,qbias\npayoffs = variance\npartitions = 1,5\npaths = 500\n"
      "[run]\nseed = 3\n"),
                                inputs);
  c.out = out;
  return c;
}

void write_inputs(const fs::path& dir, int days) {
  MarketModel m;
  m.seed = 3;
  SyntheticQuoteConfig q;
  q.market.trading_days = days;
  q.market.listed_months = 3;
  write_synthetic_inputs(m, q, dir);
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MOMENTSWAP_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Svg, DeterministicAndEscaped) {
  svg::LineChart c;
  c.title = "a < b & c";
  c.lines.push_back({"s", {0, 1, 2}, {0.1, -0.2, 0.3}});
  const auto a = c.render(), b = c.render();
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(a.find("a < b"), std::string::npos);
  svg::LineChart empty;
  EXPECT_NE(empty.render().find("no data"), std::string::npos);
  c.lines.push_back({"bad", {0, 1}, {1}});
  EXPECT_THROW(c.render(), DimensionError);
}

TEST(Svg, NiceTicksCoverRange) {
  const auto t = svg::nice_ticks(-0.013, 0.047);
  ASSERT_GE(t.size(), 3u);
  EXPECT_LE(t.front(), 0.0 + 1e-12);
  EXPECT_GE(t.back(), 0.04 - 1e-12);
  for (std::size_t i = 2; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], t[1] - t[0], 1e-12);
}

TEST(Report, EmptyStoreGivesHeaderOnlyTablesAndEmptyCharts) {
  ScratchDir dir;
  fs::create_directories(dir / "series");
  const auto rf = write_report(dir / "series", std::nullopt, dir / "rep");
  EXPECT_EQ(rf.files.size(), 7u);
  const auto t = read_delimited(dir / "rep" / "table_moments.csv");
  EXPECT_TRUE(t.rows.empty());
  EXPECT_EQ(t.header.front(), "series");
  EXPECT_TRUE(read_delimited(dir / "rep" / "table_regression.csv").rows.empty());
  EXPECT_NE(slurp(dir / "rep" / "figure_increments.svg").find("no data"), std::string::npos);
  EXPECT_THROW(read_series_store(dir / "none"), DatasetError);
}

TEST(Report, MomentTableUsesIidScaling) {
  ScratchDir dir;
  PnlSeries d, w;
  for (int i = 0; i < 40; ++i) {
    SeriesPoint p;
    p.date = add_days(make_date(2010, 1, 4), i);
    p.value = std::sin(1.3 * i) * 0.01;
    d.points.push_back(p);
    if (i % 5 == 4) {
      p.value *= 2.0;
      w.points.push_back(p);
    }
  }
  write_series_csv(dir / "s" / series_file_name(SwapKind::variance, Frequency::daily), d);
  write_series_csv(dir / "s" / series_file_name(SwapKind::variance, Frequency::weekly), w);
  const auto rows = moment_table(read_series_store(dir / "s"));
  ASSERT_FALSE(rows.empty());
  const auto sd = std::find_if(rows.begin(), rows.end(), [](const MomentTableRow& r) { return r.statistic == "SD"; });
  ASSERT_NE(sd, rows.end());
  EXPECT_NEAR(*sd->weekly_iid, *sd->daily * std::sqrt(5.0), 1e-15);
  EXPECT_TRUE(sd->weekly_obs);
  EXPECT_FALSE(sd->monthly_obs);
}

TEST(Pipeline, SimulationOnlyRunNeedsNoMarketData) {
  ScratchDir dir;
  auto c = PipelineConfig::from(Config::parse("[simulate]\npaths = 400\npartitions = 1,3\n"
                                              "checks = ap,qbias,pbias,variance\npayoffs = variance,lv\n"
                                              "[run]\nstages = simulate\n"));
  c.out = dir / "out";
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.stages_run, std::vector<std::string>{"simulate"});
  const auto t = read_delimited(dir / "out" / "simulation" / "report.csv");
  EXPECT_GT(t.rows.size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Pipeline, ValidationCatchesMissingInputs) {
  ScratchDir dir;
  auto c = PipelineConfig::from(Config::parse("[run]\nstages = ingest\n"));
  c.out = dir / "out";
  EXPECT_THROW(c.validate(), ValidationError);
  auto r = PipelineConfig::from(Config::parse("[run]\nstages = regress\n"));
  r.out = dir / "out";
  EXPECT_THROW(r.validate(), ValidationError);
  r.factors = dir / "nope.csv";
  EXPECT_THROW(r.validate(), ValidationError);
  dir.write("f.csv", "x");
  r.factors = dir / "f.csv";
  EXPECT_THROW(r.validate(), ValidationError);  // no series store
  auto s = PipelineConfig::from(Config::parse("[run]\nstages = bogus\n"));
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_THROW(PipelineConfig::from(Config::parse("[contracts]\nquadrature = simpson\n")), ValidationError);
  EXPECT_THROW(PipelineConfig::from(Config::parse("[series]\ntau = 0\n")), ValidationError);
  EXPECT_THROW(PipelineConfig::parse_period("2012-01-01:2011-01-01"), ValidationError);
}

TEST(Pipeline, PublishIsAllOrNothing) {
  ScratchDir dir;
  publish_store("x", dir / "store", [](const fs::path& t) { std::ofstream(t / "a.txt") << "1"; });
  EXPECT_EQ(slurp(dir / "store" / "a.txt"), "1");
  EXPECT_THROW(publish_store("x", dir / "store",
                             [](const fs::path& t) {
                               std::ofstream(t / "b.txt") << "2";
                               throw std::runtime_error("boom");
                             }),
               StageError);
  EXPECT_EQ(slurp(dir / "store" / "a.txt"), "1");
  EXPECT_FALSE(fs::exists(dir / "store" / "b.txt"));
  EXPECT_FALSE(fs::exists(dir / ".store.partial"));
}

TEST(Pipeline, Sha256KnownAnswer) {
  ScratchDir dir;
  dir.write("abc", "abc");
  EXPECT_EQ(sha256_file(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, FullSyntheticRunIsReproducible) {
  ScratchDir dir;
  write_inputs(dir.path(), 30);
  const auto c = small_config(dir.path(), dir / "out");
  const auto first = run_pipeline(c);
  EXPECT_EQ(first.stages_run, all_stages());
  for (const char* f : {"report/tau30/table_moments.csv", "report/tau30/table_regression.csv",
                        "report/tau30/figure_cumulative_daily.svg", "regression/tau30/regression_variance.csv",
                        "series/tau30/series_lv_daily.csv", "simulation/report.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const auto m1 = slurp(dir / "out" / "manifest.json");
  run_pipeline(c);
  EXPECT_EQ(slurp(dir / "out" / "manifest.json"), m1);

  auto later = c;
  later.stages = {"series", "report"};
  later.taus = {30};
  const auto again = run_pipeline(later);
  EXPECT_EQ(again.stages_run, later.stages);
  EXPECT_EQ(again.manifest.size(), first.manifest.size());
  for (std::size_t i = 0; i < again.manifest.size(); ++i) EXPECT_EQ(again.manifest[i].sha256, first.manifest[i].sha256);
}

TEST(Cli, HelpListsEveryFlag) {
  ScratchDir dir;
  EXPECT_EQ(run_cli("--help", dir / "help.txt"), 0);
  const auto help = slurp(dir / "help.txt");
  for (const char* s : {"--config", "--seed", "--threads", "--log-level", "ingest", "surface", "contracts", "swaps",
                        "series", "simulate", "regress", "report", "run", "synth", "--quadrature", "--method",
                        "--check", "--payoff", "--steps", "--paths", "--period", "--restricted", "--covariance",
                        "--stages"})
    EXPECT_NE(help.find(s), std::string::npos) << s;
}

TEST(Cli, ExitCodes) {
  ScratchDir dir;
  EXPECT_EQ(run_cli("", dir / "a.txt"), 2);
  EXPECT_EQ(run_cli("series --panel x", dir / "b.txt"), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.ini").string() + " run", dir / "c.txt"), 2);
  dir.write("bad.ini", "[run]\nstages = ingest\n");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.ini").string() + " run", dir / "d.txt"), 2);
  EXPECT_EQ(run_cli("report --series " + (dir / "none").string() + " --out " + (dir / "r").string(), dir / "e.txt"),
            2);
  dir.write("s/series_variance_daily.csv", "date,increment\n2010-01-04,abc\n");
  EXPECT_EQ(run_cli("report --series " + (dir / "s").string() + " --out " + (dir / "r").string(), dir / "e2.txt"),
            3)
      << slurp(dir / "e2.txt");
  dir.write("sim.ini", "[simulate]\npaths = 300\npartitions = 1,2\npayoffs = variance\nchecks = qbias\n");
  EXPECT_EQ(run_cli("--config " + (dir / "sim.ini").string() + " --seed 5 simulate --out " +
                        (dir / "sim.csv").string(),
                    dir / "f.txt"),
            0)
      << slurp(dir / "f.txt");
  EXPECT_TRUE(fs::exists(dir / "sim.csv"));
}
