#include "evotrade/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evotrade/config.hpp"
#include "evotrade/harness.hpp"
#include "evotrade/market_data.hpp"

namespace evotrade {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct GlobalOptions {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool trace = false;
};

struct WindowOptions {
  std::int64_t start_day = 0;
  std::optional<std::int64_t> days;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig load_run_config(const GlobalOptions& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
  if (g.seed) {
    cfg.rolling.rng_seed = *g.seed;
    cfg.evolution.rng_seed = *g.seed;
  }
  return cfg;
}

LoadedSeries load_data(const GlobalOptions& g) {
  return load_candles(g.data, std::filesystem::path(g.data).stem().string());
}

CandleSeries pick_window(const CandleSeries& series, const WindowOptions& w) {
  const auto days = w.days.value_or(day_count(series) - w.start_day);
  return slice_window(series, w.start_day, days);
}

std::filesystem::path require_out(const GlobalOptions& g, const char* why) {
  if (g.out.empty()) throw UsageError(std::string("--out is required ") + why);
  return g.out;
}

int run_validate(const GlobalOptions& g, std::ostream& out) {
  const auto loaded = load_data(g);
  const auto& r = loaded.report;
  const auto& s = loaded.series;
  out << "symbol:        " << s.symbol << "\n"
      << "rows read:     " << r.rows_read << "\n"
      << "rows accepted: " << r.rows_accepted << "\n"
      << "rows rejected: " << r.rows_rejected << "\n"
      << "gaps filled:   " << r.gaps_filled << "\n"
      << "candles:       " << s.size() << "\n"
      << "whole days:    " << day_count(s) << "\n"
      << "first bar:     " << s.candles.front().timestamp << "\n"
      << "last bar:      " << s.candles.back().timestamp << "\n";
  for (const auto& rej : r.rejections) out << "  line " << rej.line << ": " << rej.reason << "\n";
  return kExitOk;
}

int run_backtest_cmd(const GlobalOptions& g, const WindowOptions& w, std::ostream& out) {
  const auto cfg = load_run_config(g);
  const auto series = pick_window(load_data(g).series, w);
  const auto gene = cfg.gene.value_or(default_gene());
  const auto result = run_backtest(series, gene, cfg.execution);
  const auto metrics = compute_metrics(result, bars_per_year(series.bar_seconds));

  nlohmann::ordered_json j;
  j["gene"] = gene_to_json(gene);
  j["bars"] = series.size();
  j["insufficient_history"] = result.insufficient_history;
  j["fitness"] = fitness(metrics, cfg.fitness);
  j["metrics"] = metrics_to_json(metrics);
  out << j.dump(2) << "\n";

  if (!g.out.empty()) {
    std::filesystem::create_directories(g.out);
    std::ostringstream csv;
    write_equity_csv(csv, result.equity, series.bars_per_day());
    write_text_file(std::filesystem::path(g.out) / "equity.csv", csv.str());
  }
  return kExitOk;
}

int run_optimize_cmd(const GlobalOptions& g, const WindowOptions& w, std::ostream& out) {
  const auto cfg = load_run_config(g);
  const auto series = pick_window(load_data(g).series, w);
  OptimizeOptions options;
  options.space = cfg.space;
  options.seed = cfg.space.repair(default_gene());
  if (g.trace) {
    const auto dir = require_out(g, "with --trace");
    std::filesystem::create_directories(dir);
    options.on_generation = [dir](std::size_t gen, std::span<const ScoredGene> scored) {
      std::ostringstream name;
      name << "population_gen_" << std::setw(3) << std::setfill('0') << gen << ".json";
      write_text_file(dir / name.str(), population_checkpoint(scored).dump(2) + "\n");
    };
  }
  const auto outcome = optimize(series, cfg.evolution, cfg.execution, cfg.fitness, options);

  nlohmann::ordered_json j;
  j["best"] = gene_to_json(outcome.best.gene);
  j["fitness"] = outcome.best.fitness;
  j["evaluations"] = outcome.evaluations;
  auto log = nlohmann::ordered_json::array();
  for (const auto& s : outcome.generation_log) log.push_back({{"best", s.best_fitness}, {"mean", s.mean_fitness}});
  j["generations"] = log;
  j["metrics"] = metrics_to_json(outcome.best.metrics);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int run_rolling_cmd(const GlobalOptions& g, std::ostream& out) {
  const auto dir = require_out(g, "for rolling");
  const auto cfg = load_run_config(g);
  const auto series = load_data(g).series;
  RollingObserver observer;
  if (g.trace) {
    std::filesystem::create_directories(dir / "trace");
    observer = [dir](std::int64_t day, std::size_t gen, std::span<const ScoredGene> scored) {
      std::ostringstream name;
      name << "day_" << std::setw(4) << std::setfill('0') << day << "_gen_" << std::setw(3) << gen << ".json";
      write_text_file(dir / "trace" / name.str(), population_checkpoint(scored).dump(2) + "\n");
    };
  }
  const auto run = run_rolling(series, cfg.rolling, cfg.evolution, cfg.execution, cfg.fitness, cfg.space, observer);
  emit_report(run, dir);

  auto print = [&out](const char* name, const RollingReport& rep) {
    const auto h = headline(rep.overall);
    out << name << " pnl " << h.pnl_total << "  sharpe " << h.sharpe_ratio << "  sortino " << h.sortino_ratio << "\n";
  };
  if (run.baseline) print("baseline ", *run.baseline);
  if (run.optimized) print("optimized", *run.optimized);
  if (run.optimized) out << run.optimized->events.size() << " re-optimisation events\n";
  out << "report written to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Walk-forward genetic tuning of a dual-RSI crossover strategy", "evotrade"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--data", g.data, "Candle CSV (timestamp,open,high,low,close,volume)")->required();
  app.add_option("--config", g.config, "TOML configuration");
  app.add_option("--out", g.out, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_flag("--trace", g.trace, "Write per-generation population checkpoints");

  WindowOptions window;
  auto add_window = [&window](CLI::App* cmd) {
    cmd->add_option("--start-day", window.start_day, "First day of the window")->check(CLI::NonNegativeNumber);
    cmd->add_option("--days", window.days, "Window length in days (default: to the end)");
  };
  auto* validate = app.add_subcommand("validate", "Load and validate the data only");
  auto* backtest = app.add_subcommand("backtest", "Backtest one gene on a window");
  auto* optimise = app.add_subcommand("optimize", "Run the genetic optimiser on one window");
  auto* rolling = app.add_subcommand("rolling", "Walk-forward run with periodic re-optimisation");
  add_window(backtest);
  add_window(optimise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*validate) return run_validate(g, out);
    if (*backtest) return run_backtest_cmd(g, window, out);
    if (*optimise) return run_optimize_cmd(g, window, out);
    if (*rolling) return run_rolling_cmd(g, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace evotrade
