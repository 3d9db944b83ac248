#include "evotrade/harness.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace evotrade {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

RollingReport assemble(std::vector<DeploymentSegment> segments, std::vector<ReoptimizationEvent> events,
                       std::int64_t bars_per_day, double periods_per_year) {
  RollingReport report;
  std::vector<Eigen::ArrayXd> curves;
  for (const auto& seg : segments) {
    curves.push_back(seg.result.equity);
    const auto offset = static_cast<std::size_t>(seg.start_day * bars_per_day);
    for (auto t : seg.result.trades) {
      t.entry_bar += offset;
      t.exit_bar += offset;
      report.trades.push_back(t);
    }
  }
  report.equity = stitch_equity(std::span<const Eigen::ArrayXd>(curves));
  report.overall = compute_metrics(report.equity, report.trades, periods_per_year);
  report.segments = std::move(segments);
  report.events = std::move(events);
  return report;
}

DeploymentSegment deploy(const CandleSeries& series, std::int64_t start, std::int64_t end, const ParameterGene& gene,
                         const ExecutionConfig& xcfg, double periods_per_year) {
  DeploymentSegment seg;
  seg.start_day = start;
  seg.end_day = end;
  seg.gene = gene;
  seg.result = run_backtest(slice_window(series, start, end - start), gene, xcfg);
  seg.metrics = compute_metrics(seg.result, periods_per_year);
  return seg;
}

}  // namespace

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::BaselineOnly: return "baseline";
    case RunMode::Optimized: return "optimized";
    case RunMode::Both: return "both";
  }
  return "";
}

std::optional<RunMode> parse_mode(std::string_view text) {
  if (text == "baseline" || text == "baseline-only") return RunMode::BaselineOnly;
  if (text == "optimized") return RunMode::Optimized;
  if (text == "both") return RunMode::Both;
  return std::nullopt;
}

void RollingConfig::validate() const {
  if (window_days < 2) throw std::invalid_argument("window_days must be >= 2");
}

std::vector<std::int64_t> reoptimization_days(std::int64_t total_days, std::int64_t window_days) {
  std::vector<std::int64_t> days;
  for (std::int64_t day = window_days; day < total_days; day += window_days) days.push_back(day);
  return days;
}

RollingRun run_rolling(const CandleSeries& series, const RollingConfig& rcfg, const EvolutionConfig& ecfg,
                       const ExecutionConfig& xcfg, const FitnessConfig& fcfg, const ParameterSpace& space,
                       const RollingObserver& observer) {
  rcfg.validate();
  xcfg.validate();
  fcfg.validate();
  const std::int64_t total_days = day_count(series);
  if (total_days < 1) throw DataError(DataError::Kind::InsufficientData, "series holds less than one whole day");

  RollingRun run;
  run.mode = rcfg.mode;
  run.symbol = series.symbol;
  run.window_days = rcfg.window_days;
  run.bars_per_day = series.bars_per_day();
  const double periods = bars_per_year(series.bar_seconds);
  const ParameterGene baseline_gene = default_gene();

  if (rcfg.mode != RunMode::Optimized) {
    std::vector<DeploymentSegment> segs;
    segs.push_back(deploy(series, 0, total_days, baseline_gene, xcfg, periods));
    run.baseline = assemble(std::move(segs), {}, run.bars_per_day, periods);
  }

  if (rcfg.mode != RunMode::BaselineOnly) {
    ecfg.validate();
    const auto boundaries = reoptimization_days(total_days, rcfg.window_days);
    if (boundaries.empty()) {
      throw DataError(DataError::Kind::InsufficientData,
                      std::to_string(total_days) + " days leave no re-optimisation boundary for a " +
                          std::to_string(rcfg.window_days) + "-day window");
    }
    std::vector<DeploymentSegment> segs;
    std::vector<ReoptimizationEvent> events;
    segs.push_back(deploy(series, 0, boundaries.front(), baseline_gene, xcfg, periods));
    ParameterGene current = baseline_gene;
    for (std::size_t k = 0; k < boundaries.size(); ++k) {
      const auto day = boundaries[k];
      const auto train = slice_window(series, day - rcfg.window_days, rcfg.window_days);
      EvolutionConfig cfg = ecfg;
      cfg.rng_seed = mix_seed(rcfg.rng_seed, k);
      OptimizeOptions options;
      options.space = space;
      options.seed = space.repair(baseline_gene);
      if (observer) {
        options.on_generation = [&observer, day](std::size_t g, std::span<const ScoredGene> scored) {
          observer(day, g, scored);
        };
      }
      const auto outcome = optimize(train, cfg, xcfg, fcfg, options);
      events.push_back({day, current, outcome.best.gene, outcome.best.fitness, outcome.evaluations});
      current = outcome.best.gene;
      const auto end = std::min(day + rcfg.window_days, total_days);
      segs.push_back(deploy(series, day, end, current, xcfg, periods));
    }
    run.optimized = assemble(std::move(segs), std::move(events), run.bars_per_day, periods);
  }
  return run;
}

nlohmann::ordered_json events_to_json(std::span<const ReoptimizationEvent> events) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& ev : events) {
    nlohmann::ordered_json j;
    j["day"] = ev.day;
    j["old"] = gene_to_json(ev.old_gene);
    j["new"] = gene_to_json(ev.new_gene);
    auto changed = nlohmann::ordered_json::array();
    for (auto field : kGeneFields) {
      if (ev.old_gene.get(field) != ev.new_gene.get(field)) changed.push_back(std::string(field_name(field)));
    }
    j["changed"] = changed;
    j["in_sample_fitness"] = ev.fitness;
    j["evaluations"] = ev.evaluations;
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::ordered_json population_checkpoint(std::span<const ScoredGene> scored) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : scored) {
    auto j = gene_to_json(s.gene);
    j["fitness"] = s.fitness;
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write " + path.string());
  out << contents;
  out.close();
  if (!out) throw OutputError("failed writing " + path.string());
}

void emit_report(const RollingRun& run, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw OutputError("cannot create output directory " + out_dir.string());
  }

  std::vector<std::pair<std::string, const RollingReport*>> strategies;
  if (run.baseline) strategies.emplace_back("baseline", &*run.baseline);
  if (run.optimized) strategies.emplace_back("optimized", &*run.optimized);
  if (strategies.empty()) throw std::invalid_argument("rolling run holds no strategy reports");

  // equity.csv
  {
    std::vector<Eigen::ArrayXd> daily;
    for (const auto& [name, rep] : strategies) daily.push_back(daily_equity(rep->equity, run.bars_per_day));
    std::string csv = "day_index";
    if (strategies.size() == 1) {
      csv += ",total_assets";
    } else {
      for (const auto& [name, rep] : strategies) csv += "," + name;
    }
    csv += '\n';
    for (Eigen::Index d = 0; d < daily.front().size(); ++d) {
      csv += std::to_string(d);
      for (const auto& curve : daily) csv += "," + format_double(curve[d]);
      csv += '\n';
    }
    write_text_file(out_dir / "equity.csv", csv);
  }

  // summary.json and summary.csv
  {
    nlohmann::ordered_json summary;
    std::string csv = "strategy";
    for (auto name : kHeadlineNames) csv += "," + std::string(name);
    csv += '\n';
    for (const auto& [name, rep] : strategies) {
      summary[name] = metrics_to_json(rep->overall);
      const auto h = headline(rep->overall);
      csv += name;
      for (double v : {h.pnl_total, h.returns_volatility, h.sharpe_ratio, h.sortino_ratio, h.risk_return_ratio}) {
        csv += "," + format_double(v);
      }
      csv += '\n';
    }
    write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
    write_text_file(out_dir / "summary.csv", csv);
  }

  // events.json
  {
    const auto& events = run.optimized ? run.optimized->events : std::vector<ReoptimizationEvent>{};
    write_text_file(out_dir / "events.json", events_to_json(events).dump(2) + "\n");
  }
}

}  // namespace evotrade
