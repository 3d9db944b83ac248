#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "evotrade/backtest.hpp"
#include "evotrade/evolution.hpp"
#include "evotrade/metrics.hpp"
#include "evotrade/strategy.hpp"

namespace evotrade {

enum class RunMode { BaselineOnly, Optimized, Both };

std::string_view mode_name(RunMode mode);
std::optional<RunMode> parse_mode(std::string_view text);

struct RollingConfig {
  std::int64_t window_days = 30;
  RunMode mode = RunMode::Both;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

struct DeploymentSegment {
  std::int64_t start_day = 0;
  std::int64_t end_day = 0;  // exclusive
  ParameterGene gene;
  MetricVector metrics;
  BacktestResult result;
};

struct ReoptimizationEvent {
  std::int64_t day = 0;  // first day the new gene trades
  ParameterGene old_gene;
  ParameterGene new_gene;
  double fitness = 0.0;  // in-sample fitness on [day - window, day)
  std::size_t evaluations = 0;
};

struct RollingReport {
  std::vector<DeploymentSegment> segments;
  Eigen::ArrayXd equity;     // stitched, one mark per bar
  std::vector<Trade> trades; // bar indices relative to the full series
  MetricVector overall;
  std::vector<ReoptimizationEvent> events;
};

struct RollingRun {
  RunMode mode = RunMode::Both;
  std::string symbol;
  std::int64_t window_days = 0;
  std::int64_t bars_per_day = 0;
  std::optional<RollingReport> baseline;
  std::optional<RollingReport> optimized;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Days at which a re-optimised gene starts trading: every multiple of the
/// window with at least one whole day left after it.
std::vector<std::int64_t> reoptimization_days(std::int64_t total_days, std::int64_t window_days);

/// Called for every evaluated generation of every window optimisation.
using RollingObserver =
    std::function<void(std::int64_t boundary_day, std::size_t generation, std::span<const ScoredGene> scored)>;

/// Walk-forward evaluation. Days [0, window) trade the default gene; at each
/// boundary the optimiser sees only the preceding window and its result trades
/// until the next boundary.
RollingRun run_rolling(const CandleSeries& series, const RollingConfig& rcfg, const EvolutionConfig& ecfg,
                       const ExecutionConfig& xcfg, const FitnessConfig& fcfg,
                       const ParameterSpace& space = default_space(), const RollingObserver& observer = {});

/// Writes equity.csv, summary.json, summary.csv and events.json into `out_dir`.
void emit_report(const RollingRun& run, const std::filesystem::path& out_dir);

nlohmann::ordered_json events_to_json(std::span<const ReoptimizationEvent> events);

/// JSON array of gene objects, each with an extra "fitness" key.
nlohmann::ordered_json population_checkpoint(std::span<const ScoredGene> scored);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace evotrade
