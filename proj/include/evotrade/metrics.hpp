#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

#include "evotrade/backtest.hpp"

namespace evotrade {

/// The eleven scored metrics, in canonical order.
enum class Metric : std::size_t {
  TotalPnl,
  AnnualizedReturn,
  ReturnsVolatility,
  SharpeRatio,
  SortinoRatio,
  RiskReturnRatio,
  WinRate,
  MaxDrawdown,
  ProfitFactor,
  TradeCount,
  AvgTradePnl,
};

inline constexpr std::size_t kMetricCount = 11;
using MetricArray = Eigen::Matrix<double, kMetricCount, 1>;

/// 288 five-minute bars a day, 365 days a year.
inline constexpr double kBarsPerYear5m = 105'120.0;
/// Cap applied to the profit factor when there are no losing trades.
inline constexpr double kProfitFactorCap = 100.0;

std::string_view metric_name(Metric metric);
constexpr std::size_t index_of(Metric metric) { return static_cast<std::size_t>(metric); }

struct MetricVector {
  double total_pnl_fraction = 0.0;
  double annualized_return = 0.0;
  double returns_volatility = 0.0;
  double sharpe_ratio = 0.0;
  double sortino_ratio = 0.0;
  double risk_return_ratio = 0.0;
  double win_rate = 0.0;
  double max_drawdown = 0.0;
  double profit_factor = 0.0;
  double trade_count = 0.0;
  double avg_trade_pnl_fraction = 0.0;

  MetricArray as_array() const;
  static MetricVector from_array(const MetricArray& values);
  double operator[](Metric metric) const { return as_array()[static_cast<Eigen::Index>(index_of(metric))]; }
};

enum class Direction { HigherBetter, LowerBetter };

struct MetricSpec {
  Direction direction = Direction::HigherBetter;
  double lo = 0.0;
  double hi = 1.0;
};

struct FitnessConfig {
  std::array<MetricSpec, kMetricCount> specs;
  MetricArray weights;

  /// Equal weights and the stock normalisation brackets.
  static FitnessConfig defaults();
  void validate() const;
};

double bars_per_year(std::int64_t bar_seconds);

MetricVector compute_metrics(const BacktestResult& result, double bars_per_year);
MetricVector compute_metrics(const Eigen::Ref<const Eigen::ArrayXd>& equity, std::span<const Trade> trades,
                             double bars_per_year);

/// Clamp to [lo, hi], map linearly onto [0, 1], flip for lower-better metrics.
double score_metric(double value, const MetricSpec& spec);
MetricArray score_metrics(const MetricVector& metrics, const FitnessConfig& config);

/// Weighted sum of metric scores, in [0, 1].
double fitness(const MetricVector& metrics, const FitnessConfig& config);

/// All eleven metrics followed by the five headline fields.
nlohmann::ordered_json metrics_to_json(const MetricVector& metrics);

struct HeadlineMetrics {
  double pnl_total;
  double returns_volatility;
  double sharpe_ratio;
  double sortino_ratio;
  double risk_return_ratio;
};

inline constexpr std::array<std::string_view, 5> kHeadlineNames = {
    "pnl_total", "returns_volatility", "sharpe_ratio", "sortino_ratio", "risk_return_ratio"};

HeadlineMetrics headline(const MetricVector& metrics);

}  // namespace evotrade
