#include "evotrade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evotrade {

namespace {

constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "total_pnl_fraction", "annualized_return", "returns_volatility", "sharpe_ratio",
    "sortino_ratio",      "risk_return_ratio", "win_rate",           "max_drawdown",
    "profit_factor",      "trade_count",       "avg_trade_pnl_fraction",
};

double max_drawdown(const Eigen::Ref<const Eigen::ArrayXd>& equity) {
  double peak = equity.size() > 0 ? equity[0] : 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < equity.size(); ++i) {
    peak = std::max(peak, equity[i]);
    if (peak > 0.0) worst = std::max(worst, (peak - equity[i]) / peak);
  }
  return std::min(worst, 1.0);
}

}  // namespace

std::string_view metric_name(Metric metric) { return kMetricNames[index_of(metric)]; }

MetricArray MetricVector::as_array() const {
  MetricArray a;
  a << total_pnl_fraction, annualized_return, returns_volatility, sharpe_ratio, sortino_ratio, risk_return_ratio,
      win_rate, max_drawdown, profit_factor, trade_count, avg_trade_pnl_fraction;
  return a;
}

MetricVector MetricVector::from_array(const MetricArray& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]};
}

FitnessConfig FitnessConfig::defaults() {
  using enum Direction;
  FitnessConfig cfg;
  cfg.specs = {{
      {HigherBetter, -0.2, 0.2},    // total_pnl_fraction
      {HigherBetter, -1.0, 3.0},    // annualized_return
      {LowerBetter, 0.0, 1.0},      // returns_volatility
      {HigherBetter, -1.0, 4.0},    // sharpe_ratio
      {HigherBetter, -1.0, 8.0},    // sortino_ratio
      {LowerBetter, 0.0, 2.0},      // risk_return_ratio
      {HigherBetter, 0.0, 1.0},     // win_rate
      {LowerBetter, 0.0, 0.5},      // max_drawdown
      {HigherBetter, 0.0, 3.0},     // profit_factor
      {HigherBetter, 0.0, 300.0},   // trade_count
      {HigherBetter, -0.01, 0.01},  // avg_trade_pnl_fraction
  }};
  cfg.weights = MetricArray::Constant(1.0 / kMetricCount);
  return cfg;
}

void FitnessConfig::validate() const {
  for (std::size_t j = 0; j < kMetricCount; ++j) {
    if (!(specs[j].lo < specs[j].hi)) {
      throw std::invalid_argument("metric spec for " + std::string(kMetricNames[j]) + " needs lo < hi");
    }
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw std::invalid_argument("fitness weights must be finite and non-negative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw std::invalid_argument("fitness weights must sum to 1");
}

double bars_per_year(std::int64_t bar_seconds) {
  return 365.0 * static_cast<double>(kSecondsPerDay) / static_cast<double>(bar_seconds);
}

MetricVector compute_metrics(const Eigen::Ref<const Eigen::ArrayXd>& equity, std::span<const Trade> trades,
                             double periods_per_year) {
  MetricVector m;
  if (equity.size() == 0) return m;
  const Eigen::ArrayXd r = period_returns(equity);
  const auto n = static_cast<double>(r.size());

  m.total_pnl_fraction = equity[equity.size() - 1] / equity[0] - 1.0;
  if (r.size() > 0) {
    const double growth = 1.0 + m.total_pnl_fraction;
    m.annualized_return = growth > 0.0 ? std::pow(growth, periods_per_year / n) - 1.0 : -1.0;
  }

  const double annualizer = std::sqrt(periods_per_year);
  if (r.size() >= 2) {
    const double mean = r.mean();
    const double sd = std::sqrt((r - mean).square().sum() / (n - 1.0));
    m.returns_volatility = sd * annualizer;
    if (sd > 0.0) m.sharpe_ratio = mean / sd * annualizer;
    const double downside = std::sqrt(r.min(0.0).square().sum() / n);
    if (downside > 0.0) m.sortino_ratio = mean / downside * annualizer;
  }

  m.max_drawdown = max_drawdown(equity);
  m.risk_return_ratio = m.max_drawdown / std::max(std::abs(m.annualized_return), 1e-9);

  m.trade_count = static_cast<double>(trades.size());
  if (!trades.empty()) {
    double wins = 0.0, gross_profit = 0.0, gross_loss = 0.0, sum_returns = 0.0;
    for (const auto& t : trades) {
      if (t.pnl > 0.0) {
        wins += 1.0;
        gross_profit += t.pnl;
      } else {
        gross_loss -= t.pnl;
      }
      sum_returns += t.return_fraction;
    }
    m.win_rate = wins / m.trade_count;
    m.avg_trade_pnl_fraction = sum_returns / m.trade_count;
    if (gross_loss > 0.0) {
      m.profit_factor = gross_profit / gross_loss;
    } else if (gross_profit > 0.0) {
      m.profit_factor = kProfitFactorCap;
    }
  }
  return m;
}

MetricVector compute_metrics(const BacktestResult& result, double periods_per_year) {
  return compute_metrics(result.equity, result.trades, periods_per_year);
}

double score_metric(double value, const MetricSpec& spec) {
  const double mapped = (std::clamp(value, spec.lo, spec.hi) - spec.lo) / (spec.hi - spec.lo);
  return spec.direction == Direction::LowerBetter ? 1.0 - mapped : mapped;
}

MetricArray score_metrics(const MetricVector& metrics, const FitnessConfig& config) {
  const MetricArray values = metrics.as_array();
  MetricArray scores;
  for (std::size_t j = 0; j < kMetricCount; ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    scores[idx] = score_metric(values[idx], config.specs[j]);
  }
  return scores;
}

double fitness(const MetricVector& metrics, const FitnessConfig& config) {
  // Weights may sum to 1 +/- 1e-12, hence the clamp.
  return std::clamp(config.weights.dot(score_metrics(metrics, config)), 0.0, 1.0);
}

HeadlineMetrics headline(const MetricVector& m) {
  return {m.total_pnl_fraction, m.returns_volatility, m.sharpe_ratio, m.sortino_ratio, m.risk_return_ratio};
}

nlohmann::ordered_json metrics_to_json(const MetricVector& metrics) {
  nlohmann::ordered_json j;
  const MetricArray values = metrics.as_array();
  for (std::size_t k = 0; k < kMetricCount; ++k) j[std::string(kMetricNames[k])] = values[static_cast<Eigen::Index>(k)];
  const auto h = headline(metrics);
  const std::array<double, 5> hv = {h.pnl_total, h.returns_volatility, h.sharpe_ratio, h.sortino_ratio,
                                    h.risk_return_ratio};
  nlohmann::ordered_json head;
  for (std::size_t k = 0; k < hv.size(); ++k) head[std::string(kHeadlineNames[k])] = hv[k];
  j["headline"] = head;
  return j;
}

}  // namespace evotrade
