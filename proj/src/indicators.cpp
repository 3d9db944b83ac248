#include "evotrade/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evotrade {

namespace {

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

IndicatorSeries undefined_series(Eigen::Index n, Eigen::Index warmup) {
  return {Eigen::ArrayXd::Constant(n, kUndefined), std::min(warmup, n)};
}

double rsi_value(double avg_gain, double avg_loss) {
  if (avg_loss == 0.0) return avg_gain == 0.0 ? 50.0 : 100.0;
  return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
}

}  // namespace

IndicatorSeries rsi(const Eigen::Ref<const Eigen::ArrayXd>& closes, int length) {
  if (length < 2) throw std::invalid_argument("rsi length must be >= 2");
  if (closes.size() == 0) throw std::invalid_argument("rsi needs at least one close");
  const Eigen::Index n = closes.size();
  auto out = undefined_series(n, length);
  if (out.insufficient_history()) return out;

  double avg_gain = 0.0;
  double avg_loss = 0.0;
  for (Eigen::Index i = 1; i <= length; ++i) {
    const double d = closes[i] - closes[i - 1];
    avg_gain += std::max(d, 0.0);
    avg_loss += std::max(-d, 0.0);
  }
  avg_gain /= length;
  avg_loss /= length;
  out.values[length] = rsi_value(avg_gain, avg_loss);
  for (Eigen::Index i = length + 1; i < n; ++i) {
    const double d = closes[i] - closes[i - 1];
    avg_gain = (avg_gain * (length - 1) + std::max(d, 0.0)) / length;
    avg_loss = (avg_loss * (length - 1) + std::max(-d, 0.0)) / length;
    out.values[i] = rsi_value(avg_gain, avg_loss);
  }
  return out;
}

IndicatorSeries sma(const Eigen::Ref<const Eigen::ArrayXd>& values, int length) {
  if (length < 1) throw std::invalid_argument("sma length must be >= 1");
  const Eigen::Index n = values.size();
  auto out = undefined_series(n, length - 1);
  // Each window is summed from scratch; a running sum drifts over long series.
  for (Eigen::Index i = length - 1; i < n; ++i) {
    out.values[i] = values.segment(i - length + 1, length).sum() / length;
  }
  return out;
}

IndicatorSeries moving_average(const Eigen::Ref<const Eigen::ArrayXd>& values, int length, AveragingKind kind) {
  switch (kind) {
    case AveragingKind::Simple:
      return sma(values, length);
  }
  throw std::invalid_argument("unknown averaging kind");
}

Eigen::ArrayXd true_range(const Eigen::Ref<const Eigen::ArrayXd>& high, const Eigen::Ref<const Eigen::ArrayXd>& low,
                          const Eigen::Ref<const Eigen::ArrayXd>& close) {
  const Eigen::Index n = high.size();
  if (low.size() != n || close.size() != n) throw std::invalid_argument("true_range: misaligned inputs");
  Eigen::ArrayXd tr(n);
  if (n == 0) return tr;
  tr[0] = high[0] - low[0];
  for (Eigen::Index i = 1; i < n; ++i) {
    tr[i] = std::max({high[i] - low[i], std::abs(high[i] - close[i - 1]), std::abs(low[i] - close[i - 1])});
  }
  return tr;
}

IndicatorSeries atr(const Eigen::Ref<const Eigen::ArrayXd>& high, const Eigen::Ref<const Eigen::ArrayXd>& low,
                    const Eigen::Ref<const Eigen::ArrayXd>& close, int length) {
  if (length < 1) throw std::invalid_argument("atr length must be >= 1");
  const Eigen::ArrayXd tr = true_range(high, low, close);
  const Eigen::Index n = tr.size();
  auto out = undefined_series(n, length - 1);
  if (out.insufficient_history()) return out;
  double avg = tr.head(length).sum() / length;
  out.values[length - 1] = avg;
  for (Eigen::Index i = length; i < n; ++i) {
    avg = (avg * (length - 1) + tr[i]) / length;
    out.values[i] = avg;
  }
  return out;
}

IndicatorSeries atr(const CandleSeries& series, int length) {
  return atr(series.highs(), series.lows(), series.closes(), length);
}

IndicatorSeries normalized_slope(const IndicatorSeries& ma, const IndicatorSeries& atr_series, int lookback) {
  if (lookback < 1) throw std::invalid_argument("slope lookback must be >= 1");
  if (ma.size() != atr_series.size()) throw std::invalid_argument("normalized_slope: misaligned inputs");
  const Eigen::Index n = ma.size();
  auto out = undefined_series(n, std::max(ma.warmup_len + lookback, atr_series.warmup_len));
  for (Eigen::Index i = out.warmup_len; i < n; ++i) {
    const double range = atr_series.values[i];
    out.values[i] = range > 0.0 ? (ma.values[i] - ma.values[i - lookback]) / range : 0.0;
  }
  return out;
}

}  // namespace evotrade
