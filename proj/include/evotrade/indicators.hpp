#pragma once

#include <Eigen/Core>

#include "evotrade/market_data.hpp"

namespace evotrade {

/// Indicator values aligned 1:1 with the source bars. Entries before
/// `warmup_len` are undefined and hold NaN.
struct IndicatorSeries {
  Eigen::ArrayXd values;
  Eigen::Index warmup_len = 0;

  Eigen::Index size() const { return values.size(); }
  bool defined(Eigen::Index i) const { return i >= warmup_len && i < values.size(); }
  /// True when the source was too short to produce any defined value.
  bool insufficient_history() const { return warmup_len >= values.size(); }
};

enum class AveragingKind { Simple };

/// Wilder RSI. The first averages are the simple means of the first `length`
/// deltas; 50 when both averages are zero.
IndicatorSeries rsi(const Eigen::Ref<const Eigen::ArrayXd>& closes, int length);

IndicatorSeries sma(const Eigen::Ref<const Eigen::ArrayXd>& values, int length);

IndicatorSeries moving_average(const Eigen::Ref<const Eigen::ArrayXd>& values, int length,
                               AveragingKind kind = AveragingKind::Simple);

/// max(high-low, |high-prev close|, |low-prev close|); bar 0 uses high-low.
Eigen::ArrayXd true_range(const Eigen::Ref<const Eigen::ArrayXd>& high, const Eigen::Ref<const Eigen::ArrayXd>& low,
                          const Eigen::Ref<const Eigen::ArrayXd>& close);

/// Wilder-smoothed true range seeded with the mean of the first `length` values.
IndicatorSeries atr(const Eigen::Ref<const Eigen::ArrayXd>& high, const Eigen::Ref<const Eigen::ArrayXd>& low,
                    const Eigen::Ref<const Eigen::ArrayXd>& close, int length);

IndicatorSeries atr(const CandleSeries& series, int length);

/// (ma[i] - ma[i-lookback]) / atr[i], or 0 where atr[i] == 0.
IndicatorSeries normalized_slope(const IndicatorSeries& ma, const IndicatorSeries& atr, int lookback);

}  // namespace evotrade
