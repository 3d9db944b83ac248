#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evotrade/market_data.hpp"
#include "evotrade/strategy.hpp"

namespace evotrade {

enum class FillPolicy { NextBarOpen };

struct ExecutionConfig {
  double initial_capital = 10'000.0;
  double fee_rate = 0.001;       // fraction of notional, per side
  double slippage_rate = 0.0;    // fraction of price, per side
  FillPolicy fill_policy = FillPolicy::NextBarOpen;

  void validate() const;
};

struct Trade {
  std::size_t entry_bar = 0;  // bar of the entry fill
  std::size_t exit_bar = 0;   // bar of the exit fill
  double entry_price = 0.0;   // after slippage
  double exit_price = 0.0;
  double quantity = 0.0;
  double pnl = 0.0;           // net of both fees
  double return_fraction = 0.0;
};

struct BacktestResult {
  std::vector<Trade> trades;
  Eigen::ArrayXd equity;          // one mark per bar, at the close
  Eigen::ArrayXd period_returns;  // equity[i] / equity[i-1] - 1, length n-1
  double final_pnl_fraction = 0.0;
  bool insufficient_history = false;
};

/// Long-only, full-capital execution of a precomputed signal stream.
///
/// Signals fill at the next bar's open. Buys are taken only while flat and
/// only if the fill bar is not the last bar; sells only while long. An open
/// position is force-closed at the last close, paying fee and slippage.
BacktestResult execute_signals(const CandleSeries& series, std::span<const SignalEvent> signals,
                               const ExecutionConfig& exec);

/// Runs the strategy for `gene` over the whole series.
BacktestResult run_backtest(const CandleSeries& series, const ParameterGene& gene, const ExecutionConfig& exec);

/// Concatenates segment curves, rescaling each so it starts at the previous
/// segment's final value.
Eigen::ArrayXd stitch_equity(std::span<const BacktestResult> segments);
Eigen::ArrayXd stitch_equity(std::span<const Eigen::ArrayXd> curves);

/// Equity sampled at the last bar of each whole day.
Eigen::ArrayXd daily_equity(const Eigen::Ref<const Eigen::ArrayXd>& equity, std::int64_t bars_per_day);

/// `day_index,total_assets` rows, one per whole day.
void write_equity_csv(std::ostream& out, const Eigen::Ref<const Eigen::ArrayXd>& equity, std::int64_t bars_per_day);

Eigen::ArrayXd period_returns(const Eigen::Ref<const Eigen::ArrayXd>& equity);

}  // namespace evotrade
