#include "evotrade/backtest.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>
#include <string>

namespace evotrade {

void ExecutionConfig::validate() const {
  if (!(initial_capital > 0.0)) throw std::invalid_argument("initial_capital must be positive");
  if (!(fee_rate >= 0.0 && fee_rate < 0.05)) throw std::invalid_argument("fee_rate must lie in [0, 0.05)");
  if (!(slippage_rate >= 0.0 && slippage_rate < 0.05)) {
    throw std::invalid_argument("slippage_rate must lie in [0, 0.05)");
  }
}

Eigen::ArrayXd period_returns(const Eigen::Ref<const Eigen::ArrayXd>& equity) {
  const Eigen::Index n = equity.size();
  if (n < 2) return Eigen::ArrayXd(0);
  return equity.tail(n - 1) / equity.head(n - 1) - 1.0;
}

BacktestResult execute_signals(const CandleSeries& series, std::span<const SignalEvent> signals,
                               const ExecutionConfig& exec) {
  exec.validate();
  if (series.empty()) throw std::invalid_argument("cannot backtest an empty series");
  const std::size_t n = series.size();
  const auto& bars = series.candles;

  BacktestResult result;
  result.equity.resize(static_cast<Eigen::Index>(n));

  enum class Pending { None, Buy, Sell };
  Pending pending = Pending::None;
  double cash = exec.initial_capital;
  double quantity = 0.0;
  Trade open{};
  double entry_cash = 0.0;

  auto close_position = [&](std::size_t bar, double raw_price) {
    const double price = raw_price * (1.0 - exec.slippage_rate);
    const double proceeds = quantity * price;
    cash = proceeds - proceeds * exec.fee_rate;
    open.exit_bar = bar;
    open.exit_price = price;
    open.pnl = cash - entry_cash;
    open.return_fraction = cash / entry_cash - 1.0;
    result.trades.push_back(open);
    quantity = 0.0;
  };

  std::size_t next_signal = 0;
  for (std::size_t bar = 0; bar < n; ++bar) {
    if (pending == Pending::Buy) {
      const double price = bars[bar].open * (1.0 + exec.slippage_rate);
      entry_cash = cash;
      quantity = cash / (price * (1.0 + exec.fee_rate));
      cash = 0.0;
      open = Trade{bar, 0, price, 0.0, quantity, 0.0, 0.0};
    } else if (pending == Pending::Sell) {
      close_position(bar, bars[bar].open);
    }
    pending = Pending::None;

    if (bar + 1 == n && quantity > 0.0) close_position(bar, bars[bar].close);
    result.equity[static_cast<Eigen::Index>(bar)] = cash + quantity * bars[bar].close;

    while (next_signal < signals.size() && signals[next_signal].bar_index < bar) ++next_signal;
    if (next_signal < signals.size() && signals[next_signal].bar_index == bar) {
      const auto& sig = signals[next_signal];
      if (sig.side == Side::Buy && !sig.suppressed_by && quantity == 0.0 && bar + 2 < n) {
        pending = Pending::Buy;
      } else if (sig.side == Side::Sell && quantity > 0.0 && bar + 1 < n) {
        pending = Pending::Sell;
      }
    }
  }

  result.period_returns = period_returns(result.equity);
  result.final_pnl_fraction = result.equity[static_cast<Eigen::Index>(n) - 1] / result.equity[0] - 1.0;
  return result;
}

BacktestResult run_backtest(const CandleSeries& series, const ParameterGene& gene, const ExecutionConfig& exec) {
  // A signal needs a later bar to fill and another to exit on.
  if (series.size() < signal_warmup(gene) + 2) {
    auto result = execute_signals(series, {}, exec);
    result.insufficient_history = true;
    return result;
  }
  const auto signals = generate_signals(series, gene);
  return execute_signals(series, signals, exec);
}

Eigen::ArrayXd stitch_equity(std::span<const Eigen::ArrayXd> curves) {
  if (curves.empty()) throw std::invalid_argument("stitch_equity needs at least one segment");
  Eigen::Index total = 0;
  for (const auto& c : curves) {
    if (c.size() == 0) throw std::invalid_argument("stitch_equity: empty segment");
    total += c.size();
  }
  Eigen::ArrayXd out(total);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    if (k == 0) {
      out.segment(at, c.size()) = c;
    } else {
      out.segment(at, c.size()) = c / c[0] * out[at - 1];
    }
    at += c.size();
  }
  return out;
}

Eigen::ArrayXd stitch_equity(std::span<const BacktestResult> segments) {
  std::vector<Eigen::ArrayXd> curves;
  curves.reserve(segments.size());
  for (const auto& s : segments) curves.push_back(s.equity);
  return stitch_equity(std::span<const Eigen::ArrayXd>(curves));
}

Eigen::ArrayXd daily_equity(const Eigen::Ref<const Eigen::ArrayXd>& equity, std::int64_t bars_per_day) {
  const Eigen::Index days = equity.size() / bars_per_day;
  Eigen::ArrayXd out(days);
  for (Eigen::Index d = 0; d < days; ++d) out[d] = equity[(d + 1) * bars_per_day - 1];
  return out;
}

void write_equity_csv(std::ostream& out, const Eigen::Ref<const Eigen::ArrayXd>& equity, std::int64_t bars_per_day) {
  const Eigen::ArrayXd daily = daily_equity(equity, bars_per_day);
  std::string buffer = "day_index,total_assets\n";
  char num[64];
  for (Eigen::Index d = 0; d < daily.size(); ++d) {
    buffer += std::to_string(d);
    buffer += ',';
    auto [ptr, ec] = std::to_chars(num, num + sizeof(num), daily[d]);
    buffer.append(num, ptr);
    buffer += '\n';
  }
  out << buffer;
}

}  // namespace evotrade
