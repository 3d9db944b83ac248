#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "evotrade/backtest.hpp"
#include "evotrade/evolution.hpp"
#include "support/synthetic.hpp"

using namespace evotrade;

namespace {

std::vector<SignalEvent> random_signals(std::size_t n, Rng& rng) {
  std::vector<SignalEvent> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rng.bernoulli(0.05)) continue;
    out.push_back({i, rng.bernoulli(0.5) ? Side::Buy : Side::Sell, std::nullopt});
  }
  return out;
}

ExecutionConfig frictionless() {
  ExecutionConfig exec;
  exec.fee_rate = 0.0;
  return exec;
}

}  // namespace

TEST_CASE("constant prices leave equity flat") {
  const auto result = run_backtest(testing::constant(800), default_gene(), ExecutionConfig{});
  CHECK(result.trades.empty());
  CHECK((result.equity == 10'000.0).all());
  CHECK(result.final_pnl_fraction == 0.0);
  CHECK_FALSE(result.insufficient_history);
}

TEST_CASE("single trade fee arithmetic") {
  const auto series = testing::from_closes({100, 100, 100, 105, 110, 110, 110}, 0);
  const std::vector<SignalEvent> signals{{1, Side::Buy, {}}, {4, Side::Sell, {}}};
  const auto result = execute_signals(series, signals, ExecutionConfig{});
  REQUIRE(result.trades.size() == 1);
  const auto& t = result.trades[0];
  CHECK(t.entry_bar == 2);
  CHECK(t.exit_bar == 5);
  CHECK(t.entry_price == 100.0);
  CHECK(t.exit_price == 110.0);
  const double expected = (110.0 * 0.999) / (100.0 * 1.001) - 1.0;
  CHECK(std::abs(t.return_fraction - expected) <= 1e-9);
  CHECK(std::abs(t.return_fraction - 0.0978021978021978) <= 1e-9);
  CHECK(std::abs(result.final_pnl_fraction - expected) <= 1e-12);
}

TEST_CASE("slippage moves both fills against the trader") {
  const auto series = testing::from_closes({100, 100, 100, 105, 110, 110, 110}, 0);
  const std::vector<SignalEvent> signals{{1, Side::Buy, {}}, {4, Side::Sell, {}}};
  ExecutionConfig exec = frictionless();
  exec.slippage_rate = 0.01;
  const auto t = execute_signals(series, signals, exec).trades.at(0);
  CHECK(t.entry_price == doctest::Approx(101.0).epsilon(1e-15));
  CHECK(t.exit_price == doctest::Approx(108.9).epsilon(1e-15));
}

TEST_CASE("open position is force-closed at the last close") {
  const auto series = testing::from_closes({100, 100, 101, 102, 103, 104}, 0);
  const std::vector<SignalEvent> signals{{1, Side::Buy, {}}};
  const auto result = execute_signals(series, signals, frictionless());
  REQUIRE(result.trades.size() == 1);
  CHECK(result.trades[0].exit_bar == 5);
  CHECK(result.trades[0].exit_price == 104.0);
}

TEST_CASE("signals without a later bar to fill on are ignored") {
  const auto series = testing::from_closes({100, 101, 102, 103}, 0);
  // A buy on the second-to-last bar would fill on the last bar with no room to exit.
  CHECK(execute_signals(series, std::vector<SignalEvent>{{2, Side::Buy, {}}}, ExecutionConfig{}).trades.empty());
  CHECK(execute_signals(series, std::vector<SignalEvent>{{3, Side::Buy, {}}}, ExecutionConfig{}).trades.empty());
  // Suppressed buys never trade.
  CHECK(execute_signals(series, std::vector<SignalEvent>{{0, Side::Buy, Filter::Sf}}, ExecutionConfig{}).trades.empty());
}

TEST_CASE("short series is flagged, not an error") {
  const auto result = run_backtest(testing::random_walk(1, 1), default_gene(), ExecutionConfig{});
  CHECK(result.insufficient_history == (288 < signal_warmup(default_gene()) + 2));
  const auto tiny = run_backtest(testing::constant(20), default_gene(), ExecutionConfig{});
  CHECK(tiny.insufficient_history);
  CHECK(tiny.trades.empty());
  CHECK(tiny.equity.size() == 20);
}

TEST_CASE("execution config validation") {
  ExecutionConfig exec;
  exec.initial_capital = 0.0;
  CHECK_THROWS_AS(exec.validate(), std::invalid_argument);
  exec = ExecutionConfig{};
  exec.fee_rate = 0.05;
  CHECK_THROWS_AS(exec.validate(), std::invalid_argument);
  exec = ExecutionConfig{};
  exec.slippage_rate = -0.001;
  CHECK_THROWS_AS(exec.validate(), std::invalid_argument);
}

TEST_CASE("result invariants and zero-fee cash conservation on random signals") {
  Rng rng(2024);
  for (std::uint64_t fixture = 0; fixture < 100; ++fixture) {
    const auto series = testing::random_walk(1, fixture);
    const auto signals = random_signals(series.size(), rng);
    const auto result = execute_signals(series, signals, frictionless());

    REQUIRE(result.equity.size() == static_cast<Eigen::Index>(series.size()));
    CHECK(result.equity[0] == 10'000.0);
    CHECK(std::abs(result.final_pnl_fraction - (result.equity[result.equity.size() - 1] / result.equity[0] - 1.0)) <=
          1e-12);
    for (Eigen::Index i = 1; i < result.equity.size(); ++i) {
      CHECK(result.period_returns[i - 1] == result.equity[i] / result.equity[i - 1] - 1.0);
    }

    double cash_before = 10'000.0;
    for (const auto& t : result.trades) {
      CHECK(t.exit_bar > t.entry_bar);
      CHECK(t.quantity > 0.0);
      const double change = t.pnl;
      const double expected = t.quantity * (t.exit_price - t.entry_price);
      // Exact up to the rounding of quantity = cash / price.
      CHECK(std::abs(change - expected) <= 4 * std::numeric_limits<double>::epsilon() * cash_before);
      cash_before += change;
    }
  }
}

TEST_CASE("no lookahead: truncation preserves the prefix") {
  const auto space = default_space();
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto series = testing::random_walk(3, seed + 40);
    const auto gene = random_gene(space, rng);
    const auto full = run_backtest(series, gene, ExecutionConfig{});
    for (std::size_t k : {300UL, 500UL, 700UL}) {
      auto prefix = series;
      prefix.candles.resize(k + 1);
      const auto cut = run_backtest(prefix, gene, ExecutionConfig{});
      // Bars before k carry no force-close and no fill driven by data past k.
      CHECK((cut.equity.head(static_cast<Eigen::Index>(k)) == full.equity.head(static_cast<Eigen::Index>(k))).all());
    }
  }
}

TEST_CASE("higher fees never raise PnL") {
  const auto space = default_space();
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto series = testing::random_walk(2, seed + 100);
    const auto gene = random_gene(space, rng);
    double previous = std::numeric_limits<double>::infinity();
    std::size_t trades = 0;
    for (double fee : {0.0, 0.0005, 0.001, 0.004}) {
      ExecutionConfig exec;
      exec.fee_rate = fee;
      const auto r = run_backtest(series, gene, exec);
      trades = r.trades.size();
      if (trades > 0) {
        CHECK(r.final_pnl_fraction < previous);
      } else {
        CHECK(r.final_pnl_fraction == 0.0);
      }
      previous = r.final_pnl_fraction;
    }
  }
}

TEST_CASE("backtest is deterministic") {
  const auto series = testing::random_walk(2, 77);
  const auto a = run_backtest(series, default_gene(), ExecutionConfig{});
  const auto b = run_backtest(series, default_gene(), ExecutionConfig{});
  CHECK((a.equity == b.equity).all());
  CHECK(a.trades.size() == b.trades.size());
}

TEST_CASE("stitching equity segments") {
  Eigen::ArrayXd a(3), b(2), flat(3);
  a << 100, 105, 110;
  b << 50, 55;
  flat << 7, 7, 7;

  const std::vector<Eigen::ArrayXd> one{a};
  CHECK((stitch_equity(std::span<const Eigen::ArrayXd>(one)) == a).all());

  const std::vector<Eigen::ArrayXd> two{a, b};
  const auto s = stitch_equity(std::span<const Eigen::ArrayXd>(two));
  REQUIRE(s.size() == 5);
  CHECK(s[3] == 110.0);
  CHECK(s[4] / s[0] - 1.0 == doctest::Approx(1.1 * 1.1 - 1.0).epsilon(1e-14));
  CHECK(s[4] / s[0] - 1.0 == doctest::Approx(0.21).epsilon(1e-14));

  const std::vector<Eigen::ArrayXd> with_flat{a, flat};
  const auto f = stitch_equity(std::span<const Eigen::ArrayXd>(with_flat));
  CHECK((f.tail(3) == 110.0).all());

  CHECK_THROWS_AS(stitch_equity(std::span<const Eigen::ArrayXd>()), std::invalid_argument);
}

TEST_CASE("equity CSV samples the last bar of each day") {
  Eigen::ArrayXd eq = Eigen::ArrayXd::LinSpaced(288 * 2 + 5, 1.0, 2.0);
  std::ostringstream out;
  write_equity_csv(out, eq, 288);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "day_index,total_assets");
  std::getline(in, line);
  CHECK(line.starts_with("0,"));
  CHECK(std::stod(line.substr(2)) == eq[287]);
  std::getline(in, line);
  CHECK(std::stod(line.substr(2)) == eq[575]);
  CHECK_FALSE(std::getline(in, line));
}
