#include <doctest.h>

#include <cmath>
#include <vector>

#include "evotrade/indicators.hpp"
#include "evotrade/random.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace evotrade;

namespace {

std::vector<double> to_vec(const Eigen::ArrayXd& a) { return {a.data(), a.data() + a.size()}; }

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Max |a - b| over indices defined in both; NaN placement must agree exactly.
double max_abs_diff(const IndicatorSeries& got, const std::vector<double>& want) {
  REQUIRE(static_cast<std::size_t>(got.size()) == want.size());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    const bool want_defined = !std::isnan(want[static_cast<std::size_t>(i)]);
    REQUIRE(got.defined(i) == want_defined);
    if (want_defined) worst = std::max(worst, std::abs(got.values[i] - want[static_cast<std::size_t>(i)]));
  }
  return worst;
}

std::vector<double> random_closes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> c(n);
  double p = 100.0;
  for (auto& x : c) {
    p *= 1.0 + (rng.uniform() - 0.5) * 0.02;
    x = p;
  }
  return c;
}

}  // namespace

TEST_CASE("rsi degenerate inputs") {
  std::vector<double> rising(40);
  for (std::size_t i = 0; i < rising.size(); ++i) rising[i] = 10.0 + static_cast<double>(i);
  for (int len : {2, 6, 14}) {
    const auto r = rsi(to_array(rising), len);
    CHECK(r.warmup_len == len);
    for (Eigen::Index i = len; i < r.size(); ++i) CHECK(r.values[i] == 100.0);
  }
  const auto flat = rsi(Eigen::ArrayXd::Constant(30, 42.0), 6);
  for (Eigen::Index i = 6; i < 30; ++i) CHECK(flat.values[i] == 50.0);

  const auto short_series = rsi(Eigen::ArrayXd::Constant(6, 1.0), 6);
  CHECK(short_series.insufficient_history());
  CHECK(short_series.warmup_len == 6);

  CHECK_THROWS_AS(rsi(Eigen::ArrayXd::Constant(10, 1.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(rsi(Eigen::ArrayXd(0), 6), std::invalid_argument);
}

TEST_CASE("rsi matches the Wilder oracle") {
  const auto closes = random_closes(50, 11);
  CHECK(max_abs_diff(rsi(to_array(closes), 6), oracle::rsi(closes, 6)) <= 1e-12);
  const auto longer = random_closes(1'000, 12);
  for (int len : {2, 7, 28, 60}) CHECK(max_abs_diff(rsi(to_array(longer), len), oracle::rsi(longer, len)) <= 1e-12);
}

TEST_CASE("sma basics") {
  const Eigen::ArrayXd x = (Eigen::ArrayXd(4) << 1, 2, 3, 4).finished();
  const auto m = sma(x, 2);
  CHECK(m.warmup_len == 1);
  CHECK(std::isnan(m.values[0]));
  CHECK(m.values[1] == 1.5);
  CHECK(m.values[2] == 2.5);
  CHECK(m.values[3] == 3.5);

  const auto closes = random_closes(100, 3);
  const auto identity = sma(to_array(closes), 1);
  CHECK(identity.warmup_len == 0);
  CHECK((identity.values == to_array(closes)).all());

  const auto c = sma(Eigen::ArrayXd::Constant(20, 7.25), 5);
  for (Eigen::Index i = 4; i < 20; ++i) CHECK(c.values[i] == doctest::Approx(7.25).epsilon(1e-15));
  CHECK_THROWS_AS(sma(x, 0), std::invalid_argument);
  CHECK((moving_average(to_array(closes), 9).values.isNaN() == sma(to_array(closes), 9).values.isNaN()).all());
}

TEST_CASE("atr basics and oracle") {
  CandleSeries one;
  one.candles.push_back({0, 100, 101, 99, 100, 1});
  CHECK(true_range(one.highs(), one.lows(), one.closes())[0] == 2.0);

  const auto flat = atr(testing::constant(50), 14);
  for (Eigen::Index i = 13; i < 50; ++i) CHECK(flat.values[i] == 0.0);

  const auto s = testing::random_walk(1, 8);
  std::vector<double> h, l, c;
  for (std::size_t i = 0; i < 50; ++i) {
    h.push_back(s.candles[i].high);
    l.push_back(s.candles[i].low);
    c.push_back(s.candles[i].close);
  }
  CHECK(max_abs_diff(atr(to_array(h), to_array(l), to_array(c), 14), oracle::atr(h, l, c, 14)) <= 1e-12);
  CHECK_THROWS_AS(atr(s, 0), std::invalid_argument);
}

TEST_CASE("normalized slope") {
  const Eigen::Index n = 30;
  IndicatorSeries ramp{Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)), 0};
  IndicatorSeries range{Eigen::ArrayXd::Constant(n, 2.0), 0};
  const auto slope = normalized_slope(ramp, range, 3);
  CHECK(slope.warmup_len == 3);
  for (Eigen::Index i = 3; i < n; ++i) CHECK(slope.values[i] == doctest::Approx(1.5).epsilon(1e-14));

  IndicatorSeries flat{Eigen::ArrayXd::Constant(n, 5.0), 0};
  const auto zero = normalized_slope(flat, range, 4);
  for (Eigen::Index i = 4; i < n; ++i) CHECK(zero.values[i] == 0.0);

  range.values[10] = 0.0;
  CHECK(normalized_slope(ramp, range, 3).values[10] == 0.0);

  IndicatorSeries shorter{Eigen::ArrayXd::Constant(n - 1, 1.0), 0};
  CHECK_THROWS_AS(normalized_slope(ramp, shorter, 3), std::invalid_argument);

  // Warm-up is the later of the two inputs' plus the lookback.
  IndicatorSeries late{Eigen::ArrayXd::Constant(n, 1.0), 8};
  CHECK(normalized_slope(ramp, late, 3).warmup_len == 8);
  IndicatorSeries late_ma{ramp.values, 5};
  CHECK(normalized_slope(late_ma, range, 3).warmup_len == 8);
}

TEST_CASE("value ranges, shift invariance and scale covariance") {
  const auto s = testing::random_walk(2, 21);
  const Eigen::ArrayXd closes = s.closes();
  const auto r = rsi(closes, 9);
  for (Eigen::Index i = r.warmup_len; i < r.size(); ++i) {
    CHECK(r.values[i] >= 0.0);
    CHECK(r.values[i] <= 100.0);
  }
  const auto a = atr(s, 14);
  CHECK((a.values.tail(a.size() - a.warmup_len) >= 0.0).all());

  const auto shifted = rsi(closes + 1'000.0, 9);
  for (Eigen::Index i = r.warmup_len; i < r.size(); ++i) CHECK(shifted.values[i] == doctest::Approx(r.values[i]).epsilon(1e-9));

  const double k = 3.5;
  const Eigen::ArrayXd h = s.highs(), l = s.lows();
  const auto m = sma(closes, 20), mk = sma(closes * k, 20);
  const auto ak = atr(h * k, l * k, closes * k, 14);
  const auto slope = normalized_slope(m, a, 10), slope_k = normalized_slope(mk, ak, 10);
  for (Eigen::Index i = slope.warmup_len; i < slope.size(); ++i) {
    CHECK(mk.values[i] == doctest::Approx(k * m.values[i]).epsilon(1e-12));
    CHECK(ak.values[i] == doctest::Approx(k * a.values[i]).epsilon(1e-12));
    CHECK(std::abs(slope_k.values[i] - slope.values[i]) <= 1e-9);
  }
}

TEST_CASE("indicators are prefix-stable") {
  const auto s = testing::random_walk(1, 4);
  const Eigen::ArrayXd closes = s.closes();
  const Eigen::Index k = 150;
  const Eigen::ArrayXd head = closes.head(k);
  const auto full_rsi = rsi(closes, 14), part_rsi = rsi(head, 14);
  const auto full_sma = sma(closes, 30), part_sma = sma(head, 30);
  CandleSeries prefix = s;
  prefix.candles.resize(static_cast<std::size_t>(k));
  const auto full_atr = atr(s, 14), part_atr = atr(prefix, 14);
  for (Eigen::Index i = 0; i < k; ++i) {
    CHECK((std::isnan(part_rsi.values[i]) ? std::isnan(full_rsi.values[i]) : part_rsi.values[i] == full_rsi.values[i]));
    CHECK((std::isnan(part_sma.values[i]) ? std::isnan(full_sma.values[i]) : part_sma.values[i] == full_sma.values[i]));
    CHECK((std::isnan(part_atr.values[i]) ? std::isnan(full_atr.values[i]) : part_atr.values[i] == full_atr.values[i]));
  }
}
