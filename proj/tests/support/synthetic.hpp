#pragma once

// Deterministic synthetic candle fixtures for tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "evotrade/market_data.hpp"
#include "evotrade/random.hpp"

namespace evotrade::testing {

inline constexpr std::int64_t kEpoch = 1'735'084'800;  // 2024-12-25T00:00:00Z

/// Builds OHLC bars around a close path. Each bar opens at the previous
/// close and its wicks extend by a random fraction of `wick`.
inline CandleSeries from_closes(const std::vector<double>& closes, std::uint64_t seed, double wick = 0.0005,
                                std::string symbol = "SYN") {
  Rng rng(seed ^ 0xC0FFEEULL);
  CandleSeries s;
  s.symbol = std::move(symbol);
  s.bar_seconds = 300;
  s.candles.reserve(closes.size());
  for (std::size_t i = 0; i < closes.size(); ++i) {
    const double close = closes[i];
    const double open = i == 0 ? close : closes[i - 1];
    const double high = std::max(open, close) * (1.0 + wick * rng.uniform());
    const double low = std::min(open, close) * (1.0 - wick * rng.uniform());
    s.candles.push_back({kEpoch + static_cast<std::int64_t>(i) * 300, open, high, low, close, 1.0 + rng.uniform()});
  }
  return s;
}

/// Geometric random walk with slowly switching drift regimes.
inline CandleSeries random_walk(std::int64_t days, std::uint64_t seed, double vol = 0.0015) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::mt19937_64 gauss_engine(seed + 17);
  const auto n = static_cast<std::size_t>(days * 288);
  std::vector<double> closes(n);
  double price = 2'000.0;
  double drift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2'000 == 0) drift = (rng.uniform() - 0.5) * 2e-4;
    price *= std::exp(drift + vol * normal(gauss_engine));
    closes[i] = price;
  }
  return from_closes(closes, seed);
}

/// Sinusoidal cycle plus Gaussian noise; a known cycle length gives the dual
/// RSI crossover a clear optimum.
inline CandleSeries sinusoid(std::int64_t days, std::uint64_t seed, double period_bars = 180.0,
                             double amplitude = 0.01, double noise = 0.0006) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::mt19937_64 gauss_engine(seed);
  const auto n = static_cast<std::size_t>(days * 288);
  std::vector<double> closes(n);
  constexpr double kTau = 6.283185307179586;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    closes[i] = 100.0 * (1.0 + amplitude * std::sin(kTau * t / period_bars)) * (1.0 + noise * normal(gauss_engine));
  }
  return from_closes(closes, seed, 0.0003);
}

inline CandleSeries constant(std::size_t bars, double price = 100.0) {
  CandleSeries s;
  s.symbol = "FLAT";
  for (std::size_t i = 0; i < bars; ++i) {
    s.candles.push_back({kEpoch + static_cast<std::int64_t>(i) * 300, price, price, price, price, 0.0});
  }
  return s;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("evotrade_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_series_csv(const std::filesystem::path& path, const CandleSeries& series) {
  std::ofstream out(path, std::ios::binary);
  write_candles(out, series);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace evotrade::testing
