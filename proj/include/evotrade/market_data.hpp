#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace evotrade {

inline constexpr std::int64_t kSecondsPerDay = 86'400;
inline constexpr std::int64_t kDefaultBarSeconds = 300;
/// Longest run of missing bars that is forward-filled; longer runs are fatal.
inline constexpr std::int64_t kMaxGapBars = 12;

struct Candle {
  std::int64_t timestamp = 0;  // UTC epoch seconds
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;

  bool operator==(const Candle&) const = default;
};

struct CandleSeries {
  std::string symbol;
  std::int64_t bar_seconds = kDefaultBarSeconds;
  std::vector<Candle> candles;

  std::size_t size() const { return candles.size(); }
  bool empty() const { return candles.empty(); }
  std::int64_t bars_per_day() const { return kSecondsPerDay / bar_seconds; }

  Eigen::ArrayXd opens() const;
  Eigen::ArrayXd highs() const;
  Eigen::ArrayXd lows() const;
  Eigen::ArrayXd closes() const;

  bool operator==(const CandleSeries&) const = default;
};

class DataError : public std::runtime_error {
 public:
  enum class Kind {
    FileNotFound,
    MalformedHeader,
    GapTooLong,
    EmptyAfterValidation,
    OutOfRange,
    InsufficientData,
    InvalidSeries,
  };

  DataError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct RowRejection {
  std::size_t line = 0;  // 1-based line number in the source, header is line 1
  std::string reason;
};

struct ValidationReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::size_t rows_rejected = 0;
  std::size_t gaps_filled = 0;  // synthetic bars, not counted in rows_read
  std::vector<RowRejection> rejections;
};

struct LoadedSeries {
  CandleSeries series;
  ValidationReport report;
};

/// Parses `timestamp,open,high,low,close,volume` CSV. Rows violating the
/// candle invariants are rejected and listed in the report; isolated missing
/// bars are forward-filled from the previous close.
LoadedSeries parse_candles(std::istream& in, std::string symbol,
                           std::int64_t bar_seconds = kDefaultBarSeconds);

LoadedSeries load_candles(const std::filesystem::path& path, std::string symbol,
                          std::int64_t bar_seconds = kDefaultBarSeconds);

/// Writes the series in the ingestion format with shortest round-trip decimals.
void write_candles(std::ostream& out, const CandleSeries& series);

/// Whole trading days: floor(candles / bars-per-day).
std::int64_t day_count(const CandleSeries& series);

/// Candles whose day index lies in [start_day, start_day + n_days).
CandleSeries slice_window(const CandleSeries& series, std::int64_t start_day, std::int64_t n_days);

/// Throws DataError(InvalidSeries) if any candle or spacing invariant fails.
void check_series(const CandleSeries& series);

}  // namespace evotrade
