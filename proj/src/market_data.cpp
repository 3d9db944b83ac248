#include "evotrade/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string_view>

namespace evotrade {

namespace {

template <typename Getter>
Eigen::ArrayXd column(const std::vector<Candle>& candles, Getter get) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(candles.size()));
  for (std::size_t i = 0; i < candles.size(); ++i) out[static_cast<Eigen::Index>(i)] = get(candles[i]);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Empty string when the candle satisfies every price invariant.
std::string candle_violation(const Candle& c) {
  if (!(c.open > 0.0 && c.high > 0.0 && c.low > 0.0 && c.close > 0.0)) return "non-positive price";
  if (!(c.volume >= 0.0)) return "negative volume";
  if (c.high < c.low) return "high<low";
  if (c.high < std::max(c.open, c.close)) return "high<max(open,close)";
  if (c.low > std::min(c.open, c.close)) return "low>min(open,close)";
  return {};
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

Eigen::ArrayXd CandleSeries::opens() const {
  return column(candles, [](const Candle& c) { return c.open; });
}
Eigen::ArrayXd CandleSeries::highs() const {
  return column(candles, [](const Candle& c) { return c.high; });
}
Eigen::ArrayXd CandleSeries::lows() const {
  return column(candles, [](const Candle& c) { return c.low; });
}
Eigen::ArrayXd CandleSeries::closes() const {
  return column(candles, [](const Candle& c) { return c.close; });
}

LoadedSeries parse_candles(std::istream& in, std::string symbol, std::int64_t bar_seconds) {
  if (bar_seconds <= 0 || kSecondsPerDay % bar_seconds != 0) {
    throw std::invalid_argument("bar_seconds must divide one day");
  }
  LoadedSeries loaded;
  loaded.series.symbol = std::move(symbol);
  loaded.series.bar_seconds = bar_seconds;
  auto& candles = loaded.series.candles;
  auto& report = loaded.report;

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (!have_header) {
      if (text.empty()) continue;
      if (text != "timestamp,open,high,low,close,volume") {
        throw DataError(DataError::Kind::MalformedHeader,
                        "expected header 'timestamp,open,high,low,close,volume', got '" + std::string(text) + "'");
      }
      have_header = true;
      continue;
    }
    if (text.empty()) continue;
    ++report.rows_read;

    auto reject = [&](std::string reason) {
      ++report.rows_rejected;
      report.rejections.push_back({line_no, std::move(reason)});
    };

    const auto fields = split(text);
    if (fields.size() != 6) {
      reject("expected 6 fields");
      continue;
    }
    const auto ts = parse_number<std::int64_t>(fields[0]);
    std::optional<double> values[5];
    bool numeric = ts.has_value();
    for (int k = 0; k < 5 && numeric; ++k) {
      values[k] = parse_number<double>(fields[static_cast<std::size_t>(k) + 1]);
      numeric = values[k].has_value();
    }
    if (!numeric) {
      reject("unparseable field");
      continue;
    }
    const Candle candle{*ts, *values[0], *values[1], *values[2], *values[3], *values[4]};
    if (auto why = candle_violation(candle); !why.empty()) {
      reject(std::move(why));
      continue;
    }
    if (!candles.empty()) {
      const auto prev = candles.back();
      const auto delta = candle.timestamp - prev.timestamp;
      if (delta <= 0) {
        reject("non-increasing timestamp");
        continue;
      }
      if (delta % bar_seconds != 0) {
        reject("off-grid timestamp");
        continue;
      }
      const auto missing = delta / bar_seconds - 1;
      if (missing > kMaxGapBars) {
        throw DataError(DataError::Kind::GapTooLong,
                        "gap of " + std::to_string(missing) + " bars before line " + std::to_string(line_no) +
                            " exceeds the " + std::to_string(kMaxGapBars) + "-bar fill limit");
      }
      for (std::int64_t k = 1; k <= missing; ++k) {
        candles.push_back({prev.timestamp + k * bar_seconds, prev.close, prev.close, prev.close, prev.close, 0.0});
        ++report.gaps_filled;
      }
    }
    candles.push_back(candle);
    ++report.rows_accepted;
  }
  if (!have_header) throw DataError(DataError::Kind::MalformedHeader, "missing CSV header");
  if (candles.empty()) throw DataError(DataError::Kind::EmptyAfterValidation, "no valid rows");
  return loaded;
}

LoadedSeries load_candles(const std::filesystem::path& path, std::string symbol, std::int64_t bar_seconds) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::FileNotFound, "cannot open " + path.string());
  return parse_candles(in, std::move(symbol), bar_seconds);
}

void write_candles(std::ostream& out, const CandleSeries& series) {
  std::string buffer = "timestamp,open,high,low,close,volume\n";
  for (const auto& c : series.candles) {
    buffer += std::to_string(c.timestamp);
    for (double v : {c.open, c.high, c.low, c.close, c.volume}) {
      buffer += ',';
      append_double(buffer, v);
    }
    buffer += '\n';
  }
  out << buffer;
}

std::int64_t day_count(const CandleSeries& series) {
  return static_cast<std::int64_t>(series.size()) / series.bars_per_day();
}

CandleSeries slice_window(const CandleSeries& series, std::int64_t start_day, std::int64_t n_days) {
  const auto days = day_count(series);
  if (start_day < 0 || n_days < 0 || start_day + n_days > days) {
    throw DataError(DataError::Kind::OutOfRange, "window [" + std::to_string(start_day) + ", " +
                                                     std::to_string(start_day + n_days) + ") outside " +
                                                     std::to_string(days) + " available days");
  }
  const auto bpd = series.bars_per_day();
  CandleSeries out;
  out.symbol = series.symbol;
  out.bar_seconds = series.bar_seconds;
  out.candles.assign(series.candles.begin() + start_day * bpd, series.candles.begin() + (start_day + n_days) * bpd);
  return out;
}

void check_series(const CandleSeries& series) {
  if (series.empty()) throw DataError(DataError::Kind::InvalidSeries, "empty series");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& c = series.candles[i];
    if (auto why = candle_violation(c); !why.empty()) {
      throw DataError(DataError::Kind::InvalidSeries, "candle " + std::to_string(i) + ": " + why);
    }
    if (i > 0 && c.timestamp - series.candles[i - 1].timestamp != series.bar_seconds) {
      throw DataError(DataError::Kind::InvalidSeries, "candle " + std::to_string(i) + ": irregular spacing");
    }
  }
}

}  // namespace evotrade
