#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evotrade/market_data.hpp"

namespace evotrade {

/// The nine tunable fields of the dual-RSI scalping strategy, in canonical order.
enum class GeneField : std::size_t {
  RsiSlowLength,
  RsiFastLength,
  FmafEnabled,
  SmafEnabled,
  SfEnabled,
  FmaLength,
  SmaLength,
  SlopeLookback,
  SlopeThreshold,
};

inline constexpr std::size_t kGeneFieldCount = 9;

inline constexpr std::array<GeneField, kGeneFieldCount> kGeneFields = {
    GeneField::RsiSlowLength, GeneField::RsiFastLength, GeneField::FmafEnabled,
    GeneField::SmafEnabled,   GeneField::SfEnabled,     GeneField::FmaLength,
    GeneField::SmaLength,     GeneField::SlopeLookback, GeneField::SlopeThreshold,
};

std::string_view field_name(GeneField field);
bool is_switch(GeneField field);
constexpr std::size_t index_of(GeneField field) { return static_cast<std::size_t>(field); }

/// ATR period used to normalise the slope filter.
inline constexpr int kSlopeAtrLength = 14;

struct ParameterGene {
  int rsi_slow_length = 28;
  int rsi_fast_length = 6;
  bool fmaf_enabled = true;
  bool smaf_enabled = false;
  bool sf_enabled = true;
  int fma_length = 20;
  int sma_length = 100;
  int slope_lookback = 10;
  double slope_threshold = 0.1;

  /// Field value as a real; switches map to 0/1.
  double get(GeneField field) const;
  /// Integer fields are rounded, switches test `value != 0`.
  void set(GeneField field, double value);

  /// Structural validity independent of any parameter space.
  bool well_formed() const;

  auto operator<=>(const ParameterGene&) const = default;
};

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::int64_t steps() const;  // number of grid points minus one
  double at(std::int64_t k) const;
  /// Nearest grid point, clamped to [min, max].
  double snap(double value) const;
  bool contains(double value) const;
};

/// Feasible box for the numeric fields plus optional pins for the switches.
struct ParameterSpace {
  NumericRange rsi_slow_length{10, 60, 1};
  NumericRange rsi_fast_length{2, 20, 1};
  NumericRange fma_length{5, 60, 1};
  NumericRange sma_length{50, 300, 5};
  NumericRange slope_lookback{2, 30, 1};
  NumericRange slope_threshold{0.0, 1.0, 0.01};
  /// A pinned switch may only take the given value.
  std::optional<bool> fmaf_pinned;
  std::optional<bool> smaf_pinned;
  std::optional<bool> sf_pinned;

  const NumericRange& range(GeneField field) const;
  NumericRange& range(GeneField field);
  const std::optional<bool>& pin(GeneField field) const;
  std::optional<bool>& pin(GeneField field);

  bool contains(const ParameterGene& gene) const;
  /// Snaps and clamps every numeric field, applies switch pins and restores
  /// rsi_fast_length < rsi_slow_length (swap first, then nudge apart).
  ParameterGene repair(ParameterGene gene) const;
  /// Throws std::invalid_argument when bounds are malformed or infeasible.
  void validate() const;
  /// Bars before the longest-configured strategy could emit its first signal.
  std::size_t max_warmup() const;
};

ParameterGene default_gene();
ParameterSpace default_space();

/// Every (fast, slow) RSI length pair of the space with fast < slow.
std::vector<std::pair<int, int>> rsi_length_grid(const ParameterSpace& space);

enum class Side { Buy, Sell };
enum class Filter { Fmaf, Smaf, Sf };

std::string_view filter_name(Filter filter);

struct SignalEvent {
  std::size_t bar_index = 0;
  Side side = Side::Buy;
  std::optional<Filter> suppressed_by;

  bool operator==(const SignalEvent&) const = default;
};

/// First bar at which the gene can emit a signal (all enabled indicators warm).
std::size_t signal_warmup(const ParameterGene& gene);

/// RSI-fast/RSI-slow crossovers. Buys are vetoed by the enabled filters in the
/// order FMAF, SMAF, SF; sells always pass.
std::vector<SignalEvent> generate_signals(const CandleSeries& series, const ParameterGene& gene);
std::vector<SignalEvent> generate_signals(const CandleSeries& series, const ParameterGene& gene,
                                          const ParameterSpace& space);

nlohmann::ordered_json gene_to_json(const ParameterGene& gene);
ParameterGene gene_from_json(const nlohmann::json& j);

}  // namespace evotrade
