#include "evotrade/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "evotrade/indicators.hpp"

namespace evotrade {

namespace {

constexpr std::array<std::string_view, kGeneFieldCount> kFieldNames = {
    "rsi_slow_length", "rsi_fast_length", "fmaf_enabled", "smaf_enabled",   "sf_enabled",
    "fma_length",      "sma_length",      "slope_lookback", "slope_threshold",
};

// Grid arithmetic is done in integer steps and rounded to 1e-9 so that values
// such as 0.07 print as 0.07.
double tidy(double v) { return static_cast<double>(std::llround(v * 1e9)) / 1e9; }

}  // namespace

std::string_view field_name(GeneField field) { return kFieldNames[index_of(field)]; }

bool is_switch(GeneField field) {
  return field == GeneField::FmafEnabled || field == GeneField::SmafEnabled || field == GeneField::SfEnabled;
}

double ParameterGene::get(GeneField field) const {
  switch (field) {
    case GeneField::RsiSlowLength: return rsi_slow_length;
    case GeneField::RsiFastLength: return rsi_fast_length;
    case GeneField::FmafEnabled: return fmaf_enabled ? 1.0 : 0.0;
    case GeneField::SmafEnabled: return smaf_enabled ? 1.0 : 0.0;
    case GeneField::SfEnabled: return sf_enabled ? 1.0 : 0.0;
    case GeneField::FmaLength: return fma_length;
    case GeneField::SmaLength: return sma_length;
    case GeneField::SlopeLookback: return slope_lookback;
    case GeneField::SlopeThreshold: return slope_threshold;
  }
  return 0.0;
}

void ParameterGene::set(GeneField field, double value) {
  const int rounded = static_cast<int>(std::lround(value));
  switch (field) {
    case GeneField::RsiSlowLength: rsi_slow_length = rounded; break;
    case GeneField::RsiFastLength: rsi_fast_length = rounded; break;
    case GeneField::FmafEnabled: fmaf_enabled = value != 0.0; break;
    case GeneField::SmafEnabled: smaf_enabled = value != 0.0; break;
    case GeneField::SfEnabled: sf_enabled = value != 0.0; break;
    case GeneField::FmaLength: fma_length = rounded; break;
    case GeneField::SmaLength: sma_length = rounded; break;
    case GeneField::SlopeLookback: slope_lookback = rounded; break;
    case GeneField::SlopeThreshold: slope_threshold = value; break;
  }
}

bool ParameterGene::well_formed() const {
  return rsi_fast_length >= 2 && rsi_fast_length < rsi_slow_length && fma_length >= 1 && sma_length >= 1 &&
         slope_lookback >= 1 && slope_threshold >= 0.0 && std::isfinite(slope_threshold);
}

std::int64_t NumericRange::steps() const { return std::llround((max - min) / step); }

double NumericRange::at(std::int64_t k) const { return tidy(min + static_cast<double>(k) * step); }

double NumericRange::snap(double value) const {
  const auto k = std::clamp<std::int64_t>(std::llround((value - min) / step), 0, steps());
  return at(k);
}

bool NumericRange::contains(double value) const {
  constexpr double kTol = 1e-9;
  if (value < min - kTol || value > max + kTol) return false;
  const double k = (value - min) / step;
  return std::abs(k - std::round(k)) < 1e-6;
}

const NumericRange& ParameterSpace::range(GeneField field) const {
  switch (field) {
    case GeneField::RsiSlowLength: return rsi_slow_length;
    case GeneField::RsiFastLength: return rsi_fast_length;
    case GeneField::FmaLength: return fma_length;
    case GeneField::SmaLength: return sma_length;
    case GeneField::SlopeLookback: return slope_lookback;
    case GeneField::SlopeThreshold: return slope_threshold;
    default: break;
  }
  throw std::invalid_argument("no numeric range for switch field " + std::string(field_name(field)));
}

NumericRange& ParameterSpace::range(GeneField field) {
  return const_cast<NumericRange&>(std::as_const(*this).range(field));
}

const std::optional<bool>& ParameterSpace::pin(GeneField field) const {
  switch (field) {
    case GeneField::FmafEnabled: return fmaf_pinned;
    case GeneField::SmafEnabled: return smaf_pinned;
    case GeneField::SfEnabled: return sf_pinned;
    default: break;
  }
  throw std::invalid_argument("no pin for numeric field " + std::string(field_name(field)));
}

std::optional<bool>& ParameterSpace::pin(GeneField field) {
  return const_cast<std::optional<bool>&>(std::as_const(*this).pin(field));
}

bool ParameterSpace::contains(const ParameterGene& gene) const {
  for (auto field : kGeneFields) {
    if (is_switch(field)) {
      const auto& p = pin(field);
      if (p && (gene.get(field) != 0.0) != *p) return false;
    } else if (!range(field).contains(gene.get(field))) {
      return false;
    }
  }
  return gene.rsi_fast_length < gene.rsi_slow_length && gene.well_formed();
}

ParameterGene ParameterSpace::repair(ParameterGene gene) const {
  for (auto field : kGeneFields) {
    if (is_switch(field)) {
      if (const auto& p = pin(field)) gene.set(field, *p ? 1.0 : 0.0);
    } else {
      gene.set(field, range(field).snap(gene.get(field)));
    }
  }
  if (gene.rsi_fast_length > gene.rsi_slow_length) {
    std::swap(gene.rsi_fast_length, gene.rsi_slow_length);
    gene.rsi_fast_length = static_cast<int>(rsi_fast_length.snap(gene.rsi_fast_length));
    gene.rsi_slow_length = static_cast<int>(rsi_slow_length.snap(gene.rsi_slow_length));
  }
  if (gene.rsi_fast_length >= gene.rsi_slow_length) {
    const double lower_fast = gene.rsi_slow_length - rsi_fast_length.step;
    if (lower_fast >= rsi_fast_length.min) {
      gene.rsi_fast_length = static_cast<int>(rsi_fast_length.snap(lower_fast));
    } else {
      gene.rsi_slow_length = static_cast<int>(rsi_slow_length.snap(gene.rsi_fast_length + rsi_slow_length.step));
    }
  }
  if (gene.rsi_fast_length >= gene.rsi_slow_length) {
    gene.rsi_fast_length = static_cast<int>(rsi_fast_length.min);
    gene.rsi_slow_length = static_cast<int>(rsi_slow_length.snap(rsi_fast_length.min + 1));
  }
  return gene;
}

void ParameterSpace::validate() const {
  for (auto field : kGeneFields) {
    if (is_switch(field)) continue;
    const auto& r = range(field);
    if (!(r.min <= r.max) || !(r.step > 0.0)) {
      throw std::invalid_argument("invalid bounds for " + std::string(field_name(field)));
    }
  }
  for (auto field : {GeneField::RsiSlowLength, GeneField::RsiFastLength, GeneField::FmaLength,
                     GeneField::SmaLength, GeneField::SlopeLookback}) {
    const auto& r = range(field);
    if (r.min != std::round(r.min) || r.step != std::round(r.step)) {
      throw std::invalid_argument(std::string(field_name(field)) + " must have integer bounds and step");
    }
  }
  if (rsi_fast_length.min < 2 || fma_length.min < 1 || sma_length.min < 1 || slope_lookback.min < 1 ||
      slope_threshold.min < 0.0) {
    throw std::invalid_argument("parameter space admits non-positive lengths or a negative threshold");
  }
  if (!(rsi_fast_length.min < rsi_slow_length.max)) {
    throw std::invalid_argument("no RSI length pair satisfies fast < slow");
  }
}

std::size_t ParameterSpace::max_warmup() const {
  ParameterGene longest;
  longest.rsi_slow_length = static_cast<int>(rsi_slow_length.max);
  longest.rsi_fast_length = static_cast<int>(rsi_fast_length.min);
  longest.fma_length = static_cast<int>(fma_length.max);
  longest.sma_length = static_cast<int>(sma_length.max);
  longest.slope_lookback = static_cast<int>(slope_lookback.max);
  longest.fmaf_enabled = longest.smaf_enabled = longest.sf_enabled = true;
  return signal_warmup(longest);
}

ParameterGene default_gene() { return ParameterGene{}; }

ParameterSpace default_space() { return ParameterSpace{}; }

std::vector<std::pair<int, int>> rsi_length_grid(const ParameterSpace& space) {
  std::vector<std::pair<int, int>> grid;
  for (std::int64_t f = 0; f <= space.rsi_fast_length.steps(); ++f) {
    for (std::int64_t s = 0; s <= space.rsi_slow_length.steps(); ++s) {
      const int fast = static_cast<int>(space.rsi_fast_length.at(f));
      const int slow = static_cast<int>(space.rsi_slow_length.at(s));
      if (fast < slow) grid.emplace_back(fast, slow);
    }
  }
  return grid;
}

std::string_view filter_name(Filter filter) {
  switch (filter) {
    case Filter::Fmaf: return "FMAF";
    case Filter::Smaf: return "SMAF";
    case Filter::Sf: return "SF";
  }
  return "";
}

std::size_t signal_warmup(const ParameterGene& gene) {
  // A crossover at bar i needs both RSI values at i-1.
  std::size_t warm = static_cast<std::size_t>(std::max(gene.rsi_slow_length, gene.rsi_fast_length)) + 1;
  if (gene.fmaf_enabled) warm = std::max<std::size_t>(warm, gene.fma_length - 1);
  if (gene.smaf_enabled) warm = std::max<std::size_t>(warm, gene.sma_length - 1);
  if (gene.sf_enabled) {
    warm = std::max<std::size_t>(warm, std::max(gene.fma_length - 1 + gene.slope_lookback, kSlopeAtrLength - 1));
  }
  return warm;
}

std::vector<SignalEvent> generate_signals(const CandleSeries& series, const ParameterGene& gene) {
  if (!gene.well_formed()) throw std::invalid_argument("malformed parameter gene");
  std::vector<SignalEvent> events;
  const auto n = static_cast<Eigen::Index>(series.size());
  const auto start = static_cast<Eigen::Index>(signal_warmup(gene));
  if (n <= start) return events;

  const Eigen::ArrayXd closes = series.closes();
  const auto fast = rsi(closes, gene.rsi_fast_length);
  const auto slow = rsi(closes, gene.rsi_slow_length);

  IndicatorSeries fma, slow_ma, slope;
  if (gene.fmaf_enabled || gene.sf_enabled) fma = sma(closes, gene.fma_length);
  if (gene.smaf_enabled) slow_ma = sma(closes, gene.sma_length);
  if (gene.sf_enabled) slope = normalized_slope(fma, atr(series, kSlopeAtrLength), gene.slope_lookback);

  for (Eigen::Index i = start; i < n; ++i) {
    const double f0 = fast.values[i - 1], s0 = slow.values[i - 1];
    const double f1 = fast.values[i], s1 = slow.values[i];
    if (f0 <= s0 && f1 > s1) {
      SignalEvent ev{static_cast<std::size_t>(i), Side::Buy, std::nullopt};
      if (gene.fmaf_enabled && closes[i] <= fma.values[i]) {
        ev.suppressed_by = Filter::Fmaf;
      } else if (gene.smaf_enabled && closes[i] <= slow_ma.values[i]) {
        ev.suppressed_by = Filter::Smaf;
      } else if (gene.sf_enabled && slope.values[i] < gene.slope_threshold) {
        ev.suppressed_by = Filter::Sf;
      }
      events.push_back(ev);
    } else if (f0 >= s0 && f1 < s1) {
      events.push_back({static_cast<std::size_t>(i), Side::Sell, std::nullopt});
    }
  }
  return events;
}

std::vector<SignalEvent> generate_signals(const CandleSeries& series, const ParameterGene& gene,
                                          const ParameterSpace& space) {
  if (!space.contains(gene)) throw std::invalid_argument("parameter gene outside the parameter space");
  return generate_signals(series, gene);
}

nlohmann::ordered_json gene_to_json(const ParameterGene& gene) {
  nlohmann::ordered_json j;
  j["rsi_slow_length"] = gene.rsi_slow_length;
  j["rsi_fast_length"] = gene.rsi_fast_length;
  j["fmaf_enabled"] = gene.fmaf_enabled;
  j["smaf_enabled"] = gene.smaf_enabled;
  j["sf_enabled"] = gene.sf_enabled;
  j["fma_length"] = gene.fma_length;
  j["sma_length"] = gene.sma_length;
  j["slope_lookback"] = gene.slope_lookback;
  j["slope_threshold"] = gene.slope_threshold;
  return j;
}

ParameterGene gene_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != kGeneFieldCount) {
    throw std::invalid_argument("gene must be an object with exactly 9 fields");
  }
  ParameterGene gene;
  gene.rsi_slow_length = j.at("rsi_slow_length").get<int>();
  gene.rsi_fast_length = j.at("rsi_fast_length").get<int>();
  gene.fmaf_enabled = j.at("fmaf_enabled").get<bool>();
  gene.smaf_enabled = j.at("smaf_enabled").get<bool>();
  gene.sf_enabled = j.at("sf_enabled").get<bool>();
  gene.fma_length = j.at("fma_length").get<int>();
  gene.sma_length = j.at("sma_length").get<int>();
  gene.slope_lookback = j.at("slope_lookback").get<int>();
  gene.slope_threshold = j.at("slope_threshold").get<double>();
  return gene;
}

}  // namespace evotrade
