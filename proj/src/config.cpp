#include "evotrade/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace evotrade {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

void reject_unknown(const toml::table& table, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, node] : table) {
    if (!known.contains(std::string(key.str()))) fail(where, "unknown key '" + std::string(key.str()) + "'");
  }
}

const toml::table* subtable(const toml::table& parent, std::string_view key, const std::string& where) {
  const auto* node = parent.get(key);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) fail(where, "'" + std::string(key) + "' must be a table");
  return t;
}

double read_real(const toml::table& t, std::string_view key, double fallback, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value_exact<double>()) return *v;
  if (auto v = node->value_exact<std::int64_t>()) return static_cast<double>(*v);
  fail(where, "'" + std::string(key) + "' must be a number");
}

std::int64_t read_int(const toml::table& t, std::string_view key, std::int64_t fallback, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value_exact<std::int64_t>()) return *v;
  fail(where, "'" + std::string(key) + "' must be an integer");
}

std::size_t read_count(const toml::table& t, std::string_view key, std::size_t fallback, const std::string& where) {
  const auto v = read_int(t, key, static_cast<std::int64_t>(fallback), where);
  if (v < 0) fail(where, "'" + std::string(key) + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool read_bool(const toml::table& t, std::string_view key, bool fallback, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value_exact<bool>()) return *v;
  fail(where, "'" + std::string(key) + "' must be a boolean");
}

std::string read_string(const toml::table& t, std::string_view key, std::string fallback, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value_exact<std::string>()) return *v;
  fail(where, "'" + std::string(key) + "' must be a string");
}

void parse_execution(const toml::table& t, ExecutionConfig& exec) {
  const std::string where = "[execution]";
  reject_unknown(t, {"initial_capital", "fee_rate", "slippage_rate", "fill_policy"}, where);
  exec.initial_capital = read_real(t, "initial_capital", exec.initial_capital, where);
  exec.fee_rate = read_real(t, "fee_rate", exec.fee_rate, where);
  exec.slippage_rate = read_real(t, "slippage_rate", exec.slippage_rate, where);
  if (read_string(t, "fill_policy", "next_bar_open", where) != "next_bar_open") {
    fail(where, "fill_policy must be \"next_bar_open\"");
  }
}

void parse_fitness(const toml::table& t, FitnessConfig& fit) {
  std::set<std::string> known;
  for (std::size_t j = 0; j < kMetricCount; ++j) known.insert(std::string(metric_name(static_cast<Metric>(j))));
  reject_unknown(t, known, "[fitness]");
  for (std::size_t j = 0; j < kMetricCount; ++j) {
    const auto name = std::string(metric_name(static_cast<Metric>(j)));
    const std::string where = "[fitness." + name + "]";
    const auto* spec = subtable(t, name, where);
    if (!spec) continue;
    reject_unknown(*spec, {"direction", "lo", "hi", "weight"}, where);
    auto& s = fit.specs[j];
    const auto dir = read_string(*spec, "direction", s.direction == Direction::HigherBetter ? "higher" : "lower", where);
    if (dir == "higher") {
      s.direction = Direction::HigherBetter;
    } else if (dir == "lower") {
      s.direction = Direction::LowerBetter;
    } else {
      fail(where, "direction must be \"higher\" or \"lower\"");
    }
    s.lo = read_real(*spec, "lo", s.lo, where);
    s.hi = read_real(*spec, "hi", s.hi, where);
    const auto idx = static_cast<Eigen::Index>(j);
    fit.weights[idx] = read_real(*spec, "weight", fit.weights[idx], where);
  }
}

void parse_evolution(const toml::table& t, EvolutionConfig& evo) {
  const std::string where = "[evolution]";
  reject_unknown(t,
                 {"population_size", "elite_fraction", "selection_target_fraction", "mutation_fraction",
                  "bias_to_best", "max_generations", "plateau_patience", "rng_seed", "evaluation_threads"},
                 where);
  evo.population_size = read_count(t, "population_size", evo.population_size, where);
  evo.elite_fraction = read_real(t, "elite_fraction", evo.elite_fraction, where);
  evo.selection_target_fraction = read_real(t, "selection_target_fraction", evo.selection_target_fraction, where);
  evo.mutation_fraction = read_real(t, "mutation_fraction", evo.mutation_fraction, where);
  evo.bias_to_best = read_real(t, "bias_to_best", evo.bias_to_best, where);
  evo.max_generations = read_count(t, "max_generations", evo.max_generations, where);
  evo.plateau_patience = read_count(t, "plateau_patience", evo.plateau_patience, where);
  evo.rng_seed = static_cast<std::uint64_t>(read_int(t, "rng_seed", static_cast<std::int64_t>(evo.rng_seed), where));
  evo.evaluation_threads = read_count(t, "evaluation_threads", evo.evaluation_threads, where);
}

void parse_rolling(const toml::table& t, RollingConfig& roll) {
  const std::string where = "[rolling]";
  reject_unknown(t, {"window_days", "mode", "rng_seed"}, where);
  roll.window_days = read_int(t, "window_days", roll.window_days, where);
  const auto mode = read_string(t, "mode", std::string(mode_name(roll.mode)), where);
  const auto parsed = parse_mode(mode);
  if (!parsed) fail(where, "mode must be \"baseline\", \"optimized\" or \"both\"");
  roll.mode = *parsed;
  roll.rng_seed = static_cast<std::uint64_t>(read_int(t, "rng_seed", static_cast<std::int64_t>(roll.rng_seed), where));
}

void parse_space(const toml::table& t, ParameterSpace& space) {
  std::set<std::string> known;
  for (auto field : kGeneFields) known.insert(std::string(field_name(field)));
  reject_unknown(t, known, "[space]");
  for (auto field : kGeneFields) {
    const auto name = std::string(field_name(field));
    const std::string where = "[space." + name + "]";
    if (is_switch(field)) {
      // A switch entry is either "free" or a pinned boolean.
      const auto* node = t.get(name);
      if (!node) continue;
      if (auto b = node->value_exact<bool>()) {
        space.pin(field) = *b;
      } else if (auto s = node->value_exact<std::string>(); s && *s == "free") {
        space.pin(field).reset();
      } else {
        fail("[space]", "'" + name + "' must be \"free\", true or false");
      }
      continue;
    }
    const auto* r = subtable(t, name, where);
    if (!r) continue;
    reject_unknown(*r, {"min", "max", "step"}, where);
    auto& range = space.range(field);
    range.min = read_real(*r, "min", range.min, where);
    range.max = read_real(*r, "max", range.max, where);
    range.step = read_real(*r, "step", range.step, where);
  }
}

ParameterGene parse_gene(const toml::table& t) {
  const std::string where = "[gene]";
  std::set<std::string> known;
  for (auto field : kGeneFields) known.insert(std::string(field_name(field)));
  reject_unknown(t, known, where);
  ParameterGene g = default_gene();
  g.rsi_slow_length = static_cast<int>(read_int(t, "rsi_slow_length", g.rsi_slow_length, where));
  g.rsi_fast_length = static_cast<int>(read_int(t, "rsi_fast_length", g.rsi_fast_length, where));
  g.fmaf_enabled = read_bool(t, "fmaf_enabled", g.fmaf_enabled, where);
  g.smaf_enabled = read_bool(t, "smaf_enabled", g.smaf_enabled, where);
  g.sf_enabled = read_bool(t, "sf_enabled", g.sf_enabled, where);
  g.fma_length = static_cast<int>(read_int(t, "fma_length", g.fma_length, where));
  g.sma_length = static_cast<int>(read_int(t, "sma_length", g.sma_length, where));
  g.slope_lookback = static_cast<int>(read_int(t, "slope_lookback", g.slope_lookback, where));
  g.slope_threshold = read_real(t, "slope_threshold", g.slope_threshold, where);
  return g;
}

std::string toml_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

void RunConfig::validate() const {
  try {
    execution.validate();
    fitness.validate();
    evolution.validate();
    rolling.validate();
    space.validate();
    if (!space.contains(space.repair(default_gene()))) throw std::invalid_argument("space excludes the default gene");
    if (gene && !space.contains(*gene)) throw std::invalid_argument("[gene] lies outside the parameter space");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + std::string(e.description()));
  }
  reject_unknown(root, {"execution", "fitness", "evolution", "rolling", "space", "gene"}, std::string(source));

  RunConfig cfg;
  if (const auto* t = subtable(root, "execution", "[execution]")) parse_execution(*t, cfg.execution);
  if (const auto* t = subtable(root, "fitness", "[fitness]")) parse_fitness(*t, cfg.fitness);
  if (const auto* t = subtable(root, "evolution", "[evolution]")) parse_evolution(*t, cfg.evolution);
  if (const auto* t = subtable(root, "rolling", "[rolling]")) parse_rolling(*t, cfg.rolling);
  if (const auto* t = subtable(root, "space", "[space]")) parse_space(*t, cfg.space);
  if (const auto* t = subtable(root, "gene", "[gene]")) cfg.gene = parse_gene(*t);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string default_config_toml() {
  const RunConfig cfg;
  std::ostringstream os;
  const auto& x = cfg.execution;
  os << "[execution]\n"
     << "initial_capital = " << toml_real(x.initial_capital) << "\n"
     << "fee_rate = " << toml_real(x.fee_rate) << "\n"
     << "slippage_rate = " << toml_real(x.slippage_rate) << "\n"
     << "fill_policy = \"next_bar_open\"\n\n";

  const auto& e = cfg.evolution;
  os << "[evolution]\n"
     << "population_size = " << e.population_size << "\n"
     << "elite_fraction = " << toml_real(e.elite_fraction) << "\n"
     << "selection_target_fraction = " << toml_real(e.selection_target_fraction) << "\n"
     << "mutation_fraction = " << toml_real(e.mutation_fraction) << "\n"
     << "bias_to_best = " << toml_real(e.bias_to_best) << "\n"
     << "max_generations = " << e.max_generations << "\n"
     << "plateau_patience = " << e.plateau_patience << "\n"
     << "rng_seed = " << e.rng_seed << "\n"
     << "evaluation_threads = " << e.evaluation_threads << "\n\n";

  const auto& r = cfg.rolling;
  os << "[rolling]\n"
     << "window_days = " << r.window_days << "\n"
     << "mode = \"" << mode_name(r.mode) << "\"\n"
     << "rng_seed = " << r.rng_seed << "\n\n";

  os << "[fitness]\n";
  for (std::size_t j = 0; j < kMetricCount; ++j) {
    const auto& s = cfg.fitness.specs[j];
    os << "\n[fitness." << metric_name(static_cast<Metric>(j)) << "]\n"
       << "direction = \"" << (s.direction == Direction::HigherBetter ? "higher" : "lower") << "\"\n"
       << "lo = " << toml_real(s.lo) << "\n"
       << "hi = " << toml_real(s.hi) << "\n"
       << "weight = " << toml_real(cfg.fitness.weights[static_cast<Eigen::Index>(j)]) << "\n";
  }

  os << "\n[space]\n";
  for (auto field : kGeneFields) {
    if (is_switch(field)) {
      const auto& pin = cfg.space.pin(field);
      os << field_name(field) << " = " << (pin ? (*pin ? "true" : "false") : "\"free\"") << "\n";
    }
  }
  for (auto field : kGeneFields) {
    if (is_switch(field)) continue;
    const auto& range = cfg.space.range(field);
    const bool integral = field != GeneField::SlopeThreshold;
    auto num = [&](double v) { return integral ? std::to_string(static_cast<long long>(v)) : toml_real(v); };
    os << "\n[space." << field_name(field) << "]\n"
       << "min = " << num(range.min) << "\n"
       << "max = " << num(range.max) << "\n"
       << "step = " << num(range.step) << "\n";
  }

  // The gene the `backtest` subcommand runs.
  const auto g = default_gene();
  os << "\n[gene]\n";
  for (auto field : kGeneFields) {
    os << field_name(field) << " = ";
    if (is_switch(field)) {
      os << (g.get(field) != 0.0 ? "true" : "false");
    } else if (field == GeneField::SlopeThreshold) {
      os << toml_real(g.get(field));
    } else {
      os << static_cast<long long>(g.get(field));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace evotrade
