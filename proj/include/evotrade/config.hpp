#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evotrade/backtest.hpp"
#include "evotrade/evolution.hpp"
#include "evotrade/harness.hpp"
#include "evotrade/metrics.hpp"
#include "evotrade/strategy.hpp"

namespace evotrade {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run needs. Sections absent from the file keep defaults.
struct RunConfig {
  ExecutionConfig execution;
  FitnessConfig fitness = FitnessConfig::defaults();
  EvolutionConfig evolution;
  RollingConfig rolling;
  ParameterSpace space = default_space();
  /// Gene used by the `backtest` subcommand; the default gene when absent.
  std::optional<ParameterGene> gene;

  void validate() const;
};

/// Parses TOML with sections [execution] [fitness] [evolution] [rolling]
/// [space] and an optional [gene]. Unknown keys are rejected.
RunConfig parse_config(std::string_view toml_text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// The defaults rendered in the accepted TOML format.
std::string default_config_toml();

}  // namespace evotrade
