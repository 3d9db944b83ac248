#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evotrade/backtest.hpp"
#include "evotrade/market_data.hpp"
#include "evotrade/metrics.hpp"
#include "evotrade/random.hpp"
#include "evotrade/strategy.hpp"

namespace evotrade {

enum class Regime { Uptrend, Downtrend, Ranging };
enum class Volatility { Low, Normal, High };
/// Direction in which a field should be searched. For switches, Increase
/// means towards enabled.
enum class Hint { Increase, Decrease, Keep, Explore };

std::string_view regime_name(Regime regime);
std::string_view volatility_name(Volatility volatility);
std::string_view hint_name(Hint hint);

struct DirectionHints {
  Regime regime = Regime::Ranging;
  Volatility volatility = Volatility::Normal;
  std::array<Hint, kGeneFieldCount> hints{};
  double median_slope = 0.0;     // ATR-normalised slope of the regime MA
  double mean_range_ratio = 0.0; // mean ATR / close

  Hint operator[](GeneField field) const { return hints[index_of(field)]; }
  Hint& operator[](GeneField field) { return hints[index_of(field)]; }
};

// Market-analysis rule constants.
inline constexpr int kRegimeMaLength = 50;
inline constexpr int kRegimeSlopeLookback = 10;
inline constexpr int kRegimeAtrLength = 14;
inline constexpr double kRangingSlope = 0.05;
inline constexpr double kLowVolatility = 0.001;
inline constexpr double kHighVolatility = 0.004;

struct ScoredGene {
  ParameterGene gene;
  MetricVector metrics;
  double fitness = 0.0;
};

struct Population {
  std::vector<ParameterGene> genes;
  std::size_t capacity = 0;

  std::size_t size() const { return genes.size(); }
};

struct EvolutionConfig {
  std::size_t population_size = 24;
  double elite_fraction = 0.20;
  double selection_target_fraction = 0.50;
  double mutation_fraction = 0.20;
  double bias_to_best = 0.5;
  std::size_t max_generations = 12;
  std::size_t plateau_patience = 4;
  std::uint64_t rng_seed = 0;
  /// Worker threads for backtests; 0 picks the hardware concurrency.
  std::size_t evaluation_threads = 0;

  void validate() const;
};

struct GenerationStats {
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct OptimizationOutcome {
  ScoredGene best;
  std::vector<GenerationStats> generation_log;
  std::size_t evaluations = 0;  // distinct backtests run; repeated genes are cached
};

/// Regime and volatility classification of a window and the hint table.
DirectionHints analyze_market(const CandleSeries& series, const ParameterSpace& space);
std::array<Hint, kGeneFieldCount> hint_table(Regime regime, Volatility volatility);

/// Member 0 is `seed` verbatim; the rest are hint-biased perturbations of it.
Population generate_initial_population(const ParameterGene& seed, const DirectionHints& hints,
                                       const ParameterSpace& space, std::size_t n, Rng& rng);

std::vector<ScoredGene> evaluate_population(const Population& population, const CandleSeries& series,
                                            const ExecutionConfig& exec, const FitnessConfig& fit,
                                            std::size_t threads = 1);

/// Highest fitness, earliest index on ties.
std::size_t best_index(std::span<const ScoredGene> scored);

/// w_j = s_j - min(s) + 1, normalised to a distribution.
Eigen::VectorXd selection_weights(std::span<const double> scores);
Eigen::VectorXd selection_probabilities(std::span<const double> scores);

/// Index drawn with probability proportional to `weights`.
std::size_t weighted_draw(std::span<const double> weights, Rng& rng);

/// Elite list: the top elite_fraction directly, then weighted sampling without
/// replacement from the remainder up to selection_target_fraction, capped at
/// `cap` members. Sorted by fitness, best first.
std::vector<ScoredGene> select_elites(std::span<const ScoredGene> scored, const EvolutionConfig& cfg, Rng& rng,
                                      std::size_t cap);

/// Blend crossover over cyclic parent pairs until `n` children exist.
Population crossover(std::span<const ScoredGene> elites, const DirectionHints& hints, const ParameterSpace& space,
                     std::size_t n, Rng& rng);

/// Mutates floor(mutation_fraction * N) members, pulling fields towards `best`
/// with probability bias_to_best.
Population mutate(Population population, const ScoredGene& best, const EvolutionConfig& cfg,
                  const ParameterSpace& space, Rng& rng);

/// Uniformly random in-space gene.
ParameterGene random_gene(const ParameterSpace& space, Rng& rng);

/// Pluggable source of hints and offspring. The rule-based advisor forwards
/// to the free functions above.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual DirectionHints analyze(const CandleSeries& series, const ParameterSpace& space) = 0;
  virtual Population generate(const ParameterGene& seed, const DirectionHints& hints, const ParameterSpace& space,
                              std::size_t n, Rng& rng) = 0;
  virtual Population breed(std::span<const ScoredGene> elites, const DirectionHints& hints,
                           const ParameterSpace& space, std::size_t n, Rng& rng) = 0;
  virtual Population mutate(Population population, const ScoredGene& best, const EvolutionConfig& cfg,
                            const ParameterSpace& space, Rng& rng) = 0;
};

class RuleBasedAdvisor final : public Advisor {
 public:
  DirectionHints analyze(const CandleSeries& series, const ParameterSpace& space) override;
  Population generate(const ParameterGene& seed, const DirectionHints& hints, const ParameterSpace& space,
                      std::size_t n, Rng& rng) override;
  Population breed(std::span<const ScoredGene> elites, const DirectionHints& hints, const ParameterSpace& space,
                   std::size_t n, Rng& rng) override;
  Population mutate(Population population, const ScoredGene& best, const EvolutionConfig& cfg,
                    const ParameterSpace& space, Rng& rng) override;
};

/// Called once per generation with the evaluated population.
using GenerationObserver = std::function<void(std::size_t generation, std::span<const ScoredGene> scored)>;

struct OptimizeOptions {
  ParameterSpace space = default_space();
  ParameterGene seed = default_gene();
  Advisor* advisor = nullptr;  // rule-based when null
  GenerationObserver on_generation;
};

/// Runs analyze -> generate -> (evaluate -> select -> crossover -> mutate)*
/// until max_generations or plateau_patience stale generations. The best gene
/// is carried verbatim into every next generation.
OptimizationOutcome optimize(const CandleSeries& series, const EvolutionConfig& cfg, const ExecutionConfig& exec,
                             const FitnessConfig& fit, const OptimizeOptions& options = {});

/// Baseline: `budget` uniformly random genes, best kept.
OptimizationOutcome random_search(const CandleSeries& series, std::size_t budget, const ExecutionConfig& exec,
                                  const FitnessConfig& fit, const ParameterSpace& space, std::uint64_t seed,
                                  std::size_t threads = 1);

}  // namespace evotrade
