#include "evotrade/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "evotrade/indicators.hpp"

namespace evotrade {

namespace {

// Largest generate-time perturbation, as a fraction of the room to the bound.
constexpr double kPerturbationSpan = 1.0;
constexpr double kDirectedSignProbability = 0.8;
constexpr double kKeepZeroProbability = 0.6;
constexpr double kSwitchFlipProbability = 0.25;
constexpr double kExploreFlipProbability = 0.5;
constexpr double kFieldMutationProbability = 0.5;
constexpr int kMaxMutationSteps = 2;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void require_in_space(const ParameterSpace& space, const ParameterGene& gene, const char* what) {
  if (!space.contains(gene)) throw std::invalid_argument(std::string(what) + " lies outside the parameter space");
}

std::vector<ScoredGene> sorted_by_fitness(std::span<const ScoredGene> scored) {
  std::vector<ScoredGene> sorted(scored.begin(), scored.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredGene& a, const ScoredGene& b) { return a.fitness > b.fitness; });
  return sorted;
}

}  // namespace

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::Uptrend: return "uptrend";
    case Regime::Downtrend: return "downtrend";
    case Regime::Ranging: return "ranging";
  }
  return "";
}

std::string_view volatility_name(Volatility volatility) {
  switch (volatility) {
    case Volatility::Low: return "low";
    case Volatility::Normal: return "normal";
    case Volatility::High: return "high";
  }
  return "";
}

std::string_view hint_name(Hint hint) {
  switch (hint) {
    case Hint::Increase: return "increase";
    case Hint::Decrease: return "decrease";
    case Hint::Keep: return "keep";
    case Hint::Explore: return "explore";
  }
  return "";
}

void EvolutionConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (!(elite_fraction > 0.0 && elite_fraction <= selection_target_fraction && selection_target_fraction <= 1.0)) {
    throw std::invalid_argument("need 0 < elite_fraction <= selection_target_fraction <= 1");
  }
  if (!(mutation_fraction >= 0.0 && mutation_fraction <= 1.0)) {
    throw std::invalid_argument("mutation_fraction must lie in [0, 1]");
  }
  if (!(bias_to_best >= 0.0 && bias_to_best <= 1.0)) throw std::invalid_argument("bias_to_best must lie in [0, 1]");
  if (max_generations < 1) throw std::invalid_argument("max_generations must be >= 1");
  if (plateau_patience < 1) throw std::invalid_argument("plateau_patience must be >= 1");
}

// ---------------------------------------------------------------------------
// Analysis

std::array<Hint, kGeneFieldCount> hint_table(Regime regime, Volatility volatility) {
  std::array<Hint, kGeneFieldCount> h;
  h.fill(Hint::Explore);
  auto set = [&h](GeneField f, Hint v) { h[index_of(f)] = v; };

  switch (regime) {
    case Regime::Ranging:
      // Choppy markets: slow the fast RSI down to cut whipsaw entries.
      set(GeneField::RsiFastLength, Hint::Increase);
      set(GeneField::RsiSlowLength, Hint::Increase);
      set(GeneField::FmafEnabled, Hint::Keep);
      set(GeneField::SfEnabled, Hint::Keep);
      set(GeneField::SlopeThreshold, Hint::Keep);
      break;
    case Regime::Uptrend:
      set(GeneField::RsiFastLength, Hint::Decrease);
      set(GeneField::SmafEnabled, Hint::Decrease);
      set(GeneField::FmafEnabled, Hint::Keep);
      set(GeneField::FmaLength, Hint::Keep);
      break;
    case Regime::Downtrend:
      set(GeneField::SmafEnabled, Hint::Increase);
      set(GeneField::FmafEnabled, Hint::Increase);
      set(GeneField::FmaLength, Hint::Increase);
      set(GeneField::SlopeThreshold, Hint::Increase);
      break;
  }
  switch (volatility) {
    case Volatility::High:
      set(GeneField::SlopeThreshold, Hint::Increase);
      set(GeneField::RsiSlowLength, Hint::Increase);
      break;
    case Volatility::Low:
      set(GeneField::SlopeThreshold, Hint::Decrease);
      set(GeneField::SlopeLookback, Hint::Increase);
      break;
    case Volatility::Normal:
      break;
  }
  return h;
}

DirectionHints analyze_market(const CandleSeries& series, const ParameterSpace& space) {
  space.validate();
  if (day_count(series) < 2) {
    throw DataError(DataError::Kind::InsufficientData, "market analysis needs at least two days of data");
  }
  const Eigen::ArrayXd closes = series.closes();
  const auto ma = sma(closes, kRegimeMaLength);
  const auto range = atr(series, kRegimeAtrLength);
  const auto slope = normalized_slope(ma, range, kRegimeSlopeLookback);

  DirectionHints out;
  const Eigen::Index n_slope = slope.size() - slope.warmup_len;
  std::vector<double> slopes(static_cast<std::size_t>(std::max<Eigen::Index>(n_slope, 0)));
  for (Eigen::Index i = slope.warmup_len; i < slope.size(); ++i) {
    slopes[static_cast<std::size_t>(i - slope.warmup_len)] = slope.values[i];
  }
  out.median_slope = median(std::move(slopes));
  if (std::abs(out.median_slope) < kRangingSlope) {
    out.regime = Regime::Ranging;
  } else {
    out.regime = out.median_slope > 0.0 ? Regime::Uptrend : Regime::Downtrend;
  }

  const Eigen::Index warm = range.warmup_len;
  const Eigen::Index tail = range.size() - warm;
  out.mean_range_ratio = tail > 0 ? (range.values.tail(tail) / closes.tail(tail)).mean() : 0.0;
  if (out.mean_range_ratio < kLowVolatility) {
    out.volatility = Volatility::Low;
  } else if (out.mean_range_ratio > kHighVolatility) {
    out.volatility = Volatility::High;
  } else {
    out.volatility = Volatility::Normal;
  }
  out.hints = hint_table(out.regime, out.volatility);
  return out;
}

// ---------------------------------------------------------------------------
// Generation

Population generate_initial_population(const ParameterGene& seed, const DirectionHints& hints,
                                       const ParameterSpace& space, std::size_t n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("initial population needs at least 2 genes");
  space.validate();
  require_in_space(space, seed, "default gene");

  Population pop{{seed}, n};
  pop.genes.reserve(n);
  for (std::size_t member = 1; member < n; ++member) {
    ParameterGene gene = seed;
    for (auto field : kGeneFields) {
      const Hint hint = hints[field];
      if (is_switch(field)) {
        const double flip = hint == Hint::Explore ? kExploreFlipProbability : kSwitchFlipProbability;
        if (rng.bernoulli(flip)) gene.set(field, gene.get(field) != 0.0 ? 0.0 : 1.0);
        continue;
      }
      const auto& r = space.range(field);
      if (hint == Hint::Explore) {
        gene.set(field, r.at(rng.uniform_int(0, r.steps())));
        continue;
      }
      std::int64_t sign = 0;
      switch (hint) {
        case Hint::Increase: sign = rng.bernoulli(kDirectedSignProbability) ? 1 : -1; break;
        case Hint::Decrease: sign = rng.bernoulli(kDirectedSignProbability) ? -1 : 1; break;
        case Hint::Keep:
          if (!rng.bernoulli(kKeepZeroProbability)) sign = rng.bernoulli(0.5) ? 1 : -1;
          break;
        case Hint::Explore: break;
      }
      if (sign != 0) {
        // Uniform over the room left between the seed value and the bound.
        const auto at = static_cast<std::int64_t>(std::llround((gene.get(field) - r.min) / r.step));
        const auto room = sign > 0 ? r.steps() - at : at;
        const auto reach = static_cast<std::int64_t>(std::ceil(kPerturbationSpan * static_cast<double>(room)));
        if (reach > 0) {
          const auto k = rng.uniform_int(1, reach);
          gene.set(field, r.snap(gene.get(field) + static_cast<double>(sign * k) * r.step));
        }
      }
    }
    pop.genes.push_back(space.repair(gene));
  }
  return pop;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<ScoredGene> evaluate_population(const Population& population, const CandleSeries& series,
                                            const ExecutionConfig& exec, const FitnessConfig& fit,
                                            std::size_t threads) {
  const std::size_t n = population.size();
  std::vector<ScoredGene> scored(n);
  const double periods = bars_per_year(series.bar_seconds);

  auto score_one = [&](std::size_t i) {
    const auto& gene = population.genes[i];
    const auto result = run_backtest(series, gene, exec);
    auto metrics = compute_metrics(result, periods);
    scored[i] = ScoredGene{gene, metrics, fitness(metrics, fit)};
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) score_one(i);
    return scored;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) score_one(i);
    });
  }
  workers.clear();  // joins
  return scored;
}

std::size_t best_index(std::span<const ScoredGene> scored) {
  if (scored.empty()) throw std::invalid_argument("best_index of an empty population");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].fitness > scored[best].fitness) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Selection

Eigen::VectorXd selection_weights(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("selection over an empty pool");
  const Eigen::Map<const Eigen::VectorXd> s(scores.data(), static_cast<Eigen::Index>(scores.size()));
  return (s.array() - s.minCoeff() + 1.0).matrix();
}

Eigen::VectorXd selection_probabilities(std::span<const double> scores) {
  const Eigen::VectorXd w = selection_weights(scores);
  return w / w.sum();
}

std::size_t weighted_draw(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (target < cumulative) return i;
  }
  return last_positive;  // rounding at the top end
}

std::vector<ScoredGene> select_elites(std::span<const ScoredGene> scored, const EvolutionConfig& cfg, Rng& rng,
                                      std::size_t cap) {
  if (scored.empty()) throw std::invalid_argument("selection over an empty population");
  const std::size_t size = scored.size();
  auto sorted = sorted_by_fitness(scored);

  const auto elite_count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.elite_fraction * size)));
  const auto target = std::max(elite_count, static_cast<std::size_t>(std::floor(cfg.selection_target_fraction * size)));

  std::vector<ScoredGene> elites(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(std::min(elite_count, size)));
  if (target > elites.size() && size > elites.size()) {
    std::vector<ScoredGene> pool(sorted.begin() + static_cast<std::ptrdiff_t>(elites.size()), sorted.end());
    std::vector<double> scores(pool.size());
    std::transform(pool.begin(), pool.end(), scores.begin(), [](const ScoredGene& g) { return g.fitness; });
    const Eigen::VectorXd w = selection_weights(scores);
    std::vector<double> weights(w.data(), w.data() + w.size());
    std::vector<std::size_t> taken;
    while (elites.size() < target && taken.size() < pool.size()) {
      const auto pick = weighted_draw(weights, rng);
      weights[pick] = 0.0;  // without replacement; the rest renormalise implicitly
      taken.push_back(pick);
      elites.push_back(pool[pick]);
    }
  }
  elites = sorted_by_fitness(elites);
  if (elites.size() > cap) elites.resize(cap);
  return elites;
}

// ---------------------------------------------------------------------------
// Crossover

Population crossover(std::span<const ScoredGene> elites, const DirectionHints& hints, const ParameterSpace& space,
                     std::size_t n, Rng& rng) {
  if (elites.empty()) throw std::invalid_argument("crossover needs at least one elite");
  const std::size_t m = elites.size();
  Population children{{}, n};
  children.genes.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& a = elites[(2 * c) % m].gene;
    const auto& b = elites[(2 * c + 1) % m].gene;
    ParameterGene child = a;
    for (auto field : kGeneFields) {
      const double u = rng.uniform();
      const double va = a.get(field);
      const double vb = b.get(field);
      if (is_switch(field)) {
        child.set(field, u < 0.5 ? va : vb);
        continue;
      }
      double alpha = u;
      const Hint hint = hints[field];
      if (va != vb && (hint == Hint::Increase || hint == Hint::Decrease)) {
        const bool a_is_hinted = hint == Hint::Increase ? va > vb : va < vb;
        alpha = a_is_hinted ? 0.5 + 0.5 * u : 0.5 * u;
      }
      child.set(field, space.range(field).snap(alpha * va + (1.0 - alpha) * vb));
    }
    children.genes.push_back(space.repair(child));
  }
  return children;
}

// ---------------------------------------------------------------------------
// Mutation

Population mutate(Population population, const ScoredGene& best, const EvolutionConfig& cfg,
                  const ParameterSpace& space, Rng& rng) {
  const std::size_t n = population.size();
  const auto count = std::min(n, static_cast<std::size_t>(std::floor(cfg.mutation_fraction * static_cast<double>(n))));
  if (count == 0) return population;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < count; ++k) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n - 1)));
    std::swap(order[k], order[j]);
  }

  for (std::size_t k = 0; k < count; ++k) {
    ParameterGene& gene = population.genes[order[k]];
    for (auto field : kGeneFields) {
      if (!rng.bernoulli(kFieldMutationProbability)) continue;
      const bool toward_best = rng.bernoulli(cfg.bias_to_best);
      const double current = gene.get(field);
      const double target = best.gene.get(field);
      if (is_switch(field)) {
        gene.set(field, toward_best ? target : (current != 0.0 ? 0.0 : 1.0));
        continue;
      }
      const auto& r = space.range(field);
      if (toward_best) {
        if (current != target) {
          const double step = target > current ? r.step : -r.step;
          gene.set(field, r.snap(current + step));
        }
      } else {
        const auto steps = rng.uniform_int(-kMaxMutationSteps, kMaxMutationSteps);
        gene.set(field, r.snap(current + static_cast<double>(steps) * r.step));
      }
    }
    gene = space.repair(gene);
  }
  return population;
}

ParameterGene random_gene(const ParameterSpace& space, Rng& rng) {
  ParameterGene gene;
  for (auto field : kGeneFields) {
    if (is_switch(field)) {
      gene.set(field, rng.bernoulli(0.5) ? 1.0 : 0.0);
    } else {
      const auto& r = space.range(field);
      gene.set(field, r.at(rng.uniform_int(0, r.steps())));
    }
  }
  return space.repair(gene);
}

// ---------------------------------------------------------------------------
// Advisor

DirectionHints RuleBasedAdvisor::analyze(const CandleSeries& series, const ParameterSpace& space) {
  return analyze_market(series, space);
}

Population RuleBasedAdvisor::generate(const ParameterGene& seed, const DirectionHints& hints,
                                      const ParameterSpace& space, std::size_t n, Rng& rng) {
  return generate_initial_population(seed, hints, space, n, rng);
}

Population RuleBasedAdvisor::breed(std::span<const ScoredGene> elites, const DirectionHints& hints,
                                   const ParameterSpace& space, std::size_t n, Rng& rng) {
  return crossover(elites, hints, space, n, rng);
}

Population RuleBasedAdvisor::mutate(Population population, const ScoredGene& best, const EvolutionConfig& cfg,
                                    const ParameterSpace& space, Rng& rng) {
  return evotrade::mutate(std::move(population), best, cfg, space, rng);
}

// ---------------------------------------------------------------------------
// Driver

OptimizationOutcome optimize(const CandleSeries& series, const EvolutionConfig& cfg, const ExecutionConfig& exec,
                             const FitnessConfig& fit, const OptimizeOptions& options) {
  cfg.validate();
  exec.validate();
  fit.validate();
  const auto& space = options.space;
  space.validate();
  require_in_space(space, options.seed, "seed gene");
  const auto needed = space.max_warmup() + static_cast<std::size_t>(series.bars_per_day());
  if (series.size() < needed) {
    throw DataError(DataError::Kind::InsufficientData, "optimisation window has " + std::to_string(series.size()) +
                                                           " bars, needs at least " + std::to_string(needed));
  }

  RuleBasedAdvisor rules;
  Advisor& advisor = options.advisor ? *options.advisor : rules;
  Rng rng(cfg.rng_seed);
  const std::size_t n = cfg.population_size;

  const DirectionHints hints = advisor.analyze(series, space);
  Population population = advisor.generate(options.seed, hints, space, n, rng);

  OptimizationOutcome outcome;
  std::map<ParameterGene, ScoredGene> seen;
  bool have_best = false;
  std::size_t stale = 0;
  for (std::size_t generation = 0; generation < cfg.max_generations; ++generation) {
    if (population.size() != n) throw std::logic_error("population size drifted from capacity");
    // Backtests are pure, so a gene seen before is not run again.
    Population fresh{{}, 0};
    for (const auto& g : population.genes) {
      if (!seen.contains(g) && std::find(fresh.genes.begin(), fresh.genes.end(), g) == fresh.genes.end()) {
        fresh.genes.push_back(g);
      }
    }
    for (auto& s : evaluate_population(fresh, series, exec, fit, cfg.evaluation_threads)) {
      seen.emplace(s.gene, std::move(s));
    }
    outcome.evaluations += fresh.size();
    std::vector<ScoredGene> scored;
    scored.reserve(n);
    for (const auto& g : population.genes) scored.push_back(seen.at(g));

    const auto top = best_index(scored);
    if (!have_best || scored[top].fitness > outcome.best.fitness) {
      outcome.best = scored[top];
      have_best = true;
      stale = 0;
    } else {
      ++stale;
    }
    double total = 0.0;
    for (const auto& s : scored) total += s.fitness;
    outcome.generation_log.push_back({scored[top].fitness, total / static_cast<double>(scored.size())});
    if (options.on_generation) options.on_generation(generation, scored);

    if (generation + 1 == cfg.max_generations || stale >= cfg.plateau_patience) break;

    const auto elites = select_elites(scored, cfg, rng, n);
    population = advisor.breed(elites, hints, space, n, rng);
    population = advisor.mutate(std::move(population), outcome.best, cfg, space, rng);
    population.genes.front() = outcome.best.gene;
  }
  return outcome;
}

OptimizationOutcome random_search(const CandleSeries& series, std::size_t budget, const ExecutionConfig& exec,
                                  const FitnessConfig& fit, const ParameterSpace& space, std::uint64_t seed,
                                  std::size_t threads) {
  if (budget == 0) throw std::invalid_argument("random search needs a positive budget");
  space.validate();
  Rng rng(seed);
  Population pop{{}, budget};
  pop.genes.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) pop.genes.push_back(random_gene(space, rng));
  const auto scored = evaluate_population(pop, series, exec, fit, threads);
  OptimizationOutcome outcome;
  outcome.best = scored[best_index(scored)];
  outcome.evaluations = budget;
  double total = 0.0;
  for (const auto& s : scored) total += s.fitness;
  outcome.generation_log.push_back({outcome.best.fitness, total / static_cast<double>(budget)});
  return outcome;
}

}  // namespace evotrade
