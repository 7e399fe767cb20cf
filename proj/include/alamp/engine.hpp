#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alamp/acquisition.hpp"
#include "alamp/classifier.hpp"
#include "alamp/dataset.hpp"
#include "alamp/metrics.hpp"

namespace alamp {

enum class Strategy { kRandom, kMargin, kCoreset, kAlamp, kAlampDiv, kRandDiv, kMargDiv };

inline constexpr Strategy kAllStrategies[] = {Strategy::kRandom,  Strategy::kMargin,
                                              Strategy::kCoreset, Strategy::kAlamp,
                                              Strategy::kAlampDiv, Strategy::kRandDiv,
                                              Strategy::kMargDiv};

std::string_view strategy_name(Strategy s);
/// Throws std::invalid_argument for unknown names.
Strategy parse_strategy(std::string_view name);

/// Total budget b spent over t rounds of b/t samples, the first round being
/// the random seed batch.
struct BudgetPlan {
  int total_budget = 3200;
  int iterations = 16;

  int batch() const { return total_budget / iterations; }
  /// Throws std::invalid_argument unless b % t == 0, b/t >= 1 and b < pool size.
  void validate(std::int64_t pool_size) const;
  void validate() const;
};

struct PoolState {
  std::vector<SampleId> labeled_ids;    // ascending
  std::vector<SampleId> unlabeled_ids;  // ascending
  int iteration = 0;
  std::optional<ProbMatrix> prev_probs;
  std::optional<PseudoClassMap> prev_pseudo;
};

struct EngineOptions {
  bool cost_sensitive = true;
  std::vector<double> reg_grid = kDefaultRegGrid;
  int folds = kDefaultFolds;
  /// Used when the labeled pool has fewer than two classes with two samples.
  double fallback_reg = 1.0;
  TrainOptions train;
  int max_init_attempts = 10;
};

/// Seeds of the per-iteration random streams of a run.
std::uint64_t selection_seed(std::uint64_t run_seed, int iteration);
std::uint64_t cv_seed(std::uint64_t run_seed, int iteration);

/// Class weights, regularization by cross-validation and a fresh model, all
/// from the labeled pool.
Model fit_pool_model(const Dataset& train, std::span<const SampleId> labeled_ids,
                     std::uint64_t cv_seed, const EngineOptions& options = {});

struct InitResult {
  PoolState state;
  Model model;
};

/// Random seed batch of size b/t and the first model. A draw covering fewer
/// than two classes is redrawn with seed + 1, up to max_init_attempts.
InitResult init_pool(const Dataset& train, const BudgetPlan& plan, std::uint64_t seed,
                     const EngineOptions& options = {});

/// Picks the next batch from `current` (probabilities over the unlabeled
/// pool). `coreset_space` holds the features coreset measures distances in.
std::vector<SampleId> select_batch(Strategy strategy, const PoolState& state,
                                   const ProbMatrix& current, std::size_t batch,
                                   std::uint64_t seed, const Dataset& coreset_space);

struct StepResult {
  PoolState state;
  Model model;
  std::vector<SampleId> selected;
};

/// One round: score the pool, select, label from `train`, keep the current
/// probabilities for the next round and retrain from scratch.
StepResult step(const PoolState& state, const Model& model, Strategy strategy,
                const Dataset& train, const BudgetPlan& plan, std::uint64_t run_seed,
                const EngineOptions& options = {});

/// Initial pool and t-1 steps, recording test accuracy and the labeled-pool
/// class profile after every training.
Report run_experiment(const Dataset& train, const Dataset& test, Strategy strategy,
                      const BudgetPlan& plan, std::uint64_t seed,
                      const EngineOptions& options = {}, std::string dataset_name = "");

/// Same, continuing from a precomputed init_pool result for `seed`.
Report run_experiment(const Dataset& train, const Dataset& test, Strategy strategy,
                      const BudgetPlan& plan, std::uint64_t seed, const InitResult& init,
                      const EngineOptions& options = {}, std::string dataset_name = "");

/// Every (strategy, seed) pair, sharing each seed's initial pool and model.
/// Runs are spread over `threads` workers; the output is ordered strategy
/// major, seed minor, and does not depend on the thread count.
std::vector<Report> run_batch(const Dataset& train, const Dataset& test,
                              std::span<const Strategy> strategies,
                              std::span<const std::uint64_t> seeds, const BudgetPlan& plan,
                              const EngineOptions& options = {}, int threads = 1,
                              const std::string& dataset_name = "");

}  // namespace alamp
