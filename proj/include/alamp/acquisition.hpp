#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "alamp/classifier.hpp"

namespace alamp {

enum class SortDirection { kAscending, kDescending };

/// Scores over an unlabeled pool and the selection order they induce.
/// Equal scores are ordered by ascending sample id.
struct ScoredPool {
  std::vector<SampleId> sample_ids;
  std::vector<double> scores;
  std::vector<SampleId> order;
  SortDirection direction = SortDirection::kAscending;

  /// Score of `id`; throws std::out_of_range when absent.
  double score_of(SampleId id) const;
};

/// Builds a ScoredPool, sorting by score in `direction` then by id.
ScoredPool make_scored_pool(std::vector<SampleId> ids, std::vector<double> scores,
                            SortDirection direction);

/// Predicted class per sample, used only to spread a batch over regions.
class PseudoClassMap {
 public:
  PseudoClassMap() = default;
  PseudoClassMap(std::span<const SampleId> ids, std::span<const int> classes);

  int at(SampleId id) const;
  bool contains(SampleId id) const { return classes_.contains(id); }
  std::size_t size() const { return classes_.size(); }

 private:
  std::unordered_map<SampleId, int> classes_;
};

/// Difference of the two largest probabilities per row; ascending order.
ScoredPool margin_scores(const ProbMatrix& probs);

/// Relative shift from certainty to uncertainty between two iterations:
///   (prev - curr) / (prev + curr), 0 when both margins are 0.
/// Scores every id of `curr`; descending order.
ScoredPool alamp_scores(const ScoredPool& prev, const ScoredPool& curr);

/// Uniform sample without replacement, in draw order.
std::vector<SampleId> random_select(std::span<const SampleId> pool_ids, std::size_t batch,
                                    std::uint64_t seed);

/// Seeded permutation of the whole pool.
std::vector<SampleId> random_order(std::span<const SampleId> pool_ids, std::uint64_t seed);

/// Greedy k-center selection. Each pick is the unlabeled point farthest (in
/// Euclidean distance) from its nearest covered point, ties to the lowest id;
/// the pick then joins the covered set. Distances use the dataset's features
/// as given (pass a standardized dataset for standardized distances).
std::vector<SampleId> coreset_select(const Dataset& dataset,
                                     std::span<const SampleId> labeled_ids,
                                     std::span<const SampleId> unlabeled_ids, std::size_t batch);

/// Pass-based diversification: every pass walks `ordered_ids` and takes a
/// sample only if its pseudo class is new in that pass and the sample is not
/// taken yet. Passes repeat until `batch` samples are taken.
std::vector<SampleId> diversify(std::span<const SampleId> ordered_ids,
                                const PseudoClassMap& pseudo, std::size_t batch);

/// Argmax class per row, ties to the lowest class id.
PseudoClassMap pseudo_classes(const ProbMatrix& probs);

}  // namespace alamp
