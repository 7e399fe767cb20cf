#include "alamp/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "alamp/random.hpp"

namespace alamp {

double ScoredPool::score_of(SampleId id) const {
  for (std::size_t i = 0; i < sample_ids.size(); ++i)
    if (sample_ids[i] == id) return scores[i];
  throw std::out_of_range("sample " + std::to_string(id) + " is not scored");
}

ScoredPool make_scored_pool(std::vector<SampleId> ids, std::vector<double> scores,
                            SortDirection direction) {
  if (ids.size() != scores.size()) throw std::invalid_argument("ids and scores disagree in length");
  std::vector<std::size_t> idx(ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b])
      return direction == SortDirection::kAscending ? scores[a] < scores[b] : scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  ScoredPool pool;
  pool.order.reserve(ids.size());
  for (std::size_t i : idx) pool.order.push_back(ids[i]);
  pool.sample_ids = std::move(ids);
  pool.scores = std::move(scores);
  pool.direction = direction;
  return pool;
}

PseudoClassMap::PseudoClassMap(std::span<const SampleId> ids, std::span<const int> classes) {
  if (ids.size() != classes.size())
    throw std::invalid_argument("ids and pseudo classes disagree in length");
  classes_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) classes_.emplace(ids[i], classes[i]);
}

int PseudoClassMap::at(SampleId id) const {
  const auto it = classes_.find(id);
  if (it == classes_.end())
    throw std::invalid_argument("sample " + std::to_string(id) + " has no pseudo class");
  return it->second;
}

ScoredPool margin_scores(const ProbMatrix& probs) {
  if (probs.rows.cols() < 2) throw std::invalid_argument("margin needs at least 2 classes");
  if (probs.sample_ids.size() != static_cast<std::size_t>(probs.rows.rows()))
    throw std::invalid_argument("probability rows and sample ids disagree in length");
  std::vector<double> scores(probs.sample_ids.size());
  for (Eigen::Index i = 0; i < probs.rows.rows(); ++i) {
    double first = -1.0;
    double second = -1.0;
    for (Eigen::Index c = 0; c < probs.rows.cols(); ++c) {
      const double p = probs.rows(i, c);
      if (p > first) {
        second = first;
        first = p;
      } else if (p > second) {
        second = p;
      }
    }
    scores[static_cast<std::size_t>(i)] = first - second;
  }
  return make_scored_pool(probs.sample_ids, std::move(scores), SortDirection::kAscending);
}

ScoredPool alamp_scores(const ScoredPool& prev, const ScoredPool& curr) {
  std::unordered_map<SampleId, double> prev_by_id;
  prev_by_id.reserve(prev.sample_ids.size());
  for (std::size_t i = 0; i < prev.sample_ids.size(); ++i)
    prev_by_id.emplace(prev.sample_ids[i], prev.scores[i]);

  std::vector<double> scores;
  scores.reserve(curr.sample_ids.size());
  for (std::size_t i = 0; i < curr.sample_ids.size(); ++i) {
    const auto it = prev_by_id.find(curr.sample_ids[i]);
    if (it == prev_by_id.end())
      throw std::invalid_argument("sample " + std::to_string(curr.sample_ids[i]) +
                                  " has no previous margin");
    const double before = it->second;
    const double now = curr.scores[i];
    const double sum = before + now;
    scores.push_back(sum == 0.0 ? 0.0 : (before - now) / sum);
  }
  return make_scored_pool(curr.sample_ids, std::move(scores), SortDirection::kDescending);
}

std::vector<SampleId> random_select(std::span<const SampleId> pool_ids, std::size_t batch,
                                    std::uint64_t seed) {
  if (batch > pool_ids.size())
    throw std::invalid_argument("batch " + std::to_string(batch) + " exceeds pool size " +
                                std::to_string(pool_ids.size()));
  std::vector<SampleId> pool(pool_ids.begin(), pool_ids.end());
  Rng rng(seed);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(batch);
  return pool;
}

std::vector<SampleId> random_order(std::span<const SampleId> pool_ids, std::uint64_t seed) {
  return random_select(pool_ids, pool_ids.size(), seed);
}

std::vector<SampleId> coreset_select(const Dataset& dataset,
                                     std::span<const SampleId> labeled_ids,
                                     std::span<const SampleId> unlabeled_ids, std::size_t batch) {
  if (labeled_ids.empty()) throw std::invalid_argument("coreset needs a non-empty labeled set");
  if (batch > unlabeled_ids.size())
    throw std::invalid_argument("batch " + std::to_string(batch) + " exceeds pool size " +
                                std::to_string(unlabeled_ids.size()));

  std::vector<SampleId> candidates(unlabeled_ids.begin(), unlabeled_ids.end());
  std::sort(candidates.begin(), candidates.end());
  const Matrix& x = dataset.features();
  std::vector<Eigen::Index> rows;
  rows.reserve(candidates.size());
  for (SampleId id : candidates) rows.push_back(dataset.row_of(id));

  std::vector<double> nearest(candidates.size(), std::numeric_limits<double>::infinity());
  for (SampleId l : labeled_ids) {
    const auto anchor = x.row(dataset.row_of(l));
    for (std::size_t u = 0; u < candidates.size(); ++u)
      nearest[u] = std::min(nearest[u], (x.row(rows[u]) - anchor).norm());
  }

  std::vector<char> taken(candidates.size(), 0);
  std::vector<SampleId> selected;
  selected.reserve(batch);
  while (selected.size() < batch) {
    std::size_t best = candidates.size();
    for (std::size_t u = 0; u < candidates.size(); ++u) {
      if (taken[u]) continue;
      if (best == candidates.size() || nearest[u] > nearest[best]) best = u;
    }
    taken[best] = 1;
    selected.push_back(candidates[best]);
    const auto anchor = x.row(rows[best]);
    for (std::size_t u = 0; u < candidates.size(); ++u)
      if (!taken[u]) nearest[u] = std::min(nearest[u], (x.row(rows[u]) - anchor).norm());
  }
  return selected;
}

std::vector<SampleId> diversify(std::span<const SampleId> ordered_ids,
                                const PseudoClassMap& pseudo, std::size_t batch) {
  if (batch > ordered_ids.size())
    throw std::invalid_argument("batch " + std::to_string(batch) + " exceeds candidate count " +
                                std::to_string(ordered_ids.size()));
  std::vector<int> classes;
  classes.reserve(ordered_ids.size());
  for (SampleId id : ordered_ids) classes.push_back(pseudo.at(id));

  std::vector<SampleId> selected;
  selected.reserve(batch);
  std::vector<char> taken(ordered_ids.size(), 0);
  while (selected.size() < batch) {
    std::vector<int> seen;
    for (std::size_t i = 0; i < ordered_ids.size(); ++i) {
      if (std::find(seen.begin(), seen.end(), classes[i]) != seen.end()) continue;
      if (taken[i]) continue;
      taken[i] = 1;
      selected.push_back(ordered_ids[i]);
      seen.push_back(classes[i]);
    }
  }
  selected.resize(batch);
  return selected;
}

PseudoClassMap pseudo_classes(const ProbMatrix& probs) {
  std::vector<int> classes(probs.sample_ids.size());
  for (Eigen::Index i = 0; i < probs.rows.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.rows.cols(); ++c)
      if (probs.rows(i, c) > probs.rows(i, best)) best = c;
    classes[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return PseudoClassMap(probs.sample_ids, classes);
}

}  // namespace alamp
