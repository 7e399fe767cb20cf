#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "alamp/acquisition.hpp"
#include "alamp/random.hpp"

using namespace alamp;

namespace {

ProbMatrix probs(std::vector<SampleId> ids, std::vector<std::vector<double>> rows) {
  ProbMatrix p;
  p.sample_ids = std::move(ids);
  p.rows = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      p.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return p;
}

ProbMatrix random_probs(Rng& rng, std::size_t n, int classes, SampleId first = 0) {
  ProbMatrix p;
  p.rows = Matrix(static_cast<Eigen::Index>(n), classes);
  for (std::size_t i = 0; i < n; ++i) {
    p.sample_ids.push_back(first + static_cast<SampleId>(i));
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += p.rows(static_cast<Eigen::Index>(i), c) = rng.uniform() + 1e-3;
    p.rows.row(static_cast<Eigen::Index>(i)) /= sum;
  }
  return p;
}

Dataset line(std::vector<double> xs) {
  Matrix x(static_cast<Eigen::Index>(xs.size()), 1);
  std::vector<int> y;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = xs[i];
    y.push_back(static_cast<int>(i % 2));
  }
  return Dataset(x, y, 2);
}

// Greedy k-center by brute force: recompute every nearest distance from scratch.
std::vector<SampleId> brute_coreset(const Dataset& d, std::vector<SampleId> covered,
                                    std::vector<SampleId> candidates, std::size_t batch) {
  std::vector<SampleId> picks;
  std::sort(candidates.begin(), candidates.end());
  for (std::size_t k = 0; k < batch; ++k) {
    SampleId best = -1;
    double best_dist = -1.0;
    for (SampleId c : candidates) {
      if (std::find(picks.begin(), picks.end(), c) != picks.end()) continue;
      double nearest = 1e300;
      for (SampleId s : covered)
        nearest = std::min(nearest, (d.features().row(d.row_of(c)) - d.features().row(d.row_of(s))).norm());
      if (nearest > best_dist) {
        best_dist = nearest;
        best = c;
      }
    }
    picks.push_back(best);
    covered.push_back(best);
  }
  return picks;
}

}  // namespace

TEST_CASE("margin scores") {
  const ScoredPool s = margin_scores(probs({0, 1}, {{0.6, 0.3, 0.1}, {0.25, 0.25, 0.5}}));
  CHECK(s.score_of(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.score_of(1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(margin_scores(probs({4}, {{0.25, 0.25, 0.25, 0.25}})).score_of(4) == 0.0);

  const ScoredPool ab = margin_scores(probs({10, 11}, {{0.6, 0.3, 0.1}, {0.4, 0.35, 0.25}}));
  CHECK(ab.order == std::vector<SampleId>{11, 10});
  CHECK(ab.direction == SortDirection::kAscending);
  CHECK_THROWS_AS(ab.score_of(3), std::out_of_range);
}

TEST_CASE("margin scores lie in [0, 1]") {
  Rng rng(3);
  const ScoredPool s = margin_scores(random_probs(rng, 300, 5));
  for (double v : s.scores) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("scored pool ties go to the lower id") {
  const ScoredPool s = make_scored_pool({7, 3, 5}, {0.5, 0.5, 0.1}, SortDirection::kDescending);
  CHECK(s.order == std::vector<SampleId>{3, 7, 5});
  const ScoredPool a = make_scored_pool({7, 3, 5}, {0.5, 0.5, 0.1}, SortDirection::kAscending);
  CHECK(a.order == std::vector<SampleId>{5, 3, 7});
}

TEST_CASE("alamp scores") {
  const auto pool = [](std::vector<SampleId> ids, std::vector<double> m) {
    return make_scored_pool(std::move(ids), std::move(m), SortDirection::kAscending);
  };
  // (0.8 - 0.2) / (0.8 + 0.2)
  CHECK(alamp_scores(pool({0}, {0.8}), pool({0}, {0.2})).score_of(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(alamp_scores(pool({0}, {0.4}), pool({0}, {0.4})).score_of(0) == 0.0);
  CHECK(alamp_scores(pool({0}, {0.0}), pool({0}, {0.0})).score_of(0) == 0.0);

  // a: 0.6 -> 0.3 gives 1/3, b: 0.4 -> 0.3 gives 1/7; the larger shift first
  const ScoredPool s = alamp_scores(pool({1, 2}, {0.6, 0.4}), pool({1, 2}, {0.3, 0.3}));
  CHECK(s.score_of(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(s.score_of(2) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(s.order == std::vector<SampleId>{1, 2});
  CHECK(s.direction == SortDirection::kDescending);

  // equal absolute shift: the lower certainty sum ranks first
  const ScoredPool eq = alamp_scores(pool({1, 2}, {0.4, 0.8}), pool({1, 2}, {0.2, 0.6}));
  CHECK(eq.score_of(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(eq.score_of(2) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(eq.order == std::vector<SampleId>{1, 2});

  // the previous pool may hold extra ids but must cover the current one
  CHECK_NOTHROW(alamp_scores(pool({1, 2, 3}, {0.1, 0.2, 0.3}), pool({2}, {0.1})));
  CHECK_THROWS_AS(alamp_scores(pool({1}, {0.1}), pool({1, 2}, {0.1, 0.2})), std::invalid_argument);
}

TEST_CASE("alamp scores are bounded, antisymmetric and scale invariant") {
  Rng rng(11);
  std::vector<SampleId> ids;
  std::vector<double> m1, m2, m1k, m2k;
  for (SampleId i = 0; i < 200; ++i) {
    ids.push_back(i);
    m1.push_back(rng.uniform());
    m2.push_back(rng.uniform());
    const double k = 0.01 + rng.uniform();
    m1k.push_back(m1.back() * k);
    m2k.push_back(m2.back() * k);
  }
  const auto up = SortDirection::kAscending;
  const ScoredPool forward = alamp_scores(make_scored_pool(ids, m1, up), make_scored_pool(ids, m2, up));
  const ScoredPool back = alamp_scores(make_scored_pool(ids, m2, up), make_scored_pool(ids, m1, up));
  const ScoredPool scaled = alamp_scores(make_scored_pool(ids, m1k, up), make_scored_pool(ids, m2k, up));
  for (SampleId i : ids) {
    CHECK(std::abs(forward.score_of(i)) <= 1.0);
    CHECK(forward.score_of(i) == doctest::Approx(-back.score_of(i)).epsilon(1e-12));
    CHECK(std::abs(forward.score_of(i) - scaled.score_of(i)) <= 1e-9);
  }
}

TEST_CASE("random_select") {
  std::vector<SampleId> pool(50);
  for (SampleId i = 0; i < 50; ++i) pool[static_cast<std::size_t>(i)] = 100 + i;

  const auto a = random_select(pool, 10, 7);
  CHECK(a == random_select(pool, 10, 7));
  CHECK(a.size() == 10);
  CHECK(std::set<SampleId>(a.begin(), a.end()).size() == 10);
  for (SampleId id : a) CHECK(std::find(pool.begin(), pool.end(), id) != pool.end());
  CHECK(a != random_select(pool, 10, 8));

  const auto all = random_select(pool, 50, 1);
  CHECK(std::set<SampleId>(all.begin(), all.end()) == std::set<SampleId>(pool.begin(), pool.end()));
  CHECK(random_select(pool, 0, 1).empty());
  CHECK_THROWS_AS(random_select(pool, 51, 1), std::invalid_argument);

  const auto order = random_order(pool, 7);
  CHECK(std::set<SampleId>(order.begin(), order.end()).size() == 50);
}

TEST_CASE("random_select is roughly uniform") {
  std::vector<SampleId> pool{0, 1, 2, 3, 4};
  std::vector<int> hits(5, 0);
  for (std::uint64_t seed = 0; seed < 5000; ++seed)
    for (SampleId id : random_select(pool, 2, seed)) ++hits[static_cast<std::size_t>(id)];
  // expected 2000 each, sd about 35
  for (int h : hits) CHECK(std::abs(h - 2000) < 200);
}

TEST_CASE("coreset picks the farthest point first") {
  const Dataset d = line({0.0, 1.0, 3.0, 0.5});
  const std::vector<SampleId> labeled{0};
  const std::vector<SampleId> unlabeled{1, 2, 3};
  CHECK(coreset_select(d, labeled, unlabeled, 1) == std::vector<SampleId>{2});
  // after 3.0 is covered, 1.0 is 1.0 away from 0 and 2.0 away from 3
  CHECK(coreset_select(d, labeled, unlabeled, 2) == std::vector<SampleId>{2, 1});
}

TEST_CASE("coreset never picks a point coincident with a labeled one first") {
  const Dataset d = line({0.0, 0.0, 2.0, 1.0});
  const std::vector<SampleId> labeled{0};
  const std::vector<SampleId> unlabeled{1, 2, 3};
  const auto picks = coreset_select(d, labeled, unlabeled, 2);
  CHECK(picks == std::vector<SampleId>{2, 3});
  // ties go to the lower id
  const Dataset sym = line({0.0, -1.0, 1.0});
  CHECK(coreset_select(sym, std::vector<SampleId>{0}, std::vector<SampleId>{2, 1}, 1) ==
        std::vector<SampleId>{1});
}

TEST_CASE("coreset agrees with brute-force greedy k-center") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 6 + static_cast<int>(rng.below(20));
    const int dim = 1 + static_cast<int>(rng.below(4));
    Matrix x(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = rng.normal();
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % 2;
    const Dataset d(x, y, 2);

    std::vector<SampleId> ids = d.sample_ids();
    rng.shuffle(std::span<SampleId>(ids));
    const std::size_t n_labeled = 1 + rng.below(3);
    std::vector<SampleId> labeled(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_labeled));
    std::vector<SampleId> unlabeled(ids.begin() + static_cast<std::ptrdiff_t>(n_labeled), ids.end());
    const std::size_t batch = 1 + rng.below(unlabeled.size());
    CHECK(coreset_select(d, labeled, unlabeled, batch) == brute_coreset(d, labeled, unlabeled, batch));
  }
}

TEST_CASE("coreset rejects an empty labeled set and oversize batches") {
  const Dataset d = line({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(coreset_select(d, std::vector<SampleId>{}, std::vector<SampleId>{0, 1}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(coreset_select(d, std::vector<SampleId>{0}, std::vector<SampleId>{1, 2}, 3),
                  std::invalid_argument);
}

TEST_CASE("diversify") {
  const std::vector<SampleId> ids{0, 1, 2, 3};  // a, b, c, d
  const PseudoClassMap pseudo(ids, std::vector<int>{0, 0, 1, 1});

  SUBCASE("one pick per pseudo class per pass") {
    CHECK(diversify(ids, pseudo, 2) == std::vector<SampleId>{0, 2});
    CHECK(diversify(ids, pseudo, 3) == std::vector<SampleId>{0, 2, 1});
  }
  SUBCASE("a single pseudo class still fills the batch over several passes") {
    const PseudoClassMap one(ids, std::vector<int>{4, 4, 4, 4});
    CHECK(diversify(ids, one, 3) == std::vector<SampleId>{0, 1, 2});
  }
  SUBCASE("a batch as large as the pool takes everything") {
    const auto all = diversify(ids, pseudo, 4);
    CHECK(std::set<SampleId>(all.begin(), all.end()) == std::set<SampleId>(ids.begin(), ids.end()));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(diversify(ids, pseudo, 5), std::invalid_argument);
    CHECK_THROWS_AS(diversify(std::vector<SampleId>{0, 9}, pseudo, 1), std::invalid_argument);
  }
}

TEST_CASE("diversify balances pseudo classes and follows the ordering") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    const int classes = 1 + static_cast<int>(rng.below(6));
    std::vector<SampleId> ids(n);
    std::vector<int> cls(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = static_cast<SampleId>(i);
      cls[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    }
    const PseudoClassMap pseudo(ids, cls);
    rng.shuffle(std::span<SampleId>(ids));
    const std::size_t batch = 1 + rng.below(n);
    const auto picked = diversify(ids, pseudo, batch);
    REQUIRE(picked.size() == batch);
    CHECK(std::set<SampleId>(picked.begin(), picked.end()).size() == batch);

    std::map<int, int> available, taken;
    for (SampleId id : ids) ++available[pseudo.at(id)];
    for (SampleId id : picked) ++taken[pseudo.at(id)];
    // no class runs more than one ahead of a class that still has samples
    for (auto [a, ta] : taken)
      for (auto [b, nb] : available)
        if (taken[b] < nb) CHECK(ta <= taken[b] + 1);
    // within a class the picks are the earliest in the ordering
    std::map<int, int> seen;
    const std::set<SampleId> chosen(picked.begin(), picked.end());
    for (SampleId id : ids) {
      const int c = pseudo.at(id);
      if (seen[c] < taken[c]) CHECK(chosen.contains(id));
      else CHECK_FALSE(chosen.contains(id));
      ++seen[c];
    }
  }
}

TEST_CASE("pseudo classes") {
  const PseudoClassMap p = pseudo_classes(probs({5, 6, 7}, {{0.1, 0.7, 0.2}, {0.4, 0.4, 0.2}, {0.2, 0.3, 0.5}}));
  CHECK(p.at(5) == 1);
  CHECK(p.at(6) == 0);
  CHECK(p.at(7) == 2);
  CHECK(p.size() == 3);
  CHECK_THROWS_AS(p.at(8), std::invalid_argument);

  Rng rng(2);
  const ProbMatrix many = random_probs(rng, 100, 4, 1000);
  const PseudoClassMap all = pseudo_classes(many);
  for (SampleId id : many.sample_ids) CHECK(all.contains(id));
}
