#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "alamp/classifier.hpp"
#include "alamp/random.hpp"

using namespace alamp;

namespace {

Model identity_model(const Matrix& weights, const Vector& biases) {
  Model m;
  m.weights = weights;
  m.biases = biases;
  m.standardizer.mean = Eigen::RowVectorXd::Zero(weights.cols());
  m.standardizer.scale = Eigen::RowVectorXd::Ones(weights.cols());
  m.class_weights.assign(static_cast<std::size_t>(weights.rows()), 1.0);
  return m;
}

// Relative error of the analytic gradient against central differences of the
// objective values, over all weights and biases.
double gradient_error(const OvrObjective& obj, const Matrix& w, const Vector& b) {
  Matrix gw;
  Vector gb;
  obj.gradient(w, b, gw, gb);
  const double h = 1e-6;
  double diff = 0.0;
  double scale = 0.0;
  for (Eigen::Index c = 0; c < w.rows(); ++c) {
    for (Eigen::Index j = 0; j <= w.cols(); ++j) {
      Matrix wp = w, wm = w;
      Vector bp = b, bm = b;
      if (j < w.cols()) {
        wp(c, j) += h;
        wm(c, j) -= h;
      } else {
        bp(c) += h;
        bm(c) -= h;
      }
      const double numeric = (obj.values(wp, bp)(c) - obj.values(wm, bm)(c)) / (2 * h);
      const double analytic = j < w.cols() ? gw(c, j) : gb(c);
      diff += (numeric - analytic) * (numeric - analytic);
      scale += analytic * analytic;
    }
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

}  // namespace

TEST_CASE("class_weights") {
  CHECK(class_weights({{10, 10}}) == std::vector<double>{1.0, 1.0});
  const auto w = class_weights({{30, 10}});
  CHECK(w[0] == doctest::Approx(40.0 / 60.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(class_weights({{5}}) == std::vector<double>{1.0});
  // an absent class is weighted as if it had one sample
  const auto absent = class_weights({{6, 0, 2}});
  CHECK(absent[1] == doctest::Approx(8.0 / 3.0));
}

TEST_CASE("class_weights average one under balance") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 2 + rng.below(10);
    const auto per = static_cast<std::int64_t>(1 + rng.below(100));
    const auto w = class_weights({std::vector<std::int64_t>(n, per)});
    for (double v : w) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("standardizer leaves constant dimensions unscaled") {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const Standardizer s = Standardizer::fit(x);
  const Matrix z = s.apply(x);
  CHECK(z(0, 1) == 0.0);
  CHECK(s.scale(1) == 1.0);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(std::sqrt(z.col(0).squaredNorm() / 3.0) == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5, dim = 3, classes = 3;
    Matrix x(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = rng.normal();
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(classes));
    std::vector<double> cw(classes);
    for (auto& v : cw) v = 0.5 + rng.uniform() * 2.0;
    const double reg = std::pow(10.0, rng.uniform(-3.0, 1.0));
    Matrix w(classes, dim);
    for (int c = 0; c < classes; ++c)
      for (int j = 0; j < dim; ++j) w(c, j) = 0.5 * rng.normal();
    Vector b(classes);
    for (int c = 0; c < classes; ++c) b(c) = 0.5 * rng.normal();
    const OvrObjective obj{x, y, cw, reg};
    CHECK(gradient_error(obj, w, b) <= 1e-5);
  }
}

TEST_CASE("separable 1-D classes") {
  Matrix x(4, 1);
  x << -1.2, -1.0, 1.0, 1.3;
  const std::vector<int> y{0, 0, 1, 1};
  const Model m = train(x, y, class_weights(count_classes(y, 2)), 0.01);
  const Matrix d = decision_values(m, x);
  for (int i = 0; i < 4; ++i) {
    // class 1's decision value is positive exactly on class-1 points
    CHECK((d(i, 1) > 0) == (y[static_cast<std::size_t>(i)] == 1));
    CHECK((d(i, 0) > 0) == (y[static_cast<std::size_t>(i)] == 0));
  }
  CHECK(predict(m, x) == y);
}

TEST_CASE("training is deterministic") {
  const Dataset d = make_synthetic(3, 15, 4, 0.8, 5);
  const auto cw = class_weights(d.class_counts());
  const Model a = train(d.features(), d.labels(), cw, 0.1);
  const Model b = train(d.features(), d.labels(), cw, 0.1);
  CHECK((a.weights.array() == b.weights.array()).all());
  CHECK((a.biases.array() == b.biases.array()).all());
}

TEST_CASE("objectives never increase during training") {
  const Dataset d = make_synthetic(4, 10, 3, 1.0, 8);
  const auto cw = class_weights(d.class_counts());
  const Standardizer s = Standardizer::fit(d.features());
  const Matrix x = s.apply(d.features());
  const OvrObjective obj{x, d.labels(), cw, 0.01};
  Vector previous = obj.values(Matrix::Zero(4, 3), Vector::Zero(4));
  for (int iters : {1, 5, 20, 100}) {
    const Model m = train(d.features(), d.labels(), cw, 0.01, {iters, 0.1});
    const Vector now = obj.values(m.weights, m.biases);
    for (int c = 0; c < 4; ++c) CHECK(now(c) <= previous(c));
    previous = now;
  }
}

TEST_CASE("well separated blobs are fit exactly") {
  const Dataset d = make_synthetic(4, 20, 8, 0.05, 21);
  // oracle: every point lies closer to its own class mean than half the
  // distance to any other class mean, so the classes are linearly separable
  std::vector<Eigen::RowVectorXd> means(4, Eigen::RowVectorXd::Zero(8));
  for (Eigen::Index i = 0; i < d.n_samples(); ++i) means[static_cast<std::size_t>(d.labels()[static_cast<std::size_t>(i)])] += d.features().row(i) / 20.0;
  double radius = 0.0;
  for (Eigen::Index i = 0; i < d.n_samples(); ++i)
    radius = std::max(radius, (d.features().row(i) - means[static_cast<std::size_t>(d.labels()[static_cast<std::size_t>(i)])]).norm());
  double gap = 1e9;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) gap = std::min(gap, (means[static_cast<std::size_t>(a)] - means[static_cast<std::size_t>(b)]).norm());
  REQUIRE(2.0 * radius < gap);

  const Model m = train(d.features(), d.labels(), class_weights(d.class_counts()), 1e-3);
  CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("train rejects bad input") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(train(x, std::vector<int>{0, 0, 0}, std::vector<double>{1, 1}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(train(x, std::vector<int>{0, 1, 0}, std::vector<double>{1, 1}, 0.0), std::invalid_argument);
  x(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train(x, std::vector<int>{0, 1, 0}, std::vector<double>{1, 1}, 1.0), std::invalid_argument);
}

TEST_CASE("softmax probabilities") {
  Matrix equal(1, 4);
  equal << 0.3, 0.3, 0.3, 0.3;
  const Matrix p = softmax_rows(equal);
  for (int c = 0; c < 4; ++c) CHECK(p(0, c) == doctest::Approx(0.25).epsilon(1e-15));

  Matrix two(1, 2);
  two << std::numbers::ln2, 0.0;
  const Matrix q = softmax_rows(two);
  CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(q(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Rng rng(4);
  Matrix wild(200, 7);
  for (Eigen::Index i = 0; i < wild.rows(); ++i)
    for (Eigen::Index c = 0; c < wild.cols(); ++c) wild(i, c) = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
  const Matrix r = softmax_rows(wild);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    CHECK(std::abs(r.row(i).sum() - 1.0) <= 1e-6);
    CHECK(r.row(i).minCoeff() >= 0.0);
    CHECK(r.row(i).maxCoeff() <= 1.0);
  }
}

TEST_CASE("predict takes the argmax with ties to the lowest class") {
  Matrix w(2, 1);
  w << 0.9, 0.1;
  const Model m = identity_model(w, Vector::Zero(2));
  Matrix x(1, 1);
  x << 1.0;
  CHECK(predict(m, x) == std::vector<int>{0});

  Matrix tied(2, 1);
  tied << 0.5, 0.5;
  const Model t = identity_model(tied, Vector::Zero(2));
  CHECK(predict(t, x) == std::vector<int>{0});

  Matrix bad(1, 2);
  bad << 1, 2;
  CHECK_THROWS_AS(predict(m, bad), std::invalid_argument);
  CHECK_THROWS_AS(predict_proba(m, bad, std::vector<SampleId>{0}), std::invalid_argument);
}

TEST_CASE("predict agrees with the argmax of predict_proba") {
  const Dataset d = make_synthetic(5, 30, 4, 1.5, 12);
  const Model m = train(d.features(), d.labels(), class_weights(d.class_counts()), 0.1);
  const ProbMatrix p = predict_proba(m, d);
  const auto labels = predict(m, d.features());
  for (Eigen::Index i = 0; i < p.rows.rows(); ++i) {
    Eigen::Index best = 0;
    p.rows.row(i).maxCoeff(&best);
    CHECK(labels[static_cast<std::size_t>(i)] == best);
    CHECK(std::abs(p.rows.row(i).sum() - 1.0) <= 1e-6);
  }
  CHECK(p.sample_ids == d.sample_ids());
}

TEST_CASE("accuracy") {
  Matrix w(2, 1);
  w << 1.0, -1.0;
  const Model m = identity_model(w, Vector::Zero(2));
  Matrix x(2, 1);
  x << 1.0, -1.0;  // predicted 0, 1
  CHECK(accuracy(m, x, std::vector<int>{0, 1}) == 1.0);
  CHECK(accuracy(m, x, std::vector<int>{1, 0}) == 0.0);
  CHECK(accuracy(m, x, std::vector<int>{0, 0}) == 0.5);
  CHECK_THROWS_AS(accuracy(m, Matrix(0, 1), std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("stratified folds spread every class") {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 7; ++k) y.push_back(c);
  const auto folds = stratified_folds(y, 3, 3, 1);
  for (int c = 0; c < 3; ++c) {
    std::vector<int> per(3, 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) ++per[static_cast<std::size_t>(folds[i])];
    for (int f : per) CHECK(f >= 2);
  }
  CHECK(stratified_folds(y, 3, 3, 1) == folds);
}

TEST_CASE("select_reg_param") {
  const Dataset d = make_synthetic(3, 12, 2, 0.05, 3);
  const auto cw = class_weights(d.class_counts());

  SUBCASE("singleton grid") {
    CHECK(select_reg_param(d.features(), d.labels(), 3, std::vector<double>{0.7}, 3, 1) == 0.7);
  }
  SUBCASE("exact ties go to the smallest candidate") {
    Matrix x(8, 1);
    x << -1.1, -1.0, -0.9, -1.05, 0.9, 1.0, 1.1, 1.05;
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(select_reg_param(x, y, 2, std::vector<double>{10.0, 1.0, 0.1}, 2, 5) == 0.1);
  }
  SUBCASE("weak regularization beats extreme regularization on separable data") {
    // class 0 spreads over [0, 5], class 1 sits in [5.5, 6]: separable, but the
    // mean direction alone puts the boundary inside class 0
    Matrix x(24, 1);
    std::vector<int> y(24);
    for (int i = 0; i < 12; ++i) {
      x(i, 0) = 5.0 * i / 11.0;
      x(12 + i, 0) = 5.5 + 0.5 * i / 11.0;
      y[static_cast<std::size_t>(i)] = 0;
      y[static_cast<std::size_t>(12 + i)] = 1;
    }
    const Dataset d(x, y, 2);
    const auto cw = class_weights(d.class_counts());
    const std::vector<double> grid{1e4, 1e-4};
    // oracle: run the cross-validation for both candidates by hand
    const auto folds = stratified_folds(d.labels(), 2, 3, 9);
    std::vector<double> score;
    for (double reg : {1e-4, 1e4}) {
      double total = 0.0;
      for (int f = 0; f < 3; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        std::vector<int> ytr, yte;
        for (auto i : tr) ytr.push_back(d.labels()[static_cast<std::size_t>(i)]);
        for (auto i : te) yte.push_back(d.labels()[static_cast<std::size_t>(i)]);
        const Matrix xtr = d.features()(tr, Eigen::all);
        const Matrix xte = d.features()(te, Eigen::all);
        total += accuracy(train(xtr, ytr, cw, reg), xte, yte);
      }
      score.push_back(total / 3.0);
    }
    REQUIRE(score[0] > score[1]);
    CHECK(select_reg_param(d.features(), d.labels(), 2, grid, 3, 9, cw) == 1e-4);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(select_reg_param(d.features(), d.labels(), 3, std::vector<double>{}, 3, 1),
                    std::invalid_argument);
    Matrix x(3, 1);
    x << 0, 1, 2;
    CHECK_THROWS_AS(select_reg_param(x, std::vector<int>{0, 0, 1}, 2, kDefaultRegGrid, 3, 1),
                    std::invalid_argument);
  }
  SUBCASE("folds shrink to the smallest class") {
    Matrix x(5, 1);
    x << -1, -1.1, -0.9, 1, 1.1;
    // class 1 has 2 samples: 2 folds, must not throw
    CHECK_NOTHROW(select_reg_param(x, std::vector<int>{0, 0, 0, 1, 1}, 2, kDefaultRegGrid, 3, 1));
  }
}
