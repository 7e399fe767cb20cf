#include "alamp/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "alamp/random.hpp"

namespace alamp {

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() == 0) throw std::invalid_argument("cannot standardize an empty matrix");
  Standardizer s;
  const auto n = static_cast<double>(features.rows());
  s.mean = features.colwise().sum() / n;
  s.scale = ((features.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size())
    throw std::invalid_argument("feature dimension " + std::to_string(features.cols()) +
                                " does not match model dimension " + std::to_string(mean.size()));
  return ((features.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

std::vector<double> class_weights(const ClassCounts& counts) {
  const double n = static_cast<double>(counts.total());
  const double classes = static_cast<double>(counts.counts.size());
  std::vector<double> out;
  out.reserve(counts.counts.size());
  for (auto c : counts.counts) {
    if (c < 0) throw std::invalid_argument("negative class count");
    out.push_back(n / (classes * static_cast<double>(std::max<std::int64_t>(c, 1))));
  }
  return out;
}

namespace {

struct Residuals {
  Matrix hinge;  // max(0, 1 - y f), n x C
  Matrix signs;  // y, n x C
};

Residuals residuals(const OvrObjective& obj, const Matrix& weights, const Vector& biases) {
  const auto n = obj.features.rows();
  const auto classes = weights.rows();
  Residuals r;
  r.signs = Matrix::Constant(n, classes, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) r.signs(i, obj.labels[static_cast<std::size_t>(i)]) = 1.0;
  Matrix scores = obj.features * weights.transpose();
  scores.rowwise() += biases.transpose();
  r.hinge = (1.0 - r.signs.array() * scores.array()).max(0.0).matrix();
  return r;
}

Vector sample_weights(const OvrObjective& obj) {
  Vector s(obj.features.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s(i) = obj.class_weights[static_cast<std::size_t>(obj.labels[static_cast<std::size_t>(i)])];
  return s;
}

void check_objective(const OvrObjective& obj, const Matrix& weights, const Vector& biases) {
  if (obj.labels.size() != static_cast<std::size_t>(obj.features.rows()))
    throw std::invalid_argument("labels and features disagree in length");
  if (weights.rows() != static_cast<Eigen::Index>(obj.class_weights.size()) ||
      biases.size() != weights.rows() || weights.cols() != obj.features.cols())
    throw std::invalid_argument("objective parameter shapes are inconsistent");
}

}  // namespace

Vector OvrObjective::values(const Matrix& weights, const Vector& biases) const {
  check_objective(*this, weights, biases);
  const Residuals r = residuals(*this, weights, biases);
  const Vector s = sample_weights(*this);
  const double n = static_cast<double>(features.rows());
  Vector loss = (r.hinge.array().square().colwise() * s.array()).colwise().sum().transpose() / n;
  return loss + 0.5 * reg_param * weights.rowwise().squaredNorm();
}

Vector OvrObjective::gradient(const Matrix& weights, const Vector& biases, Matrix& grad_weights,
                              Vector& grad_biases) const {
  check_objective(*this, weights, biases);
  const Residuals r = residuals(*this, weights, biases);
  const Vector s = sample_weights(*this);
  const double n = static_cast<double>(features.rows());

  // d/df of s (1 - y f)_+^2 / n is -2 s y (1 - y f)_+ / n
  const Matrix coef =
      ((r.signs.array() * r.hinge.array()).colwise() * s.array() * (-2.0 / n)).matrix();
  grad_weights = coef.transpose() * features + reg_param * weights;
  grad_biases = coef.colwise().sum().transpose();

  Vector loss = (r.hinge.array().square().colwise() * s.array()).colwise().sum().transpose() / n;
  return loss + 0.5 * reg_param * weights.rowwise().squaredNorm();
}

Model train(const Matrix& features, std::span<const int> labels,
            std::span<const double> class_weights, double reg_param,
            const TrainOptions& options) {
  const auto n_classes = static_cast<Eigen::Index>(class_weights.size());
  if (n_classes < 2) throw std::invalid_argument("need class weights for at least 2 classes");
  if (!(reg_param > 0.0)) throw std::invalid_argument("reg_param must be positive");
  if (labels.size() != static_cast<std::size_t>(features.rows()))
    throw std::invalid_argument("labels and features disagree in length");
  if (!features.allFinite()) throw std::invalid_argument("non-finite feature value");
  for (double w : class_weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("class weights must be positive");
  std::vector<char> seen(static_cast<std::size_t>(n_classes), 0);
  int distinct = 0;
  for (int label : labels) {
    if (label < 0 || label >= n_classes) throw std::invalid_argument("label out of range");
    if (!seen[static_cast<std::size_t>(label)]) {
      seen[static_cast<std::size_t>(label)] = 1;
      ++distinct;
    }
  }
  if (distinct < 2) throw std::invalid_argument("training needs at least 2 distinct labels");

  Model model;
  model.reg_param = reg_param;
  model.class_weights.assign(class_weights.begin(), class_weights.end());
  model.standardizer = Standardizer::fit(features);
  const Matrix x = model.standardizer.apply(features);
  const OvrObjective objective{x, labels, class_weights, reg_param};

  Matrix w = Matrix::Zero(n_classes, features.cols());
  Vector b = Vector::Zero(n_classes);
  Matrix grad_w;
  Vector grad_b;
  Vector obj = objective.gradient(w, b, grad_w, grad_b);
  Vector rate = Vector::Constant(n_classes, options.base_learning_rate / (1.0 + reg_param));

  Matrix next_w;
  Vector next_b;
  Matrix next_grad_w;
  Vector next_grad_b;
  for (int it = 0; it < options.iterations; ++it) {
    next_w = w - rate.asDiagonal() * grad_w;
    next_b = b - rate.cwiseProduct(grad_b);
    const Vector next_obj = objective.gradient(next_w, next_b, next_grad_w, next_grad_b);
    for (Eigen::Index c = 0; c < n_classes; ++c) {
      if (next_obj(c) <= obj(c)) {
        w.row(c) = next_w.row(c);
        b(c) = next_b(c);
        grad_w.row(c) = next_grad_w.row(c);
        grad_b(c) = next_grad_b(c);
        obj(c) = next_obj(c);
      } else {
        rate(c) *= 0.5;
      }
    }
  }
  model.weights = std::move(w);
  model.biases = std::move(b);
  return model;
}

Matrix decision_values(const Model& model, const Matrix& features) {
  Matrix out = model.standardizer.apply(features) * model.weights.transpose();
  out.rowwise() += model.biases.transpose();
  return out;
}

Matrix softmax_rows(const Matrix& values) {
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double top = values.row(i).maxCoeff();
    out.row(i) = (values.row(i).array() - top).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

ProbMatrix predict_proba(const Model& model, const Matrix& features,
                         std::span<const SampleId> sample_ids) {
  if (sample_ids.size() != static_cast<std::size_t>(features.rows()))
    throw std::invalid_argument("sample ids and features disagree in length");
  return {std::vector<SampleId>(sample_ids.begin(), sample_ids.end()),
          softmax_rows(decision_values(model, features))};
}

ProbMatrix predict_proba(const Model& model, const Dataset& dataset) {
  return predict_proba(model, dataset.features(), dataset.sample_ids());
}

std::vector<int> predict(const Model& model, const Matrix& features) {
  const Matrix values = decision_values(model, features);
  std::vector<int> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < values.cols(); ++c)
      if (values(i, c) > values(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const Model& model, const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw std::invalid_argument("accuracy of an empty test set");
  if (labels.size() != static_cast<std::size_t>(features.rows()))
    throw std::invalid_argument("labels and features disagree in length");
  const auto predicted = predict(model, features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double accuracy(const Model& model, const Dataset& test) {
  return accuracy(model, test.features(), test.labels());
}

std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int folds,
                                  std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    members.at(static_cast<std::size_t>(labels[i])).push_back(i);
  Rng rng(seed);
  std::vector<int> fold_of(labels.size(), 0);
  std::size_t dealt = 0;
  for (auto& rows : members) {
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t row : rows) fold_of[row] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

double select_reg_param(const Matrix& features, std::span<const int> labels, int n_classes,
                        std::span<const double> candidate_grid, int folds, std::uint64_t seed,
                        std::span<const double> class_weights, const TrainOptions& options) {
  if (candidate_grid.empty()) throw std::invalid_argument("empty regularization grid");
  for (double c : candidate_grid)
    if (!(c > 0.0)) throw std::invalid_argument("regularization candidates must be positive");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (labels.size() != static_cast<std::size_t>(features.rows()))
    throw std::invalid_argument("labels and features disagree in length");

  const ClassCounts counts = count_classes(labels, n_classes);
  std::int64_t smallest = 0;
  int present = 0;
  for (auto c : counts.counts) {
    if (c == 0) continue;
    if (c < 2) throw std::invalid_argument("cross-validation needs at least 2 samples per class");
    smallest = present == 0 ? c : std::min(smallest, c);
    ++present;
  }
  if (present < 2) throw std::invalid_argument("cross-validation needs at least 2 classes");

  std::vector<double> grid(candidate_grid.begin(), candidate_grid.end());
  std::sort(grid.begin(), grid.end());
  if (grid.size() == 1) return grid.front();

  const int k = static_cast<int>(std::max<std::int64_t>(2, std::min<std::int64_t>(folds, smallest)));
  std::vector<double> weights(class_weights.begin(), class_weights.end());
  if (weights.empty()) weights.assign(static_cast<std::size_t>(n_classes), 1.0);
  if (weights.size() != static_cast<std::size_t>(n_classes))
    throw std::invalid_argument("class weights length differs from n_classes");

  struct Split {
    Matrix train_x, test_x;
    std::vector<int> train_y, test_y;
  };
  const std::vector<int> fold_of = stratified_folds(labels, n_classes, k, seed);
  std::vector<Split> splits(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      (fold_of[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    Split& s = splits[static_cast<std::size_t>(f)];
    s.train_x = features(train_rows, Eigen::all);
    s.test_x = features(test_rows, Eigen::all);
    for (auto r : train_rows) s.train_y.push_back(labels[static_cast<std::size_t>(r)]);
    for (auto r : test_rows) s.test_y.push_back(labels[static_cast<std::size_t>(r)]);
  }

  double best = grid.front();
  double best_score = -1.0;
  for (double candidate : grid) {
    double total = 0.0;
    for (const Split& s : splits) {
      const Model m = train(s.train_x, s.train_y, weights, candidate, options);
      total += accuracy(m, s.test_x, s.test_y);
    }
    const double score = total / static_cast<double>(k);
    if (score > best_score) {
      best_score = score;
      best = candidate;
    }
  }
  return best;
}

}  // namespace alamp
