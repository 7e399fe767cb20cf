#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alamp/dataset.hpp"

namespace alamp {

/// Per-dimension affine scaling fitted on a training matrix. Dimensions with
/// zero spread are centered but not scaled.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

/// One-vs-rest linear model over standardized features.
struct Model {
  Matrix weights;  // n_classes x dim
  Vector biases;   // n_classes
  double reg_param = 1.0;
  std::vector<double> class_weights;
  Standardizer standardizer;

  int n_classes() const { return static_cast<int>(weights.rows()); }
  Eigen::Index dim() const { return weights.cols(); }
};

/// Class-probability rows aligned with sample ids.
struct ProbMatrix {
  std::vector<SampleId> sample_ids;
  Matrix rows;  // n_samples x n_classes
};

/// n / (n_classes * count_c); empty classes are treated as count 1.
std::vector<double> class_weights(const ClassCounts& counts);

/// Objectives of all one-vs-rest problems at once. For class c:
///   J_c = (1/n) sum_i s_i max(0, 1 - y_ic (w_c.x_i + b_c))^2 + reg/2 |w_c|^2
/// where y_ic = +1 if label_i == c else -1 and s_i = class_weights[label_i].
/// The bias is not penalized. `features` are taken as already standardized.
struct OvrObjective {
  const Matrix& features;
  std::span<const int> labels;
  std::span<const double> class_weights;
  double reg_param;

  /// J_c for every class.
  Vector values(const Matrix& weights, const Vector& biases) const;
  /// J_c for every class, writing dJ_c/dw_c into row c of grad_weights.
  Vector gradient(const Matrix& weights, const Vector& biases, Matrix& grad_weights,
                  Vector& grad_biases) const;
};

struct TrainOptions {
  int iterations = 500;
  /// Base step size; the effective initial rate is base / (1 + reg_param).
  double base_learning_rate = 0.1;
};

/// Full-batch gradient descent from zero on every one-vs-rest problem.
/// A step that would raise a class's objective is rejected and that class's
/// learning rate halved, so each objective is non-increasing.
Model train(const Matrix& features, std::span<const int> labels,
            std::span<const double> class_weights, double reg_param,
            const TrainOptions& options = {});

/// Raw decision values w_c.x + b_c on standardized features.
Matrix decision_values(const Model& model, const Matrix& features);

/// Row-wise softmax with the max subtracted first.
Matrix softmax_rows(const Matrix& values);

ProbMatrix predict_proba(const Model& model, const Matrix& features,
                         std::span<const SampleId> sample_ids);
/// Scores every sample of a dataset.
ProbMatrix predict_proba(const Model& model, const Dataset& dataset);

/// Argmax of the decision values; ties go to the lowest class id.
std::vector<int> predict(const Model& model, const Matrix& features);

double accuracy(const Model& model, const Dataset& test);
double accuracy(const Model& model, const Matrix& features, std::span<const int> labels);

inline const std::vector<double> kDefaultRegGrid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
inline constexpr int kDefaultFolds = 3;

/// Stratified k-fold assignment. Each class is shuffled with the seeded
/// generator and dealt round-robin to the folds.
std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int folds,
                                  std::uint64_t seed);

/// Picks the candidate with the highest mean stratified-CV accuracy, ties to
/// the smallest candidate. Folds shrink to the smallest present class count
/// (never below 2); a present class with a single sample is an error.
/// `class_weights` empty means unit weights.
double select_reg_param(const Matrix& features, std::span<const int> labels, int n_classes,
                        std::span<const double> candidate_grid, int folds, std::uint64_t seed,
                        std::span<const double> class_weights = {},
                        const TrainOptions& options = {});

}  // namespace alamp
