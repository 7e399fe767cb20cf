#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace alamp {

using SampleId = std::int64_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Raised for malformed dataset files. The message names the offending line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-class sample counts.
struct ClassCounts {
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
  int n_classes() const { return static_cast<int>(counts.size()); }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Embedding matrix plus integer labels. Immutable once constructed; the
/// constructor validates every invariant and throws std::invalid_argument.
class Dataset {
 public:
  /// Assigns sample ids 0..n-1.
  Dataset(Matrix features, std::vector<int> labels, int n_classes);
  Dataset(Matrix features, std::vector<int> labels, int n_classes,
          std::vector<SampleId> sample_ids);

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<SampleId>& sample_ids() const { return sample_ids_; }
  int n_classes() const { return n_classes_; }
  Eigen::Index n_samples() const { return features_.rows(); }
  Eigen::Index dim() const { return features_.cols(); }

  /// Row holding `id`; throws std::out_of_range for unknown ids.
  Eigen::Index row_of(SampleId id) const;
  bool contains(SampleId id) const { return row_index_.contains(id); }
  int label_of(SampleId id) const { return labels_[static_cast<std::size_t>(row_of(id))]; }

  /// Feature rows for the given ids, in the given order.
  Matrix gather(std::span<const SampleId> ids) const;
  std::vector<int> gather_labels(std::span<const SampleId> ids) const;

  /// Subset keeping the listed ids (and their ids) in the given order.
  Dataset subset(std::span<const SampleId> ids) const;

  ClassCounts class_counts() const;

 private:
  void validate();

  Matrix features_;
  std::vector<int> labels_;
  int n_classes_;
  std::vector<SampleId> sample_ids_;
  std::unordered_map<SampleId, Eigen::Index> row_index_;
};

/// Counts labels per class; labels must lie in [0, n_classes).
ClassCounts count_classes(std::span<const int> labels, int n_classes);

/// Reads the `label,f1,...,fd` CSV format. n_classes is 1 + max label, raised
/// to `min_classes` when given (a test file may miss the top classes).
Dataset load_dataset(const std::filesystem::path& path, int min_classes = 0);
Dataset parse_dataset(std::string_view text, int min_classes = 0);

/// Writes the CSV format with round-trip precision.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string format_dataset(const Dataset& dataset);

/// Isotropic Gaussian blobs. Centers uniform in [-1,1]^dim, samples laid out
/// class by class.
Dataset make_synthetic(int n_classes, int per_class, int dim, double cluster_std,
                       std::uint64_t seed);

/// Splits off `test_per_class` random samples of each class as a test set.
std::pair<Dataset, Dataset> split_per_class(const Dataset& dataset, int test_per_class,
                                            std::uint64_t seed);

/// sigma / mu of the counts, with sigma the population standard deviation.
double imbalance_ratio(const ClassCounts& counts);

/// Per-class target counts for an imbalance induction.
struct ImbalancePlan {
  std::vector<std::int64_t> counts;  // indexed by class id
  double slope = 0.0;
  double achieved_ir = 0.0;
};

/// Solves for the clamped linear count profile
/// count = clamp(round(top - slope * rank), min_per_class, top), where rank is
/// the class position in a seeded permutation and top is the smallest
/// available class count. The slope is found by bisection.
ImbalancePlan plan_imbalance(const ClassCounts& available, double target_ir, int min_per_class,
                             std::uint64_t seed);

/// Subsamples each class to the planned counts. Output keeps input order.
Dataset induce_imbalance(const Dataset& dataset, double target_ir, int min_per_class,
                         std::uint64_t seed);

/// Largest ir reachable by the clamped profile for these counts.
double max_imbalance_ratio(const ClassCounts& available, int min_per_class);

}  // namespace alamp
