#include "alamp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "alamp/random.hpp"

namespace alamp {

namespace {

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

std::int64_t ClassCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

Dataset::Dataset(Matrix features, std::vector<int> labels, int n_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      sample_ids_(labels_.size()) {
  std::iota(sample_ids_.begin(), sample_ids_.end(), SampleId{0});
  validate();
}

Dataset::Dataset(Matrix features, std::vector<int> labels, int n_classes,
                 std::vector<SampleId> sample_ids)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      sample_ids_(std::move(sample_ids)) {
  validate();
}

void Dataset::validate() {
  if (n_classes_ < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  if (features_.cols() < 1) throw std::invalid_argument("dataset dimension must be >= 1");
  const auto n = static_cast<std::size_t>(features_.rows());
  if (labels_.size() != n || sample_ids_.size() != n)
    throw std::invalid_argument("features, labels and sample ids disagree in length");
  if (n < static_cast<std::size_t>(n_classes_))
    throw std::invalid_argument("dataset has fewer samples than classes");
  for (int label : labels_) {
    if (label < 0 || label >= n_classes_)
      throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(n_classes_) + ")");
  }
  if (!features_.allFinite()) throw std::invalid_argument("non-finite feature value");
  row_index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_index_.emplace(sample_ids_[i], static_cast<Eigen::Index>(i)).second)
      throw std::invalid_argument("duplicate sample id " + std::to_string(sample_ids_[i]));
  }
}

Eigen::Index Dataset::row_of(SampleId id) const {
  const auto it = row_index_.find(id);
  if (it == row_index_.end()) throw std::out_of_range("unknown sample id " + std::to_string(id));
  return it->second;
}

Matrix Dataset::gather(std::span<const SampleId> ids) const {
  Matrix out(static_cast<Eigen::Index>(ids.size()), dim());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = features_.row(row_of(ids[i]));
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const SampleId> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (SampleId id : ids) out.push_back(label_of(id));
  return out;
}

Dataset Dataset::subset(std::span<const SampleId> ids) const {
  return Dataset(gather(ids), gather_labels(ids), n_classes_,
                 std::vector<SampleId>(ids.begin(), ids.end()));
}

ClassCounts Dataset::class_counts() const { return count_classes(labels_, n_classes_); }

ClassCounts count_classes(std::span<const int> labels, int n_classes) {
  ClassCounts out{std::vector<std::int64_t>(static_cast<std::size_t>(n_classes), 0)};
  for (int label : labels) {
    if (label < 0 || label >= n_classes) throw std::invalid_argument("label out of range");
    ++out.counts[static_cast<std::size_t>(label)];
  }
  return out;
}

Dataset parse_dataset(std::string_view text, int min_classes) {
  std::vector<int> labels;
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  int max_label = -1;

  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = trim_cr(text.substr(0, eol));
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    if (line.empty()) continue;

    std::size_t fields = 0;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const std::string_view field =
          line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (fields == 0) {
        int label = 0;
        const auto [ptr, ec] = std::from_chars(first, last, label);
        if (ec != std::errc{} || ptr != last || field.empty())
          throw DataError(line_error(line_no, "malformed label '" + std::string(field) + "'"));
        if (label < 0) throw DataError(line_error(line_no, "label out of range"));
        labels.push_back(label);
        max_label = std::max(max_label, label);
      } else {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || field.empty())
          throw DataError(line_error(line_no, "malformed feature '" + std::string(field) + "'"));
        if (!std::isfinite(value)) throw DataError(line_error(line_no, "non-finite feature value"));
        values.push_back(value);
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields < 2) throw DataError(line_error(line_no, "row has no features"));
    if (dim == 0) {
      dim = fields - 1;
    } else if (fields - 1 != dim) {
      throw DataError(line_error(line_no, "dimensionality " + std::to_string(fields - 1) +
                                              " differs from " + std::to_string(dim)));
    }
  }
  if (labels.empty()) throw DataError("no samples");

  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix features = Eigen::Map<Matrix>(values.data(), n, static_cast<Eigen::Index>(dim));
  try {
    return Dataset(std::move(features), std::move(labels), std::max(max_label + 1, min_classes));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path, int min_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), min_classes);
}

std::string format_dataset(const Dataset& dataset) {
  std::string out;
  char buf[64];
  const Matrix& x = dataset.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out += std::to_string(dataset.labels()[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x(i, j));
      out += ',';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_dataset(dataset);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset make_synthetic(int n_classes, int per_class, int dim, double cluster_std,
                       std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("n_classes must be >= 2");
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(cluster_std > 0.0) || !std::isfinite(cluster_std))
    throw std::invalid_argument("cluster_std must be positive");

  Rng rng(seed);
  Matrix centers(n_classes, dim);
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(c, j) = rng.uniform(-1.0, 1.0);

  const Eigen::Index n = static_cast<Eigen::Index>(n_classes) * per_class;
  Matrix features(n, dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (Eigen::Index j = 0; j < dim; ++j)
        features(row, j) = centers(c, j) + cluster_std * rng.normal();
      labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return Dataset(std::move(features), std::move(labels), n_classes);
}

std::pair<Dataset, Dataset> split_per_class(const Dataset& dataset, int test_per_class,
                                            std::uint64_t seed) {
  if (test_per_class < 1) throw std::invalid_argument("test_per_class must be >= 1");
  std::vector<std::vector<SampleId>> by_class(static_cast<std::size_t>(dataset.n_classes()));
  for (Eigen::Index i = 0; i < dataset.n_samples(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    by_class[static_cast<std::size_t>(dataset.labels()[idx])].push_back(dataset.sample_ids()[idx]);
  }
  Rng rng(seed);
  std::vector<char> is_test(static_cast<std::size_t>(dataset.n_samples()), 0);
  for (auto& ids : by_class) {
    if (ids.size() <= static_cast<std::size_t>(test_per_class))
      throw std::invalid_argument("a class has too few samples to split off a test set");
    rng.shuffle(std::span<SampleId>(ids));
    for (int k = 0; k < test_per_class; ++k)
      is_test[static_cast<std::size_t>(dataset.row_of(ids[static_cast<std::size_t>(k)]))] = 1;
  }
  std::vector<SampleId> train_ids;
  std::vector<SampleId> test_ids;
  for (Eigen::Index i = 0; i < dataset.n_samples(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    (is_test[idx] ? test_ids : train_ids).push_back(dataset.sample_ids()[idx]);
  }
  return {dataset.subset(train_ids), dataset.subset(test_ids)};
}

double imbalance_ratio(const ClassCounts& counts) {
  if (counts.counts.empty()) throw std::invalid_argument("empty class counts");
  const double n = static_cast<double>(counts.counts.size());
  double mean = 0.0;
  for (auto c : counts.counts) {
    if (c < 0) throw std::invalid_argument("negative class count");
    mean += static_cast<double>(c);
  }
  mean /= n;
  if (mean <= 0.0) throw std::invalid_argument("imbalance ratio undefined for zero samples");
  double var = 0.0;
  for (auto c : counts.counts) {
    const double d = static_cast<double>(c) - mean;
    var += d * d;
  }
  var /= n;
  return std::sqrt(var) / mean;
}

namespace {

struct Profile {
  std::vector<int> rank_to_class;
  std::int64_t top;
  int floor;

  ClassCounts counts_at(double slope) const {
    ClassCounts out{std::vector<std::int64_t>(rank_to_class.size(), 0)};
    for (std::size_t r = 0; r < rank_to_class.size(); ++r) {
      const double raw = static_cast<double>(top) - slope * static_cast<double>(r);
      const auto rounded = static_cast<std::int64_t>(std::llround(std::max(raw, 0.0)));
      out.counts[static_cast<std::size_t>(rank_to_class[r])] =
          std::clamp<std::int64_t>(rounded, floor, top);
    }
    return out;
  }
};

Profile make_profile(const ClassCounts& available, int min_per_class, std::uint64_t seed) {
  if (available.counts.size() < 2) throw std::invalid_argument("need at least 2 classes");
  if (min_per_class < 1) throw std::invalid_argument("min_per_class must be >= 1");
  const auto top = *std::min_element(available.counts.begin(), available.counts.end());
  if (top < min_per_class)
    throw std::invalid_argument("a class has fewer than min_per_class samples");
  Profile p{std::vector<int>(available.counts.size()), top, min_per_class};
  std::iota(p.rank_to_class.begin(), p.rank_to_class.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<int>(p.rank_to_class));
  return p;
}

constexpr double kIrTolerance = 0.02;
constexpr int kBisectionSteps = 50;

}  // namespace

double max_imbalance_ratio(const ClassCounts& available, int min_per_class) {
  // the permutation does not change the multiset of counts
  const Profile p = make_profile(available, min_per_class, 0);
  return imbalance_ratio(p.counts_at(static_cast<double>(p.top - p.floor)));
}

ImbalancePlan plan_imbalance(const ClassCounts& available, double target_ir, int min_per_class,
                             std::uint64_t seed) {
  if (!(target_ir >= 0.0) || !std::isfinite(target_ir))
    throw std::invalid_argument("target ir must be a non-negative number");
  const Profile profile = make_profile(available, min_per_class, seed);

  double lo = 0.0;
  double hi = static_cast<double>(profile.top - profile.floor);
  const double max_ir = imbalance_ratio(profile.counts_at(hi));
  if (target_ir > max_ir + kIrTolerance)
    throw std::invalid_argument("target ir " + std::to_string(target_ir) +
                                " unattainable (max " + std::to_string(max_ir) +
                                " with min_per_class " + std::to_string(min_per_class) + ")");

  double best_slope = 0.0;
  double best_ir = 0.0;
  if (target_ir > 0.0) {
    for (int i = 0; i < kBisectionSteps; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (imbalance_ratio(profile.counts_at(mid)) < target_ir)
        lo = mid;
      else
        hi = mid;
    }
    const double ir_lo = imbalance_ratio(profile.counts_at(lo));
    const double ir_hi = imbalance_ratio(profile.counts_at(hi));
    if (std::abs(ir_lo - target_ir) <= std::abs(ir_hi - target_ir)) {
      best_slope = lo;
      best_ir = ir_lo;
    } else {
      best_slope = hi;
      best_ir = ir_hi;
    }
  }
  if (std::abs(best_ir - target_ir) > kIrTolerance)
    throw std::invalid_argument("target ir " + std::to_string(target_ir) +
                                " unattainable; closest is " + std::to_string(best_ir));
  return {profile.counts_at(best_slope).counts, best_slope, best_ir};
}

Dataset induce_imbalance(const Dataset& dataset, double target_ir, int min_per_class,
                         std::uint64_t seed) {
  const ImbalancePlan plan =
      plan_imbalance(dataset.class_counts(), target_ir, min_per_class, derive_seed(seed, 0));

  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(dataset.n_classes()));
  for (Eigen::Index i = 0; i < dataset.n_samples(); ++i)
    rows[static_cast<std::size_t>(dataset.labels()[static_cast<std::size_t>(i)])].push_back(i);

  Rng rng(derive_seed(seed, 1));
  std::vector<char> keep(static_cast<std::size_t>(dataset.n_samples()), 0);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    auto& r = rows[c];
    rng.shuffle(std::span<Eigen::Index>(r));
    for (std::int64_t k = 0; k < plan.counts[c]; ++k)
      keep[static_cast<std::size_t>(r[static_cast<std::size_t>(k)])] = 1;
  }
  std::vector<SampleId> ids;
  for (Eigen::Index i = 0; i < dataset.n_samples(); ++i)
    if (keep[static_cast<std::size_t>(i)])
      ids.push_back(dataset.sample_ids()[static_cast<std::size_t>(i)]);
  return dataset.subset(ids);
}

}  // namespace alamp
