#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alamp/dataset.hpp"

namespace alamp {

struct IterationRecord {
  int iteration = 0;
  std::int64_t labeled_count = 0;
  double accuracy = 0.0;
  double imbalance = 0.0;  // ir of the labeled pool
  ClassCounts class_counts;
  std::vector<SampleId> selected;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunMeta {
  std::string af;
  std::uint64_t seed = 0;
  int total_budget = 0;
  int iterations = 0;
  std::string dataset;
  bool cost_sensitive = true;

  friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

struct Report {
  RunMeta meta;
  std::vector<IterationRecord> records;

  friend bool operator==(const Report&, const Report&) = default;
};

/// Mean test accuracy over the records, taken in iteration order.
double average_accuracy(const Report& report);

/// Smallest labeled count whose accuracy reaches `threshold` (in (0, 1]).
std::optional<std::int64_t> samples_to_accuracy(const Report& report, double threshold);

/// Labeled-pool ir per record, in iteration order.
std::vector<double> imbalance_profile(const Report& report);

enum class ReportFormat { kCsv, kJson };

ReportFormat parse_report_format(std::string_view name);
std::string_view format_extension(ReportFormat format);

std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);

/// `iteration,labeled_count,accuracy,ir`, six fractional digits.
std::string report_to_csv(const Report& report);

struct CurvePoint {
  int iteration = 0;
  std::int64_t labeled_count = 0;
  double accuracy = 0.0;
  double imbalance = 0.0;
};
std::vector<CurvePoint> curve_from_csv(std::string_view text);

void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format);
Report read_report_json(const std::filesystem::path& path);

/// Mean and population standard deviation per iteration across runs.
struct AggregatePoint {
  int iteration = 0;
  std::int64_t labeled_count = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_ir = 0.0;
  double std_ir = 0.0;
};

struct Aggregate {
  std::string af;
  std::vector<std::uint64_t> seeds;
  std::vector<AggregatePoint> points;
  double mean_average_accuracy = 0.0;
  double std_average_accuracy = 0.0;
};

/// Reports must share the same af and iteration schedule.
Aggregate aggregate(std::span<const Report> reports);
std::string aggregate_to_json(const Aggregate& agg);
std::string aggregate_to_csv(const Aggregate& agg);
void write_aggregate(const Aggregate& agg, const std::filesystem::path& path, ReportFormat format);

/// One row per strategy: average accuracy and its gain over `baseline` in
/// accuracy points (x100).
struct GainRow {
  std::string af;
  double mean_average_accuracy = 0.0;
  double std_average_accuracy = 0.0;
  std::optional<double> gain_points;  // absent without a baseline row
  double mean_final_accuracy = 0.0;
  double mean_final_ir = 0.0;
};

std::vector<GainRow> gain_table(std::span<const Aggregate> aggregates,
                                std::string_view baseline = "random");
std::string gain_table_to_csv(std::span<const GainRow> rows);

}  // namespace alamp
