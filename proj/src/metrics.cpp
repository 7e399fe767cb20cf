#include "alamp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace alamp {

using Json = nlohmann::ordered_json;

namespace {

std::vector<const IterationRecord*> by_iteration(const Report& report) {
  std::vector<const IterationRecord*> out;
  out.reserve(report.records.size());
  for (const auto& r : report.records) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const IterationRecord* a, const IterationRecord* b) {
    return a->iteration < b->iteration;
  });
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::pair<double, double> mean_std(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

double average_accuracy(const Report& report) {
  if (report.records.empty()) throw std::invalid_argument("report has no records");
  double total = 0.0;
  for (const auto* r : by_iteration(report)) total += r->accuracy;
  return total / static_cast<double>(report.records.size());
}

std::optional<std::int64_t> samples_to_accuracy(const Report& report, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1]");
  std::optional<std::int64_t> best;
  for (const auto& r : report.records)
    if (r.accuracy >= threshold && (!best || r.labeled_count < *best)) best = r.labeled_count;
  return best;
}

std::vector<double> imbalance_profile(const Report& report) {
  std::vector<double> out;
  out.reserve(report.records.size());
  for (const auto* r : by_iteration(report)) out.push_back(imbalance_ratio(r->class_counts));
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::string_view format_extension(ReportFormat format) {
  return format == ReportFormat::kCsv ? "csv" : "json";
}

std::string report_to_json(const Report& report) {
  Json meta;
  meta["af"] = report.meta.af;
  meta["seed"] = report.meta.seed;
  meta["plan"] = Json{{"b", report.meta.total_budget}, {"t", report.meta.iterations}};
  meta["dataset"] = report.meta.dataset;
  meta["cost_sensitive"] = report.meta.cost_sensitive;

  Json records = Json::array();
  for (const auto& r : report.records) {
    Json rec;
    rec["k"] = r.iteration;
    rec["labeled"] = r.labeled_count;
    rec["acc"] = r.accuracy;
    rec["ir"] = r.imbalance;
    rec["class_counts"] = r.class_counts.counts;
    rec["selected"] = r.selected;
    records.push_back(std::move(rec));
  }
  Json doc;
  doc["meta"] = std::move(meta);
  doc["records"] = std::move(records);
  return doc.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  const Json doc = Json::parse(text);
  Report report;
  const Json& meta = doc.at("meta");
  report.meta.af = meta.at("af").get<std::string>();
  report.meta.seed = meta.at("seed").get<std::uint64_t>();
  report.meta.total_budget = meta.at("plan").at("b").get<int>();
  report.meta.iterations = meta.at("plan").at("t").get<int>();
  report.meta.dataset = meta.at("dataset").get<std::string>();
  report.meta.cost_sensitive = meta.at("cost_sensitive").get<bool>();
  for (const Json& rec : doc.at("records")) {
    IterationRecord r;
    r.iteration = rec.at("k").get<int>();
    r.labeled_count = rec.at("labeled").get<std::int64_t>();
    r.accuracy = rec.at("acc").get<double>();
    r.imbalance = rec.at("ir").get<double>();
    r.class_counts.counts = rec.at("class_counts").get<std::vector<std::int64_t>>();
    r.selected = rec.at("selected").get<std::vector<SampleId>>();
    report.records.push_back(std::move(r));
  }
  return report;
}

std::string report_to_csv(const Report& report) {
  std::string out = "iteration,labeled_count,accuracy,ir\n";
  for (const auto* r : by_iteration(report)) {
    out += std::to_string(r->iteration) + ',' + std::to_string(r->labeled_count) + ',' +
           fixed6(r->accuracy) + ',' + fixed6(r->imbalance) + '\n';
  }
  return out;
}

std::vector<CurvePoint> curve_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "iteration,labeled_count,accuracy,ir")
    throw std::invalid_argument("unexpected report csv header");
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    char comma[3];
    std::istringstream row(line);
    row >> p.iteration >> comma[0] >> p.labeled_count >> comma[1] >> p.accuracy >> comma[2] >>
        p.imbalance;
    if (!row || comma[0] != ',' || comma[1] != ',' || comma[2] != ',')
      throw std::invalid_argument("malformed report csv row: " + line);
    out.push_back(p);
  }
  return out;
}

void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  write_text(path, format == ReportFormat::kCsv ? report_to_csv(report) : report_to_json(report));
}

Report read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

Aggregate aggregate(std::span<const Report> reports) {
  if (reports.empty()) throw std::invalid_argument("nothing to aggregate");
  Aggregate agg;
  agg.af = reports.front().meta.af;
  const std::size_t steps = reports.front().records.size();
  std::vector<std::vector<const IterationRecord*>> ordered;
  for (const auto& r : reports) {
    if (r.meta.af != agg.af) throw std::invalid_argument("aggregate mixes acquisition functions");
    if (r.records.size() != steps) throw std::invalid_argument("aggregate mixes run lengths");
    agg.seeds.push_back(r.meta.seed);
    ordered.push_back(by_iteration(r));
  }
  for (std::size_t k = 0; k < steps; ++k) {
    std::vector<double> acc, ir;
    for (const auto& recs : ordered) {
      acc.push_back(recs[k]->accuracy);
      ir.push_back(recs[k]->imbalance);
    }
    AggregatePoint p;
    p.iteration = ordered.front()[k]->iteration;
    p.labeled_count = ordered.front()[k]->labeled_count;
    std::tie(p.mean_accuracy, p.std_accuracy) = mean_std(acc);
    std::tie(p.mean_ir, p.std_ir) = mean_std(ir);
    agg.points.push_back(p);
  }
  std::vector<double> averages;
  for (const auto& r : reports) averages.push_back(average_accuracy(r));
  std::tie(agg.mean_average_accuracy, agg.std_average_accuracy) = mean_std(averages);
  return agg;
}

std::string aggregate_to_json(const Aggregate& agg) {
  Json doc;
  doc["af"] = agg.af;
  doc["seeds"] = agg.seeds;
  doc["mean_average_accuracy"] = agg.mean_average_accuracy;
  doc["std_average_accuracy"] = agg.std_average_accuracy;
  Json points = Json::array();
  for (const auto& p : agg.points) {
    points.push_back(Json{{"k", p.iteration},
                          {"labeled", p.labeled_count},
                          {"mean_acc", p.mean_accuracy},
                          {"std_acc", p.std_accuracy},
                          {"mean_ir", p.mean_ir},
                          {"std_ir", p.std_ir}});
  }
  doc["points"] = std::move(points);
  return doc.dump(2) + "\n";
}

std::string aggregate_to_csv(const Aggregate& agg) {
  std::string out = "iteration,labeled_count,mean_accuracy,std_accuracy,mean_ir,std_ir\n";
  for (const auto& p : agg.points) {
    out += std::to_string(p.iteration) + ',' + std::to_string(p.labeled_count) + ',' +
           fixed6(p.mean_accuracy) + ',' + fixed6(p.std_accuracy) + ',' + fixed6(p.mean_ir) + ',' +
           fixed6(p.std_ir) + '\n';
  }
  return out;
}

void write_aggregate(const Aggregate& agg, const std::filesystem::path& path, ReportFormat format) {
  write_text(path, format == ReportFormat::kCsv ? aggregate_to_csv(agg) : aggregate_to_json(agg));
}

std::vector<GainRow> gain_table(std::span<const Aggregate> aggregates, std::string_view baseline) {
  const auto base = std::find_if(aggregates.begin(), aggregates.end(),
                                 [&](const Aggregate& a) { return a.af == baseline; });
  std::vector<GainRow> rows;
  for (const auto& a : aggregates) {
    GainRow row;
    row.af = a.af;
    row.mean_average_accuracy = a.mean_average_accuracy;
    row.std_average_accuracy = a.std_average_accuracy;
    if (base != aggregates.end())
      row.gain_points = 100.0 * (a.mean_average_accuracy - base->mean_average_accuracy);
    if (!a.points.empty()) {
      row.mean_final_accuracy = a.points.back().mean_accuracy;
      row.mean_final_ir = a.points.back().mean_ir;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string gain_table_to_csv(std::span<const GainRow> rows) {
  std::string out = "af,mean_average_accuracy,std_average_accuracy,gain_points,final_accuracy,final_ir\n";
  for (const auto& r : rows) {
    out += r.af + ',' + fixed6(r.mean_average_accuracy) + ',' + fixed6(r.std_average_accuracy) + ',' +
           (r.gain_points ? fixed6(*r.gain_points) : std::string()) + ',' +
           fixed6(r.mean_final_accuracy) + ',' + fixed6(r.mean_final_ir) + '\n';
  }
  return out;
}

}  // namespace alamp
