#include "alamp/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "alamp/random.hpp"

namespace alamp::cli {

namespace {

using Json = nlohmann::json;

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw UsageError("invalid seed '" + std::string(text) + "'");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Data {
  Dataset train;
  Dataset test;
  std::string name;
};

Data load_data(const RunConfig& config) {
  if (config.train_path) {
    if (!config.test_path) throw UsageError("--train needs --test");
    Dataset train = load_dataset(*config.train_path);
    Dataset test = load_dataset(*config.test_path, train.n_classes());
    if (test.n_classes() != train.n_classes())
      throw UsageError("test labels exceed the training classes");
    return {std::move(train), std::move(test), config.train_path->filename().string()};
  }
  const SynthParams& s = config.synth;
  Dataset all = make_synthetic(s.classes, s.per_class + s.test_per_class, s.dim, s.cluster_std, s.seed);
  auto [train, test] = split_per_class(all, s.test_per_class, derive_seed(s.seed, 1));
  return {std::move(train), std::move(test), "synthetic"};
}

// CLI11 reports its own parse errors; everything else is mapped here.
int report_error(std::ostream& err, const std::exception& e, int code) {
  err << "error: " << e.what() << "\n";
  return code;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text.remove_prefix(comma == std::string_view::npos ? text.size() : comma + 1);
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      seeds.push_back(parse_u64(item));
      continue;
    }
    const auto lo = parse_u64(item.substr(0, dots));
    const auto hi = parse_u64(item.substr(dots + 2));
    if (hi < lo) throw UsageError("empty seed range '" + std::string(item) + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw UsageError("no seeds given");
  return seeds;
}

void apply_config_json(RunConfig& config, std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  try {
    if (doc.contains("train")) config.train_path = doc["train"].get<std::string>();
    if (doc.contains("test")) config.test_path = doc["test"].get<std::string>();
    if (doc.contains("af")) config.afs = {doc["af"].get<std::string>()};
    if (doc.contains("afs")) config.afs = doc["afs"].get<std::vector<std::string>>();
    if (doc.contains("budget")) config.budget = doc["budget"].get<int>();
    if (doc.contains("iters")) config.iters = doc["iters"].get<int>();
    if (doc.contains("seeds")) {
      const Json& s = doc["seeds"];
      config.seeds = s.is_string() ? parse_seeds(s.get<std::string>())
                                   : s.get<std::vector<std::uint64_t>>();
    }
    if (doc.contains("cost_sensitive")) config.cost_sensitive = doc["cost_sensitive"].get<bool>();
    if (doc.contains("out")) config.out = doc["out"].get<std::string>();
    if (doc.contains("format")) config.format = parse_report_format(doc["format"].get<std::string>());
    if (doc.contains("threads")) config.threads = doc["threads"].get<int>();
    if (doc.contains("synth")) {
      const Json& s = doc["synth"];
      SynthParams& p = config.synth;
      if (s.contains("classes")) p.classes = s["classes"].get<int>();
      if (s.contains("per_class")) p.per_class = s["per_class"].get<int>();
      if (s.contains("test_per_class")) p.test_per_class = s["test_per_class"].get<int>();
      if (s.contains("dim")) p.dim = s["dim"].get<int>();
      if (s.contains("std")) p.cluster_std = s["std"].get<double>();
      if (s.contains("seed")) p.seed = s["seed"].get<std::uint64_t>();
    }
  } catch (const Json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void validate(const RunConfig& config) {
  if (config.afs.empty()) throw UsageError("no acquisition function given");
  for (const auto& af : config.afs) {
    try {
      parse_strategy(af);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  try {
    BudgetPlan{config.budget, config.iters}.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (config.seeds.empty()) throw UsageError("no seeds given");
  if (config.threads < 1) throw UsageError("threads must be >= 1");
}

std::vector<GainRow> execute(const RunConfig& config, std::ostream& log) {
  validate(config);
  const Data data = load_data(config);
  const BudgetPlan plan{config.budget, config.iters};
  try {
    plan.validate(data.train.n_samples());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<Strategy> strategies;
  for (const auto& af : config.afs) strategies.push_back(parse_strategy(af));
  EngineOptions options;
  options.cost_sensitive = config.cost_sensitive;

  const std::vector<Report> reports = run_batch(data.train, data.test, strategies, config.seeds,
                                                plan, options, config.threads, data.name);

  std::filesystem::create_directories(config.out);
  const std::string ext(format_extension(config.format));
  std::vector<Aggregate> aggregates;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const std::span<const Report> runs(reports.data() + s * config.seeds.size(), config.seeds.size());
    for (const Report& r : runs) {
      const auto path = config.out / (r.meta.af + "_seed" + std::to_string(r.meta.seed) + "." + ext);
      write_report(r, path, config.format);
      log << r.meta.af << " seed " << r.meta.seed << ": average accuracy "
          << fixed(average_accuracy(r), 4) << ", final " << fixed(r.records.back().accuracy, 4)
          << " -> " << path.string() << "\n";
    }
    aggregates.push_back(aggregate(runs));
    write_aggregate(aggregates.back(), config.out / (aggregates.back().af + "_aggregate." + ext),
                    config.format);
  }

  const std::vector<GainRow> gains = gain_table(aggregates);
  if (strategies.size() > 1) {
    std::ofstream table(config.out / "compare.csv", std::ios::binary);
    table << gain_table_to_csv(gains);
    if (!table) throw std::runtime_error("cannot write compare.csv");
    log << "af            avg_acc   gain_pts  final_acc  final_ir\n";
    for (const auto& g : gains) {
      std::string name = g.af;
      name.resize(12, ' ');
      log << name << "  " << fixed(g.mean_average_accuracy, 4) << "   "
          << (g.gain_points ? fixed(*g.gain_points, 2) : std::string("  -  ")) << "     "
          << fixed(g.mean_final_accuracy, 4) << "     " << fixed(g.mean_final_ir, 4) << "\n";
    }
  }
  return gains;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pool-based active learning simulator"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;
  std::string af;
  std::vector<std::string> afs;
  std::string seeds;
  std::string format;
  std::string train_path;
  std::string test_path;
  std::string out_dir;

  const auto add_run_flags = [&](CLI::App* sub, bool single_af) {
    sub->add_option("--config", config_path, "JSON run config; flags override its values");
    sub->add_option("--train", train_path, "training embeddings csv");
    sub->add_option("--test", test_path, "test embeddings csv");
    if (single_af)
      sub->add_option("--af", af, "acquisition function");
    else
      sub->add_option("--af,--afs", afs, "acquisition functions")->delimiter(',');
    sub->add_option("--budget", config.budget, "total labeling budget b");
    sub->add_option("--iters", config.iters, "iterations t (batch b/t)");
    sub->add_option("--seeds", seeds, "seeds, e.g. 0..4 or 0,2,5");
    sub->add_option("--cost-sensitive", config.cost_sensitive, "class-weighted training");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or json");
    sub->add_option("--threads", config.threads, "parallel runs");
    sub->add_option("--synth-classes", config.synth.classes);
    sub->add_option("--synth-per-class", config.synth.per_class, "training samples per class");
    sub->add_option("--synth-test-per-class", config.synth.test_per_class);
    sub->add_option("--synth-dim", config.synth.dim);
    sub->add_option("--synth-std", config.synth.cluster_std);
    sub->add_option("--synth-seed", config.synth.seed);
  };

  CLI::App* run = app.add_subcommand("run", "run one acquisition function over several seeds");
  add_run_flags(run, true);
  CLI::App* compare = app.add_subcommand("compare", "run several acquisition functions with shared seeds");
  add_run_flags(compare, false);

  int classes = 0, per_class = 0, dim = 0;
  double cluster_std = 0.0;
  std::uint64_t seed = 0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "write a Gaussian-blob dataset csv");
  synth->add_option("--classes", classes)->required();
  synth->add_option("--per-class", per_class)->required();
  synth->add_option("--dim", dim)->required();
  synth->add_option("--std", cluster_std)->required();
  synth->add_option("--seed", seed);
  synth->add_option("--out", synth_out)->required();

  std::string input;
  double target_ir = 0.0;
  int min_per_class = 1;
  std::string imb_out;
  CLI::App* imbalance = app.add_subcommand("imbalance", "subsample a dataset to a target imbalance ratio");
  imbalance->add_option("--input", input)->required();
  imbalance->add_option("--target-ir", target_ir)->required();
  imbalance->add_option("--min-per-class", min_per_class);
  imbalance->add_option("--seed", seed);
  imbalance->add_option("--out", imb_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const Dataset d = make_synthetic(classes, per_class, dim, cluster_std, seed);
      write_dataset(d, synth_out);
      out << "wrote " << d.n_samples() << " samples to " << synth_out << "\n";
      return kExitOk;
    }
    if (imbalance->parsed()) {
      const Dataset source = load_dataset(input);
      const Dataset result = induce_imbalance(source, target_ir, min_per_class, seed);
      write_dataset(result, imb_out);
      out << "achieved ir " << fixed(imbalance_ratio(result.class_counts()), 4) << " with "
          << result.n_samples() << " samples -> " << imb_out << "\n";
      return kExitOk;
    }

    CLI::App* sub = run->parsed() ? run : compare;
    // the file is the base layer; explicitly given flags win
    RunConfig base;
    if (!compare->parsed()) base.afs = {"alamp"};
    else base.afs = {"random", "margin", "coreset", "alamp", "alamp-div"};
    if (!config_path.empty()) apply_config_json(base, read_file(config_path));
    const auto given = [&](const char* name) { return sub->count(name) > 0; };
    if (given("--train")) base.train_path = train_path;
    if (given("--test")) base.test_path = test_path;
    if (run->parsed() && given("--af")) base.afs = {af};
    if (compare->parsed() && given("--af")) base.afs = afs;
    if (given("--budget")) base.budget = config.budget;
    if (given("--iters")) base.iters = config.iters;
    if (given("--seeds")) base.seeds = parse_seeds(seeds);
    if (given("--cost-sensitive")) base.cost_sensitive = config.cost_sensitive;
    if (given("--out")) base.out = out_dir;
    if (given("--format")) {
      try {
        base.format = parse_report_format(format);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    if (given("--threads")) base.threads = config.threads;
    if (given("--synth-classes")) base.synth.classes = config.synth.classes;
    if (given("--synth-per-class")) base.synth.per_class = config.synth.per_class;
    if (given("--synth-test-per-class")) base.synth.test_per_class = config.synth.test_per_class;
    if (given("--synth-dim")) base.synth.dim = config.synth.dim;
    if (given("--synth-std")) base.synth.cluster_std = config.synth.cluster_std;
    if (given("--synth-seed")) base.synth.seed = config.synth.seed;
    if (run->parsed() && base.afs.size() != 1) throw UsageError("run takes exactly one --af");

    execute(base, out);
    return kExitOk;
  } catch (const DataError& e) {
    return report_error(err, e, kExitFailure);
  } catch (const std::invalid_argument& e) {
    return report_error(err, e, kExitUsage);
  } catch (const std::exception& e) {
    return report_error(err, e, kExitFailure);
  }
}

}  // namespace alamp::cli
