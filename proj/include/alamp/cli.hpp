#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alamp/engine.hpp"
#include "alamp/metrics.hpp"

namespace alamp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Raised for invalid configuration; maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SynthParams {
  int classes = 20;
  int per_class = 200;
  int test_per_class = 100;
  int dim = 64;
  double cluster_std = 1.5;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::optional<std::filesystem::path> train_path;
  std::optional<std::filesystem::path> test_path;
  SynthParams synth;
  std::vector<std::string> afs = {"alamp"};
  int budget = 3200;
  int iters = 16;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  bool cost_sensitive = true;
  std::filesystem::path out = "results";
  ReportFormat format = ReportFormat::kJson;
  int threads = 1;
};

/// "0..4", "1,3,5" or a mix such as "0..2,7".
std::vector<std::uint64_t> parse_seeds(std::string_view text);

/// Overlays the keys present in a JSON run config onto `config`.
void apply_config_json(RunConfig& config, std::string_view json_text);

/// Checks names and the budget plan; throws UsageError.
void validate(const RunConfig& config);

/// Writes one report per (af, seed), one aggregate per af and, for more than
/// one af, compare.csv. Returns the gain table.
std::vector<GainRow> execute(const RunConfig& config, std::ostream& log);

/// Entry point of the `alamp` executable.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace alamp::cli
