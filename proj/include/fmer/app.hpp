#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmer/ingest.hpp"

namespace fmer::app {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path landmarks_dir;
  std::string area = "eyebrow+lip";
  int division = 5;
  std::string model = "rf";
  std::filesystem::path grid;      // empty: built-in grid
  std::filesystem::path geometry;  // empty: built-in ROI index sets
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::filesystem::path out = "out";
  bool standardize = false;
  int repeats = 1;
  int jobs = 0;  // 0: all logical cores
  int folds = 3;
  std::string repression = "others";
  int frame_pad = 3;
  bool write_csv = false;
  bool all_areas = false;  // bench every standard area at both divisions
};

/// Every field optional, so layers can be stacked.
struct ConfigOverrides {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> landmarks_dir;
  std::optional<std::string> area;
  std::optional<int> division;
  std::optional<std::string> model;
  std::optional<std::filesystem::path> grid;
  std::optional<std::filesystem::path> geometry;
  std::optional<std::uint64_t> seed;
  std::optional<double> test_fraction;
  std::optional<std::filesystem::path> out;
  std::optional<bool> standardize;
  std::optional<int> repeats;
  std::optional<int> jobs;
  std::optional<int> folds;
  std::optional<std::string> repression;
  std::optional<int> frame_pad;
  std::optional<bool> write_csv;
  std::optional<bool> all_areas;
};

/// JSON with the RunConfig field names. Relative paths are taken relative to
/// the config file's directory. Unknown keys are a ParseError.
ConfigOverrides parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ConfigOverrides load_config(const std::filesystem::path& path);

void apply(RunConfig& config, const ConfigOverrides& layer);

/// Checks value ranges and names. Throws ValidationError / UsageError.
void validate(const RunConfig& config);

int effective_jobs(const RunConfig& config) noexcept;

// Output names, all under config.out.
std::string area_tag(const RunConfig& config);  // e.g. "eyebrow+lip_d5"
std::filesystem::path splits_path(const RunConfig& config);
std::filesystem::path features_path(const RunConfig& config);
std::filesystem::path features_csv_path(const RunConfig& config);
std::filesystem::path model_path(const RunConfig& config, int repeat);
std::filesystem::path report_dir(const RunConfig& config, int repeat);
std::filesystem::path bench_path(const RunConfig& config);

// One function per subcommand. Each returns the files it wrote.
std::vector<std::filesystem::path> cmd_split(const RunConfig& config);
std::vector<std::filesystem::path> cmd_extract(const RunConfig& config);
std::vector<std::filesystem::path> cmd_train(const RunConfig& config);
std::vector<std::filesystem::path> cmd_eval(const RunConfig& config);
std::vector<std::filesystem::path> cmd_bench(const RunConfig& config);
/// split, extract, train, eval.
std::vector<std::filesystem::path> cmd_pipeline(const RunConfig& config);

}  // namespace fmer::app
