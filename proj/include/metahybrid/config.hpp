#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metahybrid/context.hpp"
#include "metahybrid/forest.hpp"
#include "metahybrid/hybrid.hpp"
#include "metahybrid/metrics.hpp"
#include "metahybrid/split.hpp"

namespace metahybrid {

inline constexpr int kConfigSchemaVersion = 1;

enum class DatasetFormat { MovieLens, Generic, Canonical };

struct DatasetConfig {
  DatasetFormat format = DatasetFormat::MovieLens;
  std::filesystem::path ratings;
  std::filesystem::path users;     // MovieLens only
  std::filesystem::path items;     // MovieLens only
  std::optional<std::filesystem::path> metadata;
  std::size_t malformed_tolerance = 0;
};

struct ColdStartConfig {
  bool enabled = false;
  std::size_t min_keep = 5;
  std::optional<std::size_t> max_keep;
};

/// Everything one experiment needs. Parsed from a JSON file with a
/// schema_version field; unknown keys are rejected.
struct ExperimentConfig {
  DatasetConfig dataset;
  ColdStartConfig cold_start;
  std::size_t min_ratings = 0;
  CandidateSet candidates = CandidateSet::preset("cf");
  std::string preset = "cf";  // empty when candidates were listed explicitly
  double outer_train_ratio = 0.7;
  std::vector<double> inner_ratios{0.6, 0.7, 0.8, 0.9};
  InnerSplitMode split_mode = InnerSplitMode::Chronological;
  ForestParams forest;
  RelevanceConfig relevance;
  ContextConfig context;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;
  unsigned threads = 0;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// Relative paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

/// Command-line or environment overrides applied after the file.
struct ConfigOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> preset;
  std::optional<double> inner_ratio;
  std::optional<std::size_t> ndcg_cutoff;
};

/// METAHYBRID_OUT, _SEED, _THREADS, _PRESET, _INNER_RATIO, _NDCG_CUTOFF.
ConfigOverrides overrides_from_env();
void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

/// "r80" for 0.8.
std::string ratio_tag(double ratio);

}  // namespace metahybrid
