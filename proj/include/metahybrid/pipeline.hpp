#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "metahybrid/config.hpp"
#include "metahybrid/data.hpp"
#include "metahybrid/experiment.hpp"

namespace metahybrid {

/// Counts and messages gathered while loading a dataset.
struct IngestSummary {
  IngestReport load;
  std::optional<EnrichmentReport> enrichment;
  std::size_t users_before_filters = 0;
  std::size_t ratings_before_filters = 0;
  std::vector<std::string> notes;
};

/// Loads, enriches, cold-starts and filters the configured dataset. The
/// cold-start seed is derive_seed(config.seed, "cold_start").
Dataset ingest_dataset(const ExperimentConfig& config, IngestSummary* summary = nullptr);

ExperimentSettings settings_for(const ExperimentConfig& config, double inner_ratio);

/// Stage-by-stage execution with every intermediate written under the
/// configured output directory. Each stage reads only files written by the
/// stages before it, so a stage can be rerun alone.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config, std::ostream* log = nullptr);

  static const std::vector<std::string>& stages();

  /// Throws StageError naming the stage, or naming the missing artifact and
  /// the stage that produces it.
  void run(std::string_view stage);
  void run_all();

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& out() const { return config_.output_dir; }

 private:
  void ingest();
  void split();
  void fit_candidates_stage();
  void label();
  void train_meta_stage();
  void evaluate();
  void report();

  Dataset load_dataset() const;
  NestedSplit read_split(const std::string& tag) const;
  std::filesystem::path require(const std::filesystem::path& relative, const char* producer) const;
  void write(const std::filesystem::path& relative, std::string_view contents) const;
  void note(std::string_view stage, const std::string& message) const;

  ExperimentConfig config_;
  std::ostream* log_;
};

}  // namespace metahybrid
