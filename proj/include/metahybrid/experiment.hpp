#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metahybrid/context.hpp"
#include "metahybrid/data.hpp"
#include "metahybrid/evaluation.hpp"
#include "metahybrid/forest.hpp"
#include "metahybrid/hybrid.hpp"
#include "metahybrid/metrics.hpp"
#include "metahybrid/split.hpp"

namespace metahybrid {

/// Raised when a pipeline stage fails; names the stage and its seed.
class StageError : public Error {
 public:
  StageError(std::string stage, std::uint64_t seed, const std::string& what);
  const std::string& stage() const { return stage_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string stage_;
  std::uint64_t seed_;
};

/// Per-stage seeds fanned out from one master seed.
struct StageSeeds {
  std::uint64_t split;
  std::uint64_t fit_train;
  std::uint64_t fit_test;
  std::uint64_t forest;
};
StageSeeds stage_seeds(std::uint64_t master);

/// RMSE of every report row within one activity quartile.
struct ActivityBucket {
  std::string name;
  std::size_t n_users = 0;
  std::size_t min_ratings = 0;
  std::size_t max_ratings = 0;
  double mean_ratings = 0.0;
  std::vector<double> rmse;  // aligned with ExperimentReport::rows

  friend bool operator==(const ActivityBucket&, const ActivityBucket&) = default;
};

struct PerUserResult {
  UserId user;
  std::size_t n_fit_ratings = 0;
  std::size_t dispatched = 0;
  std::size_t oracle = 0;
  std::vector<double> ndcg;  // per candidate

  friend bool operator==(const PerUserResult&, const PerUserResult&) = default;
};

struct ExperimentReport {
  double inner_ratio = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> candidates;
  /// One row per candidate, then "Hybrid", then "Opt. hybrid".
  std::vector<MetricRow> rows;

  std::vector<std::size_t> label_histogram;  // training labels per candidate
  std::size_t labeled_users = 0;
  std::size_t flagged_label_users = 0;
  std::size_t skipped_label_users = 0;

  /// confusion[oracle][dispatched] over evaluated users.
  std::vector<std::vector<std::size_t>> confusion;
  double classifier_accuracy = 0.0;
  std::optional<double> oob_error;

  std::vector<std::pair<std::string, double>> importances;
  std::vector<std::pair<std::string, double>> grouped_importances;
  std::vector<ActivityBucket> activity;

  std::size_t evaluated_users = 0;
  std::size_t skipped_eval_users = 0;
  std::vector<PerUserResult> per_user;
  std::vector<std::string> warnings;

  const MetricRow& row(std::string_view name) const;
  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

inline constexpr const char* kHybridRow = "Hybrid";
inline constexpr const char* kOracleRow = "Opt. hybrid";

/// Dispatches every meta-test user through the forest and scores every
/// report row against `test_eval`.
ExperimentReport evaluate_experiment(const CandidateSet& candidates,
                                     const FittedCandidates& test_models,
                                     const ForestModel& forest, const ContextModel& context,
                                     const ContextMatrix& test_contexts,
                                     std::span<const RatingEvent> test_fit,
                                     std::span<const RatingEvent> test_eval,
                                     const LabeledTrainingSet& labeled,
                                     const RelevanceConfig& relevance, unsigned threads = 0);

struct ExperimentSettings {
  CandidateSet candidates;
  SplitPlan plan;
  ForestParams forest;
  RelevanceConfig relevance;
  ContextConfig context;
  unsigned threads = 0;
};

/// One complete experiment at one inner ratio. plan.seed is the master
/// seed; the forest seed is derived from it.
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentSettings& settings);

/// run_experiment for each inner ratio in turn.
std::vector<ExperimentReport> run_sweep(const Dataset& dataset, ExperimentSettings settings,
                                        std::span<const double> inner_ratios);

}  // namespace metahybrid
