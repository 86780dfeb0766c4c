#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metahybrid/context.hpp"
#include "metahybrid/evaluation.hpp"
#include "metahybrid/forest.hpp"
#include "metahybrid/metrics.hpp"
#include "metahybrid/recommenders.hpp"

namespace metahybrid {

struct Candidate {
  std::string name;
  RecommenderSpec spec;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Ordered candidates. The order is the label vocabulary and breaks ties.
class CandidateSet {
 public:
  CandidateSet() = default;
  /// Throws InvalidArgument with fewer than two candidates or duplicate names.
  explicit CandidateSet(std::vector<Candidate> candidates);

  /// "cf": BaselineOnly, CoClustering, SlopeOne, SvdMf.
  /// "mixed": ContentBased, KnnBasic, WarpHybrid.
  static CandidateSet preset(std::string_view name);

  const std::vector<Candidate>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }
  const Candidate& operator[](std::size_t k) const { return candidates_[k]; }
  std::vector<std::string> names() const;
  std::size_t index_of(std::string_view name) const;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;

 private:
  std::vector<Candidate> candidates_;
};

using FittedCandidates = std::vector<std::shared_ptr<const FittedRecommender>>;

/// Fits every candidate on `train`; candidate k gets seed
/// derive_seed(seed, name_k).
FittedCandidates fit_candidates(const CandidateSet& candidates, std::span<const RatingEvent> train,
                                const ItemCatalog& catalog, std::uint64_t seed,
                                unsigned threads = 0);

struct LabeledRow {
  UserId user;
  std::vector<double> context;
  std::size_t label = 0;
  std::vector<double> scores;  // nDCG per candidate
  bool flagged = false;        // every score was zero

  friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

struct LabeledTrainingSet {
  std::vector<std::string> candidates;
  std::vector<std::string> feature_names;
  std::vector<LabeledRow> rows;
  std::vector<UserId> skipped_users;  // empty holdout

  std::size_t flagged_count() const;
  std::vector<std::size_t> label_histogram() const;

  /// user,label,flagged,ndcg_<candidate>...  (contexts are stored separately)
  std::string to_csv() const;
  static LabeledTrainingSet from_csv(const std::string& text, const ContextMatrix& contexts);
};

/// Labels each user of `contexts` with the candidate whose Top-N list (N =
/// config.ndcg_cutoff) scores the highest nDCG on the user's `inner_test`
/// holdout; ties go to the earliest candidate. Training items of each user
/// are excluded from the lists.
LabeledTrainingSet generate_labels(const CandidateSet& candidates, const FittedCandidates& models,
                                   const ContextMatrix& contexts,
                                   std::span<const RatingEvent> inner_train,
                                   std::span<const RatingEvent> inner_test,
                                   const RelevanceConfig& config, unsigned threads = 0);

/// Trains the dispatcher on (context -> label). A single-label set trains a
/// constant forest and adds a warning.
ForestModel train_meta(const LabeledTrainingSet& labeled, const ForestParams& params,
                       std::vector<std::string>* warnings = nullptr);

/// Everything needed to dispatch a request.
struct MetaHybridModel {
  CandidateSet candidates;
  FittedCandidates models;
  ForestModel forest;
  ContextModel context;
  std::string provenance;

  void validate() const;

  /// Index of the candidate the forest picks for this context vector.
  std::size_t predict_recommender(std::span<const double> context_vector) const;

  /// Top-n from the dispatched candidate, excluding `exclude`.
  std::vector<ItemId> recommend(UserId user, std::span<const double> context_vector, std::size_t n,
                                const std::set<ItemId>& exclude,
                                std::size_t* dispatched = nullptr) const;

  /// Same, but the context vector is rebuilt from `history` (the user's
  /// ratings as of this request) instead of a precomputed row.
  std::vector<ItemId> recommend_from_history(UserId user, std::span<const RatingEvent> history,
                                             const Dataset& dataset, std::size_t n,
                                             const std::set<ItemId>& exclude,
                                             std::size_t* dispatched = nullptr) const;
};

/// Per-user argmax over candidate nDCG rows, ties to the earliest candidate.
std::vector<std::size_t> oracle_select(std::span<const std::vector<double>> per_user_ndcg);

}  // namespace metahybrid
