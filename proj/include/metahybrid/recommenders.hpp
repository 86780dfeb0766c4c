#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "metahybrid/archive.hpp"
#include "metahybrid/common.hpp"
#include "metahybrid/data.hpp"

namespace metahybrid {

enum class Algorithm { BaselineOnly, SlopeOne, CoClustering, SvdMf, KnnBasic, ContentBased, WarpHybrid };

std::string_view algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
std::span<const Algorithm> all_algorithms();

using ParamMap = std::map<std::string, double>;

/// Which algorithm to fit and with what hyperparameters. `params` always holds
/// the algorithm's full schema once constructed through `make`.
struct RecommenderSpec {
  Algorithm algorithm = Algorithm::BaselineOnly;
  ParamMap params;

  /// Defaults for every schema key, overridden by `overrides`. Unknown keys,
  /// non-integral counts and out-of-range values throw InvalidArgument.
  static RecommenderSpec make(Algorithm algorithm, const ParamMap& overrides = {});

  double param(const std::string& name) const;
  std::size_t count_param(const std::string& name) const;

  friend bool operator==(const RecommenderSpec&, const RecommenderSpec&) = default;
};

/// The algorithm's parameter schema with default values.
const ParamMap& default_params(Algorithm algorithm);
void validate_spec(const RecommenderSpec& spec);

/// Items available for recommendation, with the content features the
/// content-aware models consume.
class ItemCatalog {
 public:
  struct Features {
    std::vector<std::string> genres;
    std::vector<std::string> keywords;
  };

  ItemCatalog() = default;
  static ItemCatalog from_dataset(const Dataset& dataset);

  void add(ItemId item, Features features);

  std::span<const ItemId> items() const { return items_; }
  const Features* features(ItemId item) const;
  /// True when at least one item carries a genre or keyword.
  bool has_features() const;

 private:
  std::vector<ItemId> items_;  // sorted
  std::map<ItemId, Features> features_;
};

/// Dense re-indexing of a training slice with per-user and per-item postings.
class TrainingIndex {
 public:
  struct Entry {
    std::uint32_t index;  // item index in user postings, user index in item postings
    double rating;
  };

  TrainingIndex() = default;
  explicit TrainingIndex(std::span<const RatingEvent> train);

  std::size_t n_users() const { return users_.size(); }
  std::size_t n_items() const { return items_.size(); }
  std::size_t n_ratings() const { return n_ratings_; }

  std::optional<std::uint32_t> user_index(UserId u) const;
  std::optional<std::uint32_t> item_index(ItemId i) const;
  UserId user_at(std::uint32_t idx) const { return users_[idx]; }
  ItemId item_at(std::uint32_t idx) const { return items_[idx]; }

  std::span<const Entry> user_ratings(std::uint32_t u) const { return by_user_[u]; }
  std::span<const Entry> item_ratings(std::uint32_t i) const { return by_item_[i]; }

  double global_mean() const { return global_mean_; }
  double user_mean(std::uint32_t u) const { return user_mean_[u]; }
  double item_mean(std::uint32_t i) const { return item_mean_[i]; }

  /// Training triples in their original order.
  std::span<const RatingEvent> ratings() const { return ratings_; }

 private:
  std::vector<RatingEvent> ratings_;
  std::vector<UserId> users_;
  std::vector<ItemId> items_;
  std::unordered_map<UserId, std::uint32_t> user_pos_;
  std::unordered_map<ItemId, std::uint32_t> item_pos_;
  std::vector<std::vector<Entry>> by_user_;
  std::vector<std::vector<Entry>> by_item_;
  std::vector<double> user_mean_;
  std::vector<double> item_mean_;
  double global_mean_ = kScaleMidpoint;
  std::size_t n_ratings_ = 0;
};

/// A trained rating predictor. Immutable after fit; all queries are safe to
/// run concurrently.
class FittedRecommender {
 public:
  virtual ~FittedRecommender() = default;
  FittedRecommender(const FittedRecommender&) = delete;
  FittedRecommender& operator=(const FittedRecommender&) = delete;

  const RecommenderSpec& spec() const { return spec_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::uint64_t seed() const { return seed_; }
  const TrainingIndex& index() const { return index_; }
  std::span<const ItemId> catalog_items() const { return catalog_items_; }

  /// Estimate in [1, 5]. When the algorithm cannot score (u, i) the value
  /// falls back to item mean, user mean, global mean, then 3.0.
  double predict_rating(UserId user, ItemId item) const;

  /// Top-n catalog items not in `exclude`, by descending predicted rating
  /// (ranking score for score-based models), ties by ascending item id.
  std::vector<ItemId> recommend_top_n(UserId user, std::size_t n,
                                      const std::set<ItemId>& exclude) const;

  /// Number of predictions served by the fallback chain so far.
  std::size_t fallback_count() const { return fallbacks_.load(std::memory_order_relaxed); }

  void save(ArchiveWriter& out) const;

 protected:
  FittedRecommender(RecommenderSpec spec, std::span<const RatingEvent> train,
                    const ItemCatalog& catalog, std::uint64_t seed);
  /// Restores the common state written by `save`.
  explicit FittedRecommender(ArchiveReader& in);

  /// Raw algorithm estimate; nullopt where the formula is undefined.
  virtual std::optional<double> estimate(UserId user, ItemId item) const = 0;

  /// Estimates for many items of one user. Override when per-user work can be
  /// shared across items.
  virtual void estimate_many(UserId user, std::span<const ItemId> items,
                             std::span<std::optional<double>> out) const;

  /// Scores that order recommend_top_n. Defaults to clamped predicted ratings.
  virtual std::vector<double> ranking_scores(UserId user, std::span<const ItemId> items) const;

  virtual void save_state(ArchiveWriter& out) const = 0;

  std::vector<double> predict_many(UserId user, std::span<const ItemId> items) const;
  double fallback(UserId user, ItemId item) const;

  TrainingIndex index_;

 private:
  friend std::unique_ptr<FittedRecommender> load_recommender(ArchiveReader& in);

  RecommenderSpec spec_;
  std::uint64_t seed_ = 0;
  std::string fingerprint_;
  std::vector<ItemId> catalog_items_;
  mutable std::atomic<std::size_t> fallbacks_{0};
};

/// Trains `spec` on `train`. Throws InvalidArgument on an empty training set
/// or when a content-aware algorithm gets a catalog without features.
std::unique_ptr<FittedRecommender> fit(const RecommenderSpec& spec,
                                       std::span<const RatingEvent> train,
                                       const ItemCatalog& catalog, std::uint64_t seed);

std::unique_ptr<FittedRecommender> load_recommender(ArchiveReader& in);
void save_recommender(const FittedRecommender& model, const std::filesystem::path& path);
std::unique_ptr<FittedRecommender> load_recommender(const std::filesystem::path& path);

/// Cosine similarity of two users over their co-rated items, as KnnBasic
/// computes it. nullopt when they share fewer than `min_support` items.
std::optional<double> cosine_on_corated(const TrainingIndex& index, std::uint32_t u,
                                        std::uint32_t v, std::size_t min_support = 1);

}  // namespace metahybrid
