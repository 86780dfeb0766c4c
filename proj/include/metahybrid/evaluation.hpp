#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "metahybrid/metrics.hpp"
#include "metahybrid/recommenders.hpp"

namespace metahybrid {

/// One model's ranking and rating accuracy for one user's holdout.
struct UserEvaluation {
  UserId user;
  std::vector<ItemId> ranked;
  double ndcg = 0.0;
  std::vector<double> precision;  // per RelevanceConfig::cutoffs
  std::vector<double> recall;
  std::vector<PredictionPair> pairs;
};

/// Ranks the catalog minus `exclude`, scores the list against `holdout`, and
/// predicts every held-out rating.
UserEvaluation evaluate_user(const FittedRecommender& model, UserId user, const Holdout& holdout,
                             const std::set<ItemId>& exclude, const RelevanceConfig& config);

/// Aggregated row. Ranking metrics are per-user means; RMSE is pooled over
/// every pair.
struct MetricRow {
  std::string name;
  std::vector<std::size_t> cutoffs;
  std::vector<double> precision;
  std::vector<double> recall;
  double ndcg = 0.0;
  double rmse = 0.0;
  std::size_t n_users = 0;
  std::size_t n_pairs = 0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

MetricRow aggregate_row(std::string name, std::span<const UserEvaluation* const> users,
                        const RelevanceConfig& config);

std::map<UserId, Holdout> holdouts_of(std::span<const RatingEvent> slice);
std::map<UserId, std::set<ItemId>> items_of(std::span<const RatingEvent> slice);

}  // namespace metahybrid
