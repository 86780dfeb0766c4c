#include "metahybrid/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace metahybrid {

UserEvaluation evaluate_user(const FittedRecommender& model, UserId user, const Holdout& holdout,
                             const std::set<ItemId>& exclude, const RelevanceConfig& config) {
  UserEvaluation e;
  e.user = user;
  std::size_t depth = config.ndcg_cutoff;
  for (auto k : config.cutoffs) depth = std::max(depth, k);
  e.ranked = model.recommend_top_n(user, depth, exclude);
  e.ndcg = ndcg_at(e.ranked, holdout, config.ndcg_cutoff, config);
  const auto relevant = relevant_items(holdout, config);
  for (auto k : config.cutoffs) {
    const auto pr = precision_recall_at(e.ranked, relevant, k);
    e.precision.push_back(pr.precision);
    e.recall.push_back(pr.recall);
  }
  for (const auto& [item, rating] : holdout) {
    e.pairs.push_back({user, item, rating, model.predict_rating(user, item)});
  }
  return e;
}

MetricRow aggregate_row(std::string name, std::span<const UserEvaluation* const> users,
                        const RelevanceConfig& config) {
  MetricRow row;
  row.name = std::move(name);
  row.cutoffs = config.cutoffs;
  row.precision.assign(config.cutoffs.size(), 0.0);
  row.recall.assign(config.cutoffs.size(), 0.0);
  row.n_users = users.size();
  double sq = 0.0;
  for (const auto* u : users) {
    row.ndcg += u->ndcg;
    for (std::size_t k = 0; k < config.cutoffs.size(); ++k) {
      row.precision[k] += u->precision[k];
      row.recall[k] += u->recall[k];
    }
    for (const auto& p : u->pairs) {
      sq += (p.truth - p.predicted) * (p.truth - p.predicted);
      ++row.n_pairs;
    }
  }
  if (row.n_users > 0) {
    const double n = static_cast<double>(row.n_users);
    row.ndcg /= n;
    for (auto& v : row.precision) v /= n;
    for (auto& v : row.recall) v /= n;
  }
  if (row.n_pairs > 0) row.rmse = std::sqrt(sq / static_cast<double>(row.n_pairs));
  return row;
}

std::map<UserId, Holdout> holdouts_of(std::span<const RatingEvent> slice) {
  std::map<UserId, Holdout> out;
  for (const auto& r : slice) out[r.user][r.item] = r.rating;
  return out;
}

std::map<UserId, std::set<ItemId>> items_of(std::span<const RatingEvent> slice) {
  std::map<UserId, std::set<ItemId>> out;
  for (const auto& r : slice) out[r.user].insert(r.item);
  return out;
}

}  // namespace metahybrid
