#include "metahybrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace metahybrid {

double rmse(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw InvalidArgument("rmse: empty evaluation set");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double d = p.predicted - p.truth;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

void RelevanceConfig::validate() const {
  if (threshold < kMinRating || threshold > kMaxRating) {
    throw InvalidArgument("relevance threshold must lie in [1, 5]");
  }
  if (ndcg_cutoff < 1) throw InvalidArgument("nDCG cutoff must be >= 1");
  for (auto k : cutoffs) {
    if (k < 1) throw InvalidArgument("list cutoffs must be >= 1");
  }
}

double relevance_of(double held_out_rating, const RelevanceConfig& config) {
  if (config.gain == GainMode::Binary) return held_out_rating >= config.threshold ? 1.0 : 0.0;
  return held_out_rating;
}

double ndcg_at(std::span<const ItemId> ranked, const Holdout& holdout, std::size_t p,
               const RelevanceConfig& config) {
  if (p < 1) throw InvalidArgument("ndcg_at: p must be >= 1");
  auto gain = [](double rel, std::size_t pos) {
    return (std::exp2(rel) - 1.0) / std::log2(static_cast<double>(pos) + 1.0);
  };

  std::vector<double> ideal;
  ideal.reserve(holdout.size());
  for (const auto& [item, rating] : holdout) ideal.push_back(relevance_of(rating, config));
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(p, ideal.size()); ++i) idcg += gain(ideal[i], i + 1);
  if (idcg <= 0.0) return 0.0;

  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(p, ranked.size()); ++i) {
    if (auto it = holdout.find(ranked[i]); it != holdout.end()) {
      dcg += gain(relevance_of(it->second, config), i + 1);
    }
  }
  return std::clamp(dcg / idcg, 0.0, 1.0);
}

PrecisionRecall precision_recall_at(std::span<const ItemId> ranked,
                                    const std::set<ItemId>& relevant, std::size_t k) {
  if (k < 1) throw InvalidArgument("precision_recall_at: k must be >= 1");
  const std::size_t prefix = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < prefix; ++i) hits += relevant.contains(ranked[i]) ? 1 : 0;
  PrecisionRecall out;
  if (prefix > 0) out.precision = static_cast<double>(hits) / static_cast<double>(prefix);
  if (!relevant.empty()) out.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  return out;
}

std::set<ItemId> relevant_items(const Holdout& holdout, const RelevanceConfig& config) {
  std::set<ItemId> out;
  for (const auto& [item, rating] : holdout) {
    if (rating >= config.threshold) out.insert(item);
  }
  return out;
}

}  // namespace metahybrid
