#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "metahybrid/common.hpp"

namespace metahybrid {

/// One (u, i) pair of the evaluation set T: true and predicted rating.
struct PredictionPair {
  UserId user;
  ItemId item;
  double truth = 0.0;
  double predicted = 0.0;
};

/// Root mean squared error over T. Throws on an empty set.
double rmse(std::span<const PredictionPair> pairs);

enum class GainMode {
  Graded,  // rel = held-out rating, 0 when the item is not held out
  Binary,  // rel = 1 when the held-out rating reaches the relevance threshold
};

struct RelevanceConfig {
  double threshold = 4.0;
  GainMode gain = GainMode::Graded;
  std::vector<std::size_t> cutoffs{3, 5, 10};
  std::size_t ndcg_cutoff = 10;

  void validate() const;
};

/// A user's held-out ratings, item -> rating.
using Holdout = std::map<ItemId, double>;

double relevance_of(double held_out_rating, const RelevanceConfig& config);

/// nDCG over the first p positions with gain (2^rel - 1) / log2(i + 1).
/// The ideal ordering is the holdout's best p relevances; 0 when that ideal
/// DCG is 0.
double ndcg_at(std::span<const ItemId> ranked, const Holdout& holdout, std::size_t p,
               const RelevanceConfig& config);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision and recall of the top-k prefix. The precision denominator is the
/// prefix length (shorter than k when the catalog ran out); recall is 0 for an
/// empty relevant set.
PrecisionRecall precision_recall_at(std::span<const ItemId> ranked,
                                    const std::set<ItemId>& relevant, std::size_t k);

/// Held-out items whose rating reaches the relevance threshold.
std::set<ItemId> relevant_items(const Holdout& holdout, const RelevanceConfig& config);

}  // namespace metahybrid
