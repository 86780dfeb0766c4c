#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "metahybrid/common.hpp"
#include "metahybrid/data.hpp"

namespace metahybrid {

enum class InnerSplitMode { Chronological, Random };

struct SplitPlan {
  double outer_train_ratio = 0.7;  // users in the meta-training fold
  double inner_train_ratio = 0.8;  // each user's ratings used to fit recommenders
  std::uint64_t seed = 0;
  InnerSplitMode mode = InnerSplitMode::Chronological;

  void validate() const;
};

/// The four rating slices of the two-level split. "Hybrid" folds partition
/// users; "recommender" parts partition each user's ratings.
struct NestedSplit {
  std::vector<UserId> train_users;  // TRh
  std::vector<UserId> test_users;   // TEh
  std::vector<RatingEvent> train_fit;   // TRh - TRr
  std::vector<RatingEvent> train_eval;  // TRh - TEr
  std::vector<RatingEvent> test_fit;    // TEh - TRr
  std::vector<RatingEvent> test_eval;   // TEh - TEr
  /// Users with a single rating: it goes to the fit part, nothing is held out.
  std::vector<UserId> flagged_users;
};

/// Number of a user's n ratings assigned to the fit part.
std::size_t inner_train_count(std::size_t n, double ratio);

NestedSplit nested_split(const Dataset& dataset, const SplitPlan& plan);

/// Ratings of a slice grouped by user.
std::map<UserId, std::vector<RatingEvent>> group_by_user(const std::vector<RatingEvent>& slice);

}  // namespace metahybrid
