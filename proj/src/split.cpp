#include "metahybrid/split.hpp"

#include <algorithm>
#include <cmath>

#include "metahybrid/rng.hpp"

namespace metahybrid {

void SplitPlan::validate() const {
  if (!(outer_train_ratio > 0.0 && outer_train_ratio < 1.0)) {
    throw InvalidArgument("outer split ratio must lie in (0, 1)");
  }
  if (!(inner_train_ratio > 0.0 && inner_train_ratio < 1.0)) {
    throw InvalidArgument("inner split ratio must lie in (0, 1)");
  }
}

std::size_t inner_train_count(std::size_t n, double ratio) {
  if (n <= 1) return n;
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

NestedSplit nested_split(const Dataset& dataset, const SplitPlan& plan) {
  plan.validate();
  if (dataset.users.size() < 10) throw InvalidArgument("nested_split: need at least 10 users");

  std::vector<UserId> users;
  users.reserve(dataset.users.size());
  for (const auto& [id, rec] : dataset.users) users.push_back(id);
  Rng outer(derive_seed(plan.seed, "outer"));
  outer.shuffle(users);

  const auto n_train = static_cast<std::size_t>(
      std::llround(plan.outer_train_ratio * static_cast<double>(users.size())));
  NestedSplit out;
  out.train_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_train), users.end());
  std::sort(out.train_users.begin(), out.train_users.end());
  std::sort(out.test_users.begin(), out.test_users.end());

  const auto by_user = dataset.ratings_by_user();
  Rng inner(derive_seed(plan.seed, "inner"));
  auto split_fold = [&](const std::vector<UserId>& fold, std::vector<RatingEvent>& fit,
                        std::vector<RatingEvent>& eval) {
    for (UserId u : fold) {
      auto it = by_user.find(u);
      if (it == by_user.end()) continue;
      auto events = it->second;  // chronological from Dataset order
      if (plan.mode == InnerSplitMode::Random) inner.shuffle(events);
      if (events.size() == 1) out.flagged_users.push_back(u);
      const std::size_t k = inner_train_count(events.size(), plan.inner_train_ratio);
      fit.insert(fit.end(), events.begin(), events.begin() + static_cast<std::ptrdiff_t>(k));
      eval.insert(eval.end(), events.begin() + static_cast<std::ptrdiff_t>(k), events.end());
    }
  };
  split_fold(out.train_users, out.train_fit, out.train_eval);
  split_fold(out.test_users, out.test_fit, out.test_eval);

  auto order = [](const RatingEvent& a, const RatingEvent& b) {
    return std::tie(a.user, a.timestamp, a.item) < std::tie(b.user, b.timestamp, b.item);
  };
  for (auto* slice : {&out.train_fit, &out.train_eval, &out.test_fit, &out.test_eval}) {
    std::sort(slice->begin(), slice->end(), order);
  }
  std::sort(out.flagged_users.begin(), out.flagged_users.end());
  return out;
}

std::map<UserId, std::vector<RatingEvent>> group_by_user(const std::vector<RatingEvent>& slice) {
  std::map<UserId, std::vector<RatingEvent>> out;
  for (const auto& r : slice) out[r.user].push_back(r);
  return out;
}

}  // namespace metahybrid
