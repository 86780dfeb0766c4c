#include <gtest/gtest.h>

#include "metahybrid/split.hpp"
#include "metahybrid/synth.hpp"

using namespace metahybrid;

namespace {

Dataset small(std::size_t users, std::size_t per_user) {
  Dataset ds;
  for (long i = 1; i <= 50; ++i) {
    ItemRecord it;
    it.id = ItemId(i);
    ds.items.emplace(it.id, it);
  }
  for (long u = 1; u <= static_cast<long>(users); ++u) {
    UserRecord rec;
    rec.id = UserId(u);
    ds.users.emplace(rec.id, rec);
    for (long k = 0; k < static_cast<long>(per_user); ++k) {
      ds.ratings.push_back({UserId(u), ItemId(k + 1), 3.0, 1000 - k});
    }
  }
  ds.normalize();
  return ds;
}

}  // namespace

TEST(Split, OuterSeventyThirty) {
  const auto s = nested_split(small(100, 5), SplitPlan{});
  EXPECT_EQ(s.train_users.size(), 70u);
  EXPECT_EQ(s.test_users.size(), 30u);
}

TEST(Split, ChronologicalKeepsEarliest) {
  SplitPlan plan;
  plan.inner_train_ratio = 0.8;
  const auto s = nested_split(small(10, 10), plan);
  for (const auto* slice : {&s.train_eval, &s.test_eval}) {
    for (const auto& r : *slice) {
      // timestamps 991..1000; the two latest are items 1 and 2
      EXPECT_GE(r.timestamp, 999);
    }
  }
  EXPECT_EQ(s.train_eval.size() + s.test_eval.size(), 20u);
}

TEST(Split, InnerCount) {
  EXPECT_EQ(inner_train_count(10, 0.8), 8u);
  EXPECT_EQ(inner_train_count(1, 0.8), 1u);
  EXPECT_GE(inner_train_count(2, 0.9), 1u);
  EXPECT_LE(inner_train_count(2, 0.9), 1u);
}

TEST(Split, SingleRatingUserIsFlagged) {
  auto ds = small(12, 4);
  std::erase_if(ds.ratings, [](const RatingEvent& r) { return r.user == UserId(3) && r.item != ItemId(1); });
  const auto s = nested_split(ds, SplitPlan{});
  EXPECT_EQ(s.flagged_users, std::vector<UserId>{UserId(3)});
  for (const auto* slice : {&s.train_eval, &s.test_eval}) {
    for (const auto& r : *slice) EXPECT_NE(r.user, UserId(3));
  }
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto ds = small(40, 6);
  SplitPlan a;
  a.seed = 1;
  SplitPlan b = a;
  b.seed = 2;
  EXPECT_EQ(nested_split(ds, a).train_users, nested_split(ds, a).train_users);
  EXPECT_NE(nested_split(ds, a).train_users, nested_split(ds, b).train_users);
}

TEST(Split, TooFewUsersThrows) {
  EXPECT_THROW(nested_split(small(9, 3), SplitPlan{}), InvalidArgument);
}

TEST(Split, BadRatiosThrow) {
  SplitPlan p;
  p.outer_train_ratio = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.inner_train_ratio = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}
