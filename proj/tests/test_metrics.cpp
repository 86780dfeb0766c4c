#include <gtest/gtest.h>

#include <cmath>

#include "metahybrid/metrics.hpp"
#include "oracles.hpp"

using namespace metahybrid;

namespace {

std::vector<ItemId> ids(std::initializer_list<long> v) {
  std::vector<ItemId> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(Rmse, PerfectPredictionsGiveZero) {
  const PredictionPair p[] = {{UserId(1), ItemId(1), 4, 4}, {UserId(1), ItemId(2), 2, 2}};
  EXPECT_EQ(rmse(p), 0.0);
}

TEST(Rmse, SwappedPair) {
  const PredictionPair p[] = {{UserId(1), ItemId(1), 4, 2}, {UserId(1), ItemId(2), 2, 4}};
  EXPECT_DOUBLE_EQ(rmse(p), 2.0);
}

TEST(Rmse, EmptySetThrows) {
  EXPECT_THROW(rmse(std::span<const PredictionPair>{}), InvalidArgument);
}

TEST(Ndcg, IdealOrderingIsOne) {
  const Holdout h{{ItemId(1), 3}, {ItemId(2), 2}};
  RelevanceConfig c;
  EXPECT_DOUBLE_EQ(ndcg_at(ids({1, 2, 3}), h, 3, c), 1.0);
}

TEST(Ndcg, HandComputedHalf) {
  // list relevances [0, 0, 3]: DCG = 7 / log2(4) = 3.5, IDCG = 7
  const Holdout h{{ItemId(3), 3}};
  RelevanceConfig c;
  EXPECT_DOUBLE_EQ(ndcg_at(ids({1, 2, 3}), h, 3, c), 0.5);
}

TEST(Ndcg, EmptyHoldoutIsZero) {
  RelevanceConfig c;
  EXPECT_EQ(ndcg_at(ids({1, 2}), Holdout{}, 2, c), 0.0);
}

TEST(Ndcg, BinaryGainUsesThreshold) {
  const Holdout h{{ItemId(1), 3}, {ItemId(2), 5}};
  RelevanceConfig c;
  c.gain = GainMode::Binary;
  // only item 2 is relevant; it sits at position 2
  EXPECT_DOUBLE_EQ(ndcg_at(ids({1, 2}), h, 2, c), 1.0 / std::log2(3.0));
}

TEST(Ndcg, PermutingBelowCutoffChangesNothing) {
  const Holdout h{{ItemId(1), 4}, {ItemId(4), 5}, {ItemId(5), 2}};
  RelevanceConfig c;
  const double a = ndcg_at(ids({1, 2, 3, 4, 5}), h, 2, c);
  const double b = ndcg_at(ids({1, 2, 5, 3, 4}), h, 2, c);
  EXPECT_EQ(a, b);
}

TEST(Ndcg, ZeroCutoffThrows) {
  RelevanceConfig c;
  EXPECT_THROW(ndcg_at(ids({1}), Holdout{}, 0, c), InvalidArgument);
}

TEST(PrecisionRecall, TwoOfFourInTopFive) {
  const std::set<ItemId> rel{ItemId(1), ItemId(3), ItemId(10), ItemId(11)};
  const auto pr = precision_recall_at(ids({1, 2, 3, 4, 5, 10}), rel, 5);
  EXPECT_DOUBLE_EQ(pr.precision, 0.4);
  EXPECT_DOUBLE_EQ(pr.recall, 0.5);
}

TEST(PrecisionRecall, EmptyRelevantSet) {
  const auto pr = precision_recall_at(ids({1, 2}), {}, 2);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
}

TEST(PrecisionRecall, ShortListUsesItsLength) {
  const auto pr = precision_recall_at(ids({1, 2}), {ItemId(1), ItemId(2)}, 10);
  EXPECT_EQ(pr.precision, 1.0);
  EXPECT_EQ(pr.recall, 1.0);
}

TEST(Relevance, ThresholdIsInclusive) {
  RelevanceConfig c;
  const Holdout h{{ItemId(1), 4}, {ItemId(2), 3.9}, {ItemId(3), 5}};
  EXPECT_EQ(relevant_items(h, c), (std::set<ItemId>{ItemId(1), ItemId(3)}));
}

TEST(Ndcg, MatchesOracleOnRandomLists) {
  std::srand(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<long> ranked;
    std::vector<ItemId> list;
    for (long i = 1; i <= 12; ++i) {
      ranked.push_back(i);
      list.emplace_back(i);
    }
    Holdout h;
    std::map<long, double> rel;
    for (long i = 1; i <= 12; ++i) {
      if (std::rand() % 3 == 0) {
        const double r = 1 + std::rand() % 5;
        h[ItemId(i)] = r;
        rel[i] = r;
      }
    }
    const std::size_t p = 1 + static_cast<std::size_t>(std::rand() % 12);
    RelevanceConfig c;
    const double got = ndcg_at(list, h, p, c);
    EXPECT_NEAR(got, oracle::ndcg(ranked, rel, p), 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}
