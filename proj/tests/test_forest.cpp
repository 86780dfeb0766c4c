#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "metahybrid/forest.hpp"
#include "metahybrid/rng.hpp"

using namespace metahybrid;

namespace {

struct Data {
  Matrix X;
  std::vector<std::size_t> y;
};

Data xor_like(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Data d;
  for (std::size_t r = 0; r < n; ++r) {
    const double a = rng.uniform(), b = rng.uniform(), noise = rng.uniform();
    d.X.push_row(std::vector<double>{a, b, noise});
    d.y.push_back((a > 0.5) != (b > 0.5) ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST(Gini, KnownValues) {
  const double pure[] = {3, 0}, even[] = {5, 5}, three[] = {1, 1, 1};
  EXPECT_EQ(gini(pure), 0.0);
  EXPECT_EQ(gini(even), 0.5);
  EXPECT_NEAR(gini(three), 2.0 / 3.0, 1e-15);
}

TEST(Forest, LearnsXor) {
  const auto train = xor_like(1, 400), test = xor_like(2, 200);
  ForestParams p;
  p.n_estimators = 60;
  p.seed = 3;
  const auto f = train_forest(train.X, train.y, {"zero", "one"}, p);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.y.size(); ++r) correct += f.predict(test.X.row(r)).label == test.y[r];
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.y.size()), 0.9);
  const auto imp = f.importances();
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_LT(imp[2], imp[0]);
  ASSERT_TRUE(f.oob_error());
  EXPECT_LT(*f.oob_error(), 0.2);
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  const auto d = xor_like(5, 150);
  ForestParams p;
  p.n_estimators = 20;
  p.seed = 8;
  p.threads = 1;
  const auto a = train_forest(d.X, d.y, {"a", "b"}, p);
  p.threads = 4;
  const auto b = train_forest(d.X, d.y, {"a", "b"}, p);
  ArchiveWriter wa("MHRF", 1), wb("MHRF", 1);
  a.save(wa);
  b.save(wb);
  EXPECT_EQ(wa.bytes(), wb.bytes());
}

TEST(Forest, SingleLabelIsConstant) {
  const auto d = xor_like(6, 50);
  std::vector<std::size_t> y(50, 0);
  ForestParams p;
  p.n_estimators = 5;
  const auto f = train_forest(d.X, y, {"only", "other"}, p);
  for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(f.predict(d.X.row(r)).label, 0u);
  for (double v : f.importances()) EXPECT_EQ(v, 0.0);
}

TEST(Forest, TiesGoToEarliestLabel) {
  Matrix X;
  X.push_row(std::vector<double>{1.0});
  X.push_row(std::vector<double>{1.0});
  const std::vector<std::size_t> y{1, 0};
  ForestParams p;
  p.n_estimators = 1;
  p.bootstrap = false;
  const auto f = train_forest(X, y, {"a", "b"}, p);
  EXPECT_EQ(f.predict(X.row(0)).label, 0u);
}

TEST(Forest, SaveLoadRoundTrip) {
  const auto d = xor_like(7, 100);
  ForestParams p;
  p.n_estimators = 10;
  const auto f = train_forest(d.X, d.y, {"a", "b"}, p);
  const auto path = std::filesystem::path(METAHYBRID_SCRATCH_DIR) / "forest.bin";
  std::filesystem::create_directories(path.parent_path());
  f.save(path);
  const auto g = ForestModel::load(path);
  EXPECT_EQ(g.labels(), f.labels());
  EXPECT_EQ(g.oob_error(), f.oob_error());
  for (std::size_t r = 0; r < 100; ++r) {
    EXPECT_EQ(g.predict(d.X.row(r)).probabilities, f.predict(d.X.row(r)).probabilities);
  }
}

TEST(Forest, ParamValidation) {
  ForestParams p;
  p.n_estimators = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.min_samples_leaf = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  const auto d = xor_like(1, 10);
  const std::vector<std::size_t> bad(10, 5);
  EXPECT_THROW(train_forest(d.X, bad, {"a", "b"}, ForestParams{}), InvalidArgument);
}

TEST(Forest, GroupedImportancesSumBlocks) {
  const auto d = xor_like(9, 200);
  ForestParams p;
  p.n_estimators = 20;
  const auto f = train_forest(d.X, d.y, {"a", "b"}, p);
  const std::vector<std::string> sources{"ab", "ab", "noise"};
  const auto g = grouped_importances(f, sources);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].first, "ab");
  const auto imp = f.importances();
  EXPECT_NEAR(g[0].second, imp[0] + imp[1], 1e-15);
}
