#include <gtest/gtest.h>

#include <cmath>

#include "metahybrid/pca.hpp"
#include "metahybrid/rng.hpp"
#include "oracles.hpp"

using namespace metahybrid;

TEST(Pca, CollinearDataHasOneComponent) {
  Matrix m;
  for (double x : {0.0, 1.0, 2.0, 3.5}) m.push_row(std::vector<double>{x, 2 * x});
  std::vector<std::string> warnings;
  const auto p = fit_pca(m, 2, &warnings);
  EXPECT_NEAR(p.explained_variance[0], 1.0, 1e-12);
  EXPECT_EQ(p.explained_variance[1], 0.0);
  EXPECT_FALSE(warnings.empty());
  EXPECT_NEAR(p.components(0, 0), 1 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(p.components(0, 1), 2 / std::sqrt(5.0), 1e-12);
}

TEST(Pca, IdentityCovarianceSpreadsVarianceEvenly) {
  Rng rng(9);
  Matrix m;
  for (int r = 0; r < 4000; ++r) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.normal(0, 1);
    m.push_row(x);
  }
  const auto p = fit_pca(m, 5);
  for (double r : p.explained_variance) EXPECT_NEAR(r, 0.2, 0.03);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_LE(p.explained_variance[k], p.explained_variance[k - 1]);
}

TEST(Pca, MeanMapsToZeroAndSpanRoundTrips) {
  Rng rng(10);
  Matrix m;
  for (int r = 0; r < 50; ++r) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform();
    m.push_row(x);
  }
  const auto p = fit_pca(m, 3);
  for (double v : p.transform(p.mean)) EXPECT_NEAR(v, 0.0, 1e-12);
  const std::vector<double> scores{0.3, -1.2, 0.05};
  const auto x = p.inverse_transform(scores);
  const auto back = p.transform(x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back[k], scores[k], 1e-8);
  EXPECT_THROW(p.transform(std::vector<double>(5)), InvalidArgument);
}

TEST(Pca, MatchesJacobiOracle) {
  Rng rng(11);
  std::vector<std::vector<double>> rows;
  Matrix m;
  for (int r = 0; r < 60; ++r) {
    std::vector<double> x(8);
    for (std::size_t j = 0; j < 8; ++j) x[j] = rng.normal(0, 1.0 + static_cast<double>(j));
    rows.push_back(x);
    m.push_row(x);
  }
  const auto p = fit_pca(m, 4);
  const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(rows, nullptr), 8);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(p.eigenvalues[k], values[k], 1e-8 * values[0]);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(p.components(k, j), vectors[k][j], 1e-8);
  }
}

TEST(Pca, Preconditions) {
  Matrix m;
  m.push_row(std::vector<double>{1, 2, 3});
  EXPECT_THROW(fit_pca(m, 1), InvalidArgument);
  m.push_row(std::vector<double>{2, 3, 4});
  EXPECT_THROW(fit_pca(m, 3), InvalidArgument);
}

TEST(Pca, SignConvention) {
  std::vector<double> v{0.1, -0.9, 0.3};
  canonicalize_sign(v);
  EXPECT_EQ(v[1], 0.9);
  std::vector<double> tie{-0.5, 0.5};
  canonicalize_sign(tie);
  EXPECT_EQ(tie[0], 0.5);
}

TEST(Pca, ArchiveRoundTrip) {
  Matrix m;
  for (int r = 0; r < 5; ++r) m.push_row(std::vector<double>{double(r), double(r * r), 1.0 / (r + 1)});
  const auto p = fit_pca(m, 2);
  ArchiveWriter w("TEST", 1);
  p.save(w);
  ArchiveReader rd(w.bytes(), "TEST", 1);
  EXPECT_EQ(PcaModel::load(rd), p);
}
