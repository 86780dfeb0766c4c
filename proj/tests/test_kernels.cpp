#include <gtest/gtest.h>

#include <cmath>

#include "metahybrid/kernels.hpp"
#include "metahybrid/rng.hpp"

using namespace metahybrid;
namespace k = metahybrid::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, 1.0);
  return v;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  const auto isas = k::available_isas();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), k::Isa::Scalar);
  EXPECT_EQ(k::table_for(k::Isa::Scalar).name, k::scalar_table().name);
}

TEST(Kernels, ScalarReferenceValues) {
  const double a[] = {1, 2, 3}, b[] = {4, 5, 6};
  EXPECT_EQ(k::scalar_table().dot(a, b, 3), 32.0);
  double y[] = {1, 1, 1};
  k::scalar_table().axpy(2.0, a, y, 3);
  EXPECT_EQ(y[2], 7.0);
  k::scalar_table().axpby(1.0, a, 0.5, y, 3);
  EXPECT_EQ(y[0], 2.5);
}

// Every ISA must agree with the scalar reference across lengths that
// exercise the vector body and the remainder loop.
TEST(Kernels, EveryIsaMatchesScalar) {
  Rng rng(42);
  const auto& ref = k::scalar_table();
  for (auto isa : k::available_isas()) {
    const auto& t = k::table_for(isa);
    for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 33, 100, 257}) {
      const auto a = random_vec(rng, n), b = random_vec(rng, n);
      EXPECT_LE(rel_diff(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)), 1e-12) << t.name << " n=" << n;

      auto y1 = b, y2 = b;
      t.axpy(0.7, a.data(), y1.data(), n);
      ref.axpy(0.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);

      y1 = b, y2 = b;
      t.axpby(0.3, a.data(), -1.1, y1.data(), n);
      ref.axpby(0.3, a.data(), -1.1, y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);

      auto p1 = a, q1 = b, p2 = a, q2 = b;
      t.sgd_pair(p1.data(), q1.data(), n, 0.4, 0.01, 0.02);
      ref.sgd_pair(p2.data(), q2.data(), n, 0.4, 0.01, 0.02);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(p1[i], p2[i], 1e-14);
        EXPECT_NEAR(q1[i], q2[i], 1e-14);
      }

      const std::size_t rows = 1 + n % 9;
      const auto m = random_vec(rng, rows * n);
      std::vector<double> o1(rows), o2(rows);
      t.gemv(m.data(), rows, n, a.data(), o1.data());
      ref.gemv(m.data(), rows, n, a.data(), o2.data());
      for (std::size_t r = 0; r < rows; ++r) EXPECT_LE(rel_diff(o1[r], o2[r]), 1e-12);
    }
  }
}

TEST(Kernels, SgdPairUsesPreUpdateValues) {
  double p[] = {1.0}, q[] = {2.0};
  k::scalar_table().sgd_pair(p, q, 1, 1.0, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(p[0], 1.2);
  EXPECT_DOUBLE_EQ(q[0], 2.1);
}

TEST(Rng, DeriveSeedIsStable) {
  EXPECT_EQ(derive_seed(42, "forest"), derive_seed(42, "forest"));
  EXPECT_NE(derive_seed(42, "forest"), derive_seed(42, "split"));
  EXPECT_NE(derive_seed(42, "forest"), derive_seed(43, "forest"));
  Rng a(1), b(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.uniform_int(3, 9), b.uniform_int(3, 9));
}
