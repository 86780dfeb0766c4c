#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline double rmse(const std::vector<std::pair<double, double>>& truth_pred) {
  long double s = 0.0L;
  for (const auto& [t, p] : truth_pred) s += static_cast<long double>(t - p) * (t - p);
  return static_cast<double>(std::sqrt(s / truth_pred.size()));
}

/// ranked: item ids; rel: item -> relevance (absent = 0).
inline double ndcg(const std::vector<long>& ranked, const std::map<long, double>& rel, std::size_t p) {
  auto gain = [](double r) { return std::pow(2.0, r) - 1.0; };
  long double dcg = 0.0L;
  for (std::size_t i = 0; i < p && i < ranked.size(); ++i) {
    auto it = rel.find(ranked[i]);
    const double r = it == rel.end() ? 0.0 : it->second;
    dcg += gain(r) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<double> best;
  for (const auto& [item, r] : rel) best.push_back(r);
  std::sort(best.rbegin(), best.rend());
  long double idcg = 0.0L;
  for (std::size_t i = 0; i < p && i < best.size(); ++i) {
    idcg += gain(best[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0L ? 0.0 : static_cast<double>(dcg / idcg);
}

inline std::pair<double, double> precision_recall(const std::vector<long>& ranked,
                                                  const std::set<long>& relevant, std::size_t k) {
  const std::size_t n = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant.count(ranked[i]);
  const double p = n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
  const double r = relevant.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(relevant.size());
  return {p, r};
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major, n x n).
/// Returns eigenvalues descending with eigenvectors as rows.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(
    std::vector<double> a, std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  for (std::size_t j : order) {
    values.push_back(a[j * n + j]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + j];
    // largest |entry| positive, first index on ties
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(col[k]) > std::abs(col[best])) best = k;
    if (col[best] < 0)
      for (auto& x : col) x = -x;
    vectors.push_back(std::move(col));
  }
  return {values, vectors};
}

/// Sample covariance with the n - 1 denominator, computed in long double.
inline std::vector<double> covariance(const std::vector<std::vector<double>>& rows, std::vector<double>* mean_out) {
  const std::size_t n = rows.size(), d = rows[0].size();
  std::vector<long double> mean(d, 0.0L);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (auto& m : mean) m /= n;
  std::vector<double> c(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      long double s = 0.0L;
      for (const auto& r : rows) s += (r[a] - mean[a]) * (r[b] - mean[b]);
      c[a * d + b] = static_cast<double>(s / (n - 1));
    }
  }
  if (mean_out) mean_out->assign(mean.begin(), mean.end());
  return c;
}

}  // namespace oracle
