#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "metahybrid/archive.hpp"
#include "metahybrid/matrix.hpp"

namespace metahybrid {

/// Principal components of mean-centered data, sorted by descending
/// eigenvalue. Each component's largest-magnitude loading is positive (the
/// first such index on ties).
struct PcaModel {
  std::vector<double> mean;                 // d
  Matrix components;                        // k x d, orthonormal rows
  std::vector<double> eigenvalues;          // k, covariance eigenvalues
  std::vector<double> explained_variance;   // k ratios of the total variance

  std::size_t dimension() const { return mean.size(); }
  std::size_t n_components() const { return components.rows; }

  /// (row - mean) projected onto the components.
  std::vector<double> transform(std::span<const double> row) const;
  /// mean + scores . components
  std::vector<double> inverse_transform(std::span<const double> scores) const;

  void save(ArchiveWriter& out) const;
  static PcaModel load(ArchiveReader& in);

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Eigendecomposition of the sample covariance (n - 1 denominator).
/// Requires rows >= k and cols >= k. Components past the data's rank get a
/// zero eigenvalue and a warning.
PcaModel fit_pca(const Matrix& data, std::size_t k, std::vector<std::string>* warnings = nullptr);

/// Sample covariance of the columns of `data`.
Matrix covariance(const Matrix& data, std::vector<double>* mean_out = nullptr);

/// Flips the sign of `v` so its largest-magnitude entry is positive.
void canonicalize_sign(std::span<double> v);

}  // namespace metahybrid
