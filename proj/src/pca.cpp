#include "metahybrid/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "metahybrid/kernels.hpp"

namespace metahybrid {

Matrix covariance(const Matrix& data, std::vector<double>* mean_out) {
  const std::size_t n = data.rows, d = data.cols;
  if (n < 2) throw InvalidArgument("covariance: need at least two rows");
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) kernels::axpy(1.0, data.row(r), mean);
  for (auto& m : mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = data.row(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - mean[c];
    for (std::size_t a = 0; a < d; ++a) {
      if (centered[a] == 0.0) continue;
      for (std::size_t b = a; b < d; ++b) cov(a, b) += centered[a] * centered[b];
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= denom;
      cov(b, a) = cov(a, b);
    }
  }
  if (mean_out) *mean_out = std::move(mean);
  return cov;
}

void canonicalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

PcaModel fit_pca(const Matrix& data, std::size_t k, std::vector<std::string>* warnings) {
  if (k == 0) throw InvalidArgument("fit_pca: k must be >= 1");
  if (data.rows < k || data.cols < k) {
    throw InvalidArgument("fit_pca: need at least k rows and k columns (k=" + std::to_string(k) +
                          ", matrix " + std::to_string(data.rows) + "x" +
                          std::to_string(data.cols) + ")");
  }
  if (data.rows < 2) throw InvalidArgument("fit_pca: need at least two rows");
  for (double v : data.values) {
    if (!std::isfinite(v)) throw InvalidArgument("fit_pca: non-finite value");
  }
  const std::size_t d = data.cols;

  PcaModel model;
  const Matrix cov = covariance(data, &model.mean);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(
      cov.values.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
  if (solver.info() != Eigen::Success) throw Error("fit_pca: eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  double trace = 0.0, largest = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    trace += std::max(0.0, values[i]);
    largest = std::max(largest, values[i]);
  }
  const double tolerance = 1e-12 * std::max(largest, 1.0);

  model.components = Matrix(k, d);
  model.eigenvalues.resize(k);
  model.explained_variance.resize(k);
  std::size_t rank_deficient = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(d - 1 - j);
    double lambda = values[col];
    if (lambda <= tolerance) {
      lambda = 0.0;
      ++rank_deficient;
    }
    auto row = model.components.row(j);
    for (std::size_t a = 0; a < d; ++a) row[a] = vectors(static_cast<Eigen::Index>(a), col);
    canonicalize_sign(row);
    model.eigenvalues[j] = lambda;
    model.explained_variance[j] = trace > 0.0 ? lambda / trace : 0.0;
  }
  if (rank_deficient > 0 && warnings) {
    warnings->push_back("fit_pca: " + std::to_string(rank_deficient) + " of " + std::to_string(k) +
                        " components exceed the data rank; their explained variance is 0");
  }
  return model;
}

std::vector<double> PcaModel::transform(std::span<const double> row) const {
  if (row.size() != dimension()) {
    throw InvalidArgument("PcaModel::transform: expected " + std::to_string(dimension()) +
                          " values, got " + std::to_string(row.size()));
  }
  std::vector<double> centered(row.begin(), row.end());
  kernels::axpy(-1.0, mean, centered);
  std::vector<double> out(n_components());
  kernels::active().gemv(components.values.data(), components.rows, components.cols,
                         centered.data(), out.data());
  return out;
}

std::vector<double> PcaModel::inverse_transform(std::span<const double> scores) const {
  if (scores.size() != n_components()) {
    throw InvalidArgument("PcaModel::inverse_transform: expected " +
                          std::to_string(n_components()) + " scores");
  }
  std::vector<double> out = mean;
  for (std::size_t j = 0; j < scores.size(); ++j) kernels::axpy(scores[j], components.row(j), out);
  return out;
}

void PcaModel::save(ArchiveWriter& out) const {
  out.put_vector(mean);
  out.put<std::uint64_t>(components.rows);
  out.put<std::uint64_t>(components.cols);
  out.put_vector(components.values);
  out.put_vector(eigenvalues);
  out.put_vector(explained_variance);
}

PcaModel PcaModel::load(ArchiveReader& in) {
  PcaModel m;
  m.mean = in.get_vector<double>();
  m.components.rows = in.get<std::uint64_t>();
  m.components.cols = in.get<std::uint64_t>();
  m.components.values = in.get_vector<double>();
  m.eigenvalues = in.get_vector<double>();
  m.explained_variance = in.get_vector<double>();
  if (m.components.values.size() != m.components.rows * m.components.cols ||
      m.components.cols != m.mean.size() || m.eigenvalues.size() != m.components.rows ||
      m.explained_variance.size() != m.components.rows) {
    throw IngestError("PCA archive: inconsistent shapes");
  }
  return m;
}

}  // namespace metahybrid
