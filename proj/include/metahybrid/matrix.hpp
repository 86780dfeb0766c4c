#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metahybrid/common.hpp"

namespace metahybrid {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return std::span<double>(values).subspan(r * cols, cols); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }

  void push_row(std::span<const double> r) {
    if (rows == 0 && cols == 0) cols = r.size();
    if (r.size() != cols) throw InvalidArgument("Matrix::push_row: row length mismatch");
    values.insert(values.end(), r.begin(), r.end());
    ++rows;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace metahybrid
