#include "metahybrid/kernels.hpp"

namespace metahybrid::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_scalar(double alpha, const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = beta * y[i] + alpha * x[i];
}

void sgd_pair_scalar(double* p, double* q, std::size_t n, double err, double lr, double reg) {
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = p[i];
    const double qi = q[i];
    p[i] = pi + lr * (err * qi - reg * pi);
    q[i] = qi + lr * (err * pi - reg * qi);
  }
}

void gemv_scalar(const double* rows, std::size_t n_rows, std::size_t stride, const double* x,
                 double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_scalar(rows + r * stride, x, stride);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, axpby_scalar, sgd_pair_scalar,
                                 gemv_scalar};
  return table;
}

}  // namespace metahybrid::kernels
