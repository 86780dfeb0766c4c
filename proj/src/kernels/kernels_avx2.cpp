#include <immintrin.h>

#include "metahybrid/kernels.hpp"

namespace metahybrid::kernels {
namespace {

constexpr std::size_t kLanes = 4;  // doubles per __m256d

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes), acc1);
  }
  for (; i + kLanes <= n; i += kLanes) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_avx2(double alpha, const double* x, double beta, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), by));
  }
  for (; i < n; ++i) y[i] = beta * y[i] + alpha * x[i];
}

void sgd_pair_avx2(double* p, double* q, std::size_t n, double err, double lr, double reg) {
  const __m256d verr = _mm256_set1_pd(err);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vreg = _mm256_set1_pd(reg);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d pi = _mm256_loadu_pd(p + i);
    const __m256d qi = _mm256_loadu_pd(q + i);
    const __m256d gp = _mm256_sub_pd(_mm256_mul_pd(verr, qi), _mm256_mul_pd(vreg, pi));
    const __m256d gq = _mm256_sub_pd(_mm256_mul_pd(verr, pi), _mm256_mul_pd(vreg, qi));
    _mm256_storeu_pd(p + i, _mm256_fmadd_pd(vlr, gp, pi));
    _mm256_storeu_pd(q + i, _mm256_fmadd_pd(vlr, gq, qi));
  }
  for (; i < n; ++i) {
    const double pi = p[i];
    const double qi = q[i];
    p[i] = pi + lr * (err * qi - reg * pi);
    q[i] = qi + lr * (err * pi - reg * qi);
  }
}

void gemv_avx2(const double* rows, std::size_t n_rows, std::size_t stride, const double* x,
               double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_avx2(rows + r * stride, x, stride);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, axpby_avx2, sgd_pair_avx2, gemv_avx2};
  return table;
}

}  // namespace metahybrid::kernels
