#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace metahybrid::kernels {

/// Dense double-precision inner loops shared by the factor models, the
/// content profiles, and PCA projection. Each ISA provides the same table;
/// `active()` picks the widest one the CPU supports.
struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y = beta * y + alpha * x
  void (*axpby)(double alpha, const double* x, double beta, double* y, std::size_t n);
  /// Simultaneous SGD step on a factor pair, using the pre-update values of both:
  ///   p += lr * (err * q - reg * p);  q += lr * (err * p_old - reg * q)
  void (*sgd_pair)(double* p, double* q, std::size_t n, double err, double lr, double reg);
  /// out[i] = dot(rows + i * stride, x) for i in [0, n_rows)
  void (*gemv)(const double* rows, std::size_t n_rows, std::size_t stride, const double* x,
               double* out);
};

enum class Isa { Scalar, Avx2 };

const KernelTable& scalar_table();
#if defined(METAHYBRID_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

/// ISAs compiled in and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();
const KernelTable& table_for(Isa isa);

/// Selected once on first use: METAHYBRID_ISA=scalar forces the reference
/// kernels, otherwise the widest available ISA wins.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void axpby(double alpha, std::span<const double> x, double beta, std::span<double> y) {
  active().axpby(alpha, x.data(), beta, y.data(), x.size());
}

inline void sgd_pair(std::span<double> p, std::span<double> q, double err, double lr, double reg) {
  active().sgd_pair(p.data(), q.data(), p.size(), err, lr, reg);
}

}  // namespace metahybrid::kernels
