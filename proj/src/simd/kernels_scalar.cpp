// Reference kernels. Compiled with -ffp-contract=off so every expression is
// evaluated exactly as written.

#include <cmath>

#include "kernels_internal.hpp"

namespace gsbl::simd::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void hadamard(const double* w, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * x[i];
}

void precision_update(const double* v, double numer, double shift, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = numer / (v[i] * v[i] + shift);
}

double abs_sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

constexpr KernelTable kTable{Isa::scalar, dot, axpy, xpby, hadamard, precision_update, abs_sum};

}  // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

}  // namespace gsbl::simd::detail
