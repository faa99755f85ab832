// NEON kernels (aarch64). Same contract as the AVX2 variant: element-wise
// kernels match the scalar reference bit for bit, reductions differ only in
// summation order.

#include <arm_neon.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace gsbl::simd::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
  const float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(vb, vld1q_f64(y + i))));
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void hadamard(const double* w, const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = w[i] * x[i];
}

void precision_update(const double* v, double numer, double shift, double* out, std::size_t n) {
  const float64x2_t vn = vdupq_n_f64(numer);
  const float64x2_t vs = vdupq_n_f64(shift);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t x = vld1q_f64(v + i);
    vst1q_f64(out + i, vdivq_f64(vn, vaddq_f64(vmulq_f64(x, x), vs)));
  }
  for (; i < n; ++i) out[i] = numer / (v[i] * v[i] + shift);
}

double abs_sum(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

constexpr KernelTable kTable{Isa::neon, dot, axpy, xpby, hadamard, precision_update, abs_sum};

}  // namespace

const KernelTable& neon_table() noexcept { return kTable; }

}  // namespace gsbl::simd::detail
