#pragma once

// Vector kernels used by the inner solver loops. Each kernel has a scalar
// reference implementation plus AVX2 (x86-64) and NEON (aarch64) variants;
// the variant is picked once at startup from CPU detection and can be forced
// with GSBL_SIMD=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>

namespace gsbl::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i a_i b_i
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = x + beta y
  void (*xpby)(const double* x, double beta, double* y, std::size_t n);
  // out = w ⊙ x (out may alias x)
  void (*hadamard)(const double* w, const double* x, double* out, std::size_t n);
  // out_i = numer / (v_i^2 + shift); the closed-form Gamma-posterior mean
  void (*precision_update)(const double* v, double numer, double shift, double* out, std::size_t n);
  // sum_i |a_i|
  double (*abs_sum)(const double* a, std::size_t n);
};

/// True when the variant was compiled in and the running CPU supports it.
bool available(Isa isa) noexcept;

/// Kernel table for a specific variant; throws InvalidArgument if unavailable.
const KernelTable& table(Isa isa);

/// Table selected for this process.
const KernelTable& active() noexcept;

/// Override the process-wide selection (tests and benchmarking).
void set_active(Isa isa);

// Span front-ends over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void hadamard(std::span<const double> w, std::span<const double> x, std::span<double> out);
void precision_update(std::span<const double> v, double numer, double shift, std::span<double> out);
double abs_sum(std::span<const double> a);

}  // namespace gsbl::simd
