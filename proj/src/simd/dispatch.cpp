#include <atomic>
#include <cstdlib>
#include <string>

#include "gsbl/errors.hpp"
#include "kernels_internal.hpp"

namespace gsbl::simd {
namespace {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(GSBL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(GSBL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("GSBL_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && available(isa)) return &table(isa);
    }
  }
  if (available(Isa::avx2)) return &table(Isa::avx2);
  if (available(Isa::neon)) return &table(Isa::neon);
  return &detail::scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> s{initial_table()};
  return s;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("simd kernel: length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool available(Isa isa) noexcept { return cpu_supports(isa); }

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw InvalidArgument("simd variant not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(GSBL_HAVE_AVX2)
    case Isa::avx2:
      return detail::avx2_table();
#endif
#if defined(GSBL_HAVE_NEON)
    case Isa::neon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { slot().store(&table(isa), std::memory_order_release); }

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  check_sizes(x.size(), y.size());
  active().xpby(x.data(), beta, y.data(), x.size());
}

void hadamard(std::span<const double> w, std::span<const double> x, std::span<double> out) {
  check_sizes(w.size(), x.size());
  check_sizes(x.size(), out.size());
  active().hadamard(w.data(), x.data(), out.data(), x.size());
}

void precision_update(std::span<const double> v, double numer, double shift, std::span<double> out) {
  check_sizes(v.size(), out.size());
  active().precision_update(v.data(), numer, shift, out.data(), v.size());
}

double abs_sum(std::span<const double> a) { return active().abs_sum(a.data(), a.size()); }

}  // namespace gsbl::simd
