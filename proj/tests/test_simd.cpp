#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gsbl/errors.hpp"
#include "gsbl/simd.hpp"

using gsbl::simd::Isa;

namespace {

std::vector<Isa> variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (gsbl::simd::available(isa)) out.push_back(isa);
  }
  return out;
}

std::vector<double> random(std::mt19937_64& rng, std::size_t n, double lo = -3, double hi = 3) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Lengths that exercise empty input, pure tails and every remainder of the vector width.
const std::vector<std::size_t> kLengths{0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1023};

}  // namespace

TEST(Simd, ScalarAlwaysAvailable) {
  EXPECT_TRUE(gsbl::simd::available(Isa::scalar));
  EXPECT_EQ(gsbl::simd::table(Isa::scalar).isa, Isa::scalar);
}

TEST(Simd, UnavailableVariantThrows) {
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!gsbl::simd::available(isa)) EXPECT_THROW(gsbl::simd::table(isa), gsbl::InvalidArgument);
  }
}

TEST(Simd, ElementwiseKernelsBitIdentical) {
  const auto& ref = gsbl::simd::table(Isa::scalar);
  std::mt19937_64 rng(11);
  for (Isa isa : variants()) {
    const auto& k = gsbl::simd::table(isa);
    for (std::size_t n : kLengths) {
      const auto x = random(rng, n), y0 = random(rng, n), w = random(rng, n);
      auto a = y0, b = y0;
      ref.axpy(0.37, x.data(), a.data(), n);
      k.axpy(0.37, x.data(), b.data(), n);
      EXPECT_EQ(a, b) << "axpy n=" << n;

      a = y0, b = y0;
      ref.xpby(x.data(), -1.25, a.data(), n);
      k.xpby(x.data(), -1.25, b.data(), n);
      EXPECT_EQ(a, b) << "xpby n=" << n;

      std::vector<double> oa(n), ob(n);
      ref.hadamard(w.data(), x.data(), oa.data(), n);
      k.hadamard(w.data(), x.data(), ob.data(), n);
      EXPECT_EQ(oa, ob) << "hadamard n=" << n;

      ref.precision_update(x.data(), 3.0, 2e-4, oa.data(), n);
      k.precision_update(x.data(), 3.0, 2e-4, ob.data(), n);
      EXPECT_EQ(oa, ob) << "precision_update n=" << n;
    }
  }
}

TEST(Simd, ReductionsAgreeToRoundoff) {
  const auto& ref = gsbl::simd::table(Isa::scalar);
  std::mt19937_64 rng(12);
  for (Isa isa : variants()) {
    const auto& k = gsbl::simd::table(isa);
    for (std::size_t n : kLengths) {
      const auto a = random(rng, n), b = random(rng, n);
      double mag = 0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
      const double eps = 1e-15 * (mag + 1) * (n + 1);
      EXPECT_NEAR(ref.dot(a.data(), b.data(), n), k.dot(a.data(), b.data(), n), eps) << "dot n=" << n;
      EXPECT_NEAR(ref.abs_sum(a.data(), n), k.abs_sum(a.data(), n), eps) << "abs_sum n=" << n;
    }
  }
}

TEST(Simd, ScalarKernelsMatchDefinitions) {
  const auto& k = gsbl::simd::table(Isa::scalar);
  const std::vector<double> v{0.0, 1.0, -2.0, 0.5};
  std::vector<double> out(4);
  k.precision_update(v.data(), 3.0, 2e-4, out.data(), 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out[i], 3.0 / (v[i] * v[i] + 2e-4));
  EXPECT_EQ(k.abs_sum(v.data(), 4), 3.5);
  EXPECT_EQ(k.dot(v.data(), v.data(), 4), 5.25);
}

TEST(Simd, SpanFrontEndsCheckLengths) {
  std::vector<double> a(3), b(4);
  EXPECT_THROW(gsbl::simd::dot(a, b), gsbl::InvalidArgument);
  EXPECT_THROW(gsbl::simd::axpy(1.0, a, b), gsbl::InvalidArgument);
}

TEST(Simd, SetActiveSwitchesTable) {
  const Isa before = gsbl::simd::active().isa;
  gsbl::simd::set_active(Isa::scalar);
  EXPECT_EQ(gsbl::simd::active().isa, Isa::scalar);
  gsbl::simd::set_active(before);
  EXPECT_EQ(gsbl::simd::active().isa, before);
}
