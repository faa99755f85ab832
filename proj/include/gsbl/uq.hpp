#pragma once

// Posterior of x for fixed hyper-parameters: N(μ, C) with
// C = (FᵀAF + RᵀBR)^{-1} and μ = C FᵀA y. Dense only.

#include <cstdint>

#include "gsbl/model.hpp"

namespace gsbl {

/// Largest unknown count handled by the dense UQ routines.
inline constexpr Index kUqCap = 4096;

class PosteriorGaussian {
 public:
  PosteriorGaussian(Vector mean, Matrix precision_factor);

  const Vector& mean() const { return mean_; }
  /// Lower-triangular L with L Lᵀ = FᵀAF + RᵀBR.
  const Matrix& precision_factor() const { return factor_; }
  Index size() const { return mean_.size(); }

  /// Dense C = L^{-T} L^{-1}.
  Matrix covariance() const;
  /// diag(C) from the columns of L^{-1}.
  Vector marginal_variances() const;

 private:
  Vector mean_;
  Matrix factor_;
};

struct CredibleBand {
  Vector mean;
  Vector lower;
  Vector upper;
  double level = 0.0;
};

PosteriorGaussian posterior_gaussian(const HierarchicalModel& model, const PrecisionState& state);

/// count × n matrix of draws μ + L^{-T} z, z ~ N(0, I) from a seeded mt19937_64.
Matrix sample_posterior(const PosteriorGaussian& post, Index count, std::uint64_t seed);

/// Two-sided standard normal quantile: Φ^{-1}((1 + level) / 2).
double two_sided_normal_quantile(double level);

/// Per-component μ_i ± q sqrt(C_ii).
CredibleBand credible_band(const PosteriorGaussian& post, double level);

/// log ∫ p(y|x,α) p̃(x|β) dx with p̃(x|β) = (2π)^{-n/2} det(B)^{1/2} exp(-½ xᵀRᵀBRx),
/// evaluated as ½(log det A + log det B - log det(FᵀAF + RᵀBR)) - ½ yᵀΣ^{-1}y - (m/2) log 2π,
/// Σ = A^{-1} + F(RᵀBR)^{-1}Fᵀ. Throws ImproperPrior when RᵀBR is singular.
double log_evidence(const HierarchicalModel& model, const PrecisionState& state);

/// The same quantity through the m×m covariance Σ:
/// log N(y | 0, Σ) + ½(log det B - log det RᵀBR).
double log_evidence_sigma_form(const HierarchicalModel& model, const PrecisionState& state);

}  // namespace gsbl
