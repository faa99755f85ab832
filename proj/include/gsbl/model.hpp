#pragma once

// The hierarchical model y = F x + ν with ν ~ N(0, A^{-1}), A = diag(α),
// conditionally Gaussian prior exp(-½ xᵀRᵀBRx), B = diag(β), and Gamma(c, d)
// hyper-priors on every α_i and β_j.

#include <vector>

#include "gsbl/operators.hpp"

namespace gsbl {

struct GammaHyperPrior {
  double c = 1.0;  // shape
  double d = 1e-4; // rate

  /// Throws InvalidArgument unless c > 0 and d > 0.
  void validate() const;

  static GammaHyperPrior signal_default() { return {1.0, 1e-4}; }
  static GammaHyperPrior image_default() { return {1.0, 1e-2}; }
};

/// How the m noise precisions are tied together.
struct NoiseGrouping {
  enum class Mode { scalar, per_entry, grouped };

  Mode mode = Mode::scalar;
  std::vector<Index> blocks;  // grouped mode only; sizes sum to m

  static NoiseGrouping scalar() { return {Mode::scalar, {}}; }
  static NoiseGrouping per_entry() { return {Mode::per_entry, {}}; }
  static NoiseGrouping grouped(std::vector<Index> sizes) { return {Mode::grouped, std::move(sizes)}; }

  /// Block sizes for a data vector of length m (scalar mode: one block of m).
  std::vector<Index> block_sizes(Index m) const;
  void validate(Index m) const;
};

struct PrecisionState {
  Vector alpha;  // length m, inverse noise variances
  Vector beta;   // length k, inverse prior variances

  static PrecisionState constant(Index m, Index k, double alpha0, double beta0);
  /// Throws DomainError unless every entry is finite and strictly positive.
  void validate() const;
};

class HierarchicalModel {
 public:
  /// Validates dimensions, hyper-parameters and grouping. The common kernel
  /// condition is checked when check_kernel is set and n is within
  /// kCommonKernelCap; larger models only log a warning.
  HierarchicalModel(Vector y, LinearOperator forward, LinearOperator reg, GammaHyperPrior hyper,
                    NoiseGrouping grouping = NoiseGrouping::scalar(), bool check_kernel = true);

  const Vector& y() const { return y_; }
  const LinearOperator& forward() const { return forward_; }
  const LinearOperator& reg() const { return reg_; }
  const GammaHyperPrior& hyper() const { return hyper_; }
  const NoiseGrouping& grouping() const { return grouping_; }

  Index m() const { return forward_.rows(); }
  Index n() const { return forward_.cols(); }
  Index k() const { return reg_.rows(); }

 private:
  Vector y_;
  LinearOperator forward_;
  LinearOperator reg_;
  GammaHyperPrior hyper_;
  NoiseGrouping grouping_;
};

/// log Γ(x | c, d) = c log d - log Γ(c) + (c-1) log x - d x.
double gamma_log_pdf(double x, const GammaHyperPrior& hyper);

/// -(m/2) log 2π + ½ Σ log α_i - ½ (Fx-y)ᵀ A (Fx-y).
double log_likelihood(const VectorRef& x, const VectorRef& alpha, const HierarchicalModel& model);

/// ½ Σ log β_j - ½ (Rx)ᵀ B (Rx); the prior is left unnormalized (it may be improper).
double log_prior(const VectorRef& x, const VectorRef& beta, const HierarchicalModel& model);

}  // namespace gsbl
