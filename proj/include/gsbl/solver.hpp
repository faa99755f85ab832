#pragma once

// Bayesian coordinate descent (BCD) for the posterior mean: alternate the
// x-update (F^T A F + R^T B R) x = F^T A y with the closed-form Gamma
// posterior means for α and β.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsbl/model.hpp"

namespace gsbl {

enum class Backend { direct, pcg, gradient_descent };

std::string_view to_string(Backend backend) noexcept;
/// Accepts "direct", "pcg", "gd" and "gradient-descent".
Backend parse_backend(std::string_view name);

/// Unknown count up to which the automatic choice uses the dense direct solve.
inline constexpr Index kDirectBackendCap = 2048;

struct InnerOptions {
  Index max_iters = 10000;
  double tol = 1e-10;  // on ||b - Gx|| / ||b||
};

struct BcdOptions {
  Index max_outer_iters = 1000;
  double outer_tol = 1e-6;
  std::optional<Backend> backend;  // unset: direct up to kDirectBackendCap unknowns, gradient descent above
  InnerOptions inner;
  double alpha_init = 1.0;
  double beta_init = 1.0;

  void validate() const;
  Backend resolve_backend(Index unknowns) const;
};

struct BcdResult {
  Vector x;
  PrecisionState state;
  Index iterations = 0;
  bool converged = false;
  Backend backend = Backend::direct;
  std::vector<double> history;    // relative change of x per outer iteration
  std::vector<double> data_fit;   // ||F x - y||_2 per outer iteration
  std::vector<double> reg_norm;   // ||R x||_1 per outer iteration
  std::vector<Index> inner_iterations;
};

/// Matrix-free access to G = F^T A F + R^T B R and b = F^T A y for one model.
/// With `dense` set the operators are materialized once and G can be assembled.
class NormalEquations {
 public:
  explicit NormalEquations(const HierarchicalModel& model, bool dense = false);

  void matvec(const PrecisionState& state, const VectorRef& x, Eigen::Ref<Vector> out) const;
  Vector rhs(const PrecisionState& state) const;
  Vector diagonal(const PrecisionState& state) const;
  Matrix assemble(const PrecisionState& state) const;

  const HierarchicalModel& model() const { return model_; }

 private:
  const HierarchicalModel& model_;
  std::optional<Matrix> f_dense_;
  std::optional<Matrix> r_dense_;
  bool separable_2d_ = false;
};

struct InnerResult {
  Vector x;
  Index iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// One gradient-descent iteration as seen by an observer.
struct GdStep {
  Index iteration;
  double rr;        // r^T r
  double rgr;       // r^T G r
  double gamma;     // step size
  double residual;  // ||r|| after the update
};

using SpdMap = std::function<void(const VectorRef& x, Eigen::Ref<Vector> out)>;
using GdObserver = std::function<void(const GdStep&)>;

/// Steepest descent with exact line search: r = b - Gx; repeat { Gr;
/// γ = rᵀr / rᵀGr; x += γ r; r -= γ Gr } until ||r||/||b|| <= tol.
/// Throws IllPosedModel if rᵀGr <= 0.
InnerResult gradient_descent_solve(const SpdMap& matvec, const VectorRef& b, const VectorRef& x0,
                                   const InnerOptions& opts, const GdObserver& observer = {});

/// Conjugate gradients with the Jacobi preconditioner diag(G)^{-1}.
InnerResult pcg_solve(const SpdMap& matvec, const VectorRef& diagonal, const VectorRef& b, const VectorRef& x0,
                      const InnerOptions& opts);

/// Solve (F^T A F + R^T B R) x = F^T A y with the chosen backend.
Vector update_x(const HierarchicalModel& model, const PrecisionState& state, Backend backend,
                const VectorRef& warm_start, const InnerOptions& opts = {});

/// α from the residual F x - y under the noise grouping.
Vector update_alpha(const VectorRef& residual, const GammaHyperPrior& hyper, const NoiseGrouping& grouping);

/// β_j = (1 + 2c) / ([Rx]_j^2 + 2d).
Vector update_beta(const VectorRef& rx, const GammaHyperPrior& hyper);

/// G x for F = F1 ⊗ F1 and R = [I ⊗ R1; R1 ⊗ I] without forming G:
///   vec(F1ᵀ[Ã ⊙ F1 X F1ᵀ]F1) + vec(R1ᵀ[B̃1 ⊙ R1 X]) + vec([B̃2 ⊙ X R1ᵀ]R1)
/// with B̃1 (k1×n) weighting the vec(R1 X) block and B̃2 (n×k1) the vec(X R1ᵀ) block.
Vector matfree_normal_matvec_2d(const LinearOperator& f1, const LinearOperator& r1, const Matrix& alpha_img,
                                const Matrix& beta1_img, const Matrix& beta2_img, const VectorRef& x);

/// b = vec(F1ᵀ[Ã ⊙ Y]F1).
Vector matfree_normal_rhs_2d(const LinearOperator& f1, const Matrix& alpha_img, const Matrix& y_img);

/// Called after every outer iteration with the 1-based iteration count.
using BcdObserver = std::function<void(Index iteration, const Vector& x, const PrecisionState& state)>;

BcdResult bcd_solve(const HierarchicalModel& model, const BcdOptions& opts, const BcdObserver& observer = {});

}  // namespace gsbl
