#pragma once

// Forward and regularization operators. A LinearOperator is an immutable,
// cheaply copyable handle (shared implementation) exposing apply/adjoint and
// optional dense materialization. 2-D operators act on column-major
// vectorized n×n images, vec(X) = [X(:,0); X(:,1); ...].

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gsbl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Vector>;

enum class OperatorKind {
  dense,
  convolution,
  fourier_subsampled,
  kron_separable,
  stacked,
  tv1,
  tv2,
  combined_tv,
  aniso_2d,
  identity,
};

std::string_view to_string(OperatorKind kind) noexcept;

/// Equidistant grid on [0, 1] with n points. Only n is stored; the spacing is
/// derived as 1/n and grid offsets h·i are formed as i/n, so h·n = 1 holds
/// exactly wherever it is used.
struct Grid1D {
  Index n;

  explicit Grid1D(Index points);
  double h() const noexcept { return 1.0 / static_cast<double>(n); }
  double offset(Index i) const noexcept { return static_cast<double>(i) / static_cast<double>(n); }
  /// Cell midpoint (i + 1/2)/n.
  double midpoint(Index i) const noexcept { return (static_cast<double>(i) + 0.5) / static_cast<double>(n); }
};

class LinearOperator {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual OperatorKind kind() const = 0;
    virtual void apply(const VectorRef& x, Eigen::Ref<Vector> out) const = 0;
    virtual void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const = 0;
    virtual Matrix materialize() const;
    /// sum_i w_i A_ij^2 for every column j; the diagonal of A^T diag(w) A.
    virtual Vector weighted_column_norms2(const VectorRef& w) const;
    virtual std::vector<Index> block_sizes() const { return {rows()}; }
    virtual const Matrix* factor() const { return nullptr; }
  };

  explicit LinearOperator(std::shared_ptr<const Impl> impl);

  Index rows() const { return impl_->rows(); }
  Index cols() const { return impl_->cols(); }
  OperatorKind kind() const { return impl_->kind(); }

  Vector apply(const VectorRef& x) const;
  Vector adjoint(const VectorRef& y) const;
  void apply_to(const VectorRef& x, Eigen::Ref<Vector> out) const;
  void adjoint_to(const VectorRef& y, Eigen::Ref<Vector> out) const;

  Matrix materialize() const { return impl_->materialize(); }
  Vector weighted_column_norms2(const VectorRef& w) const;

  /// Row block sizes; a single block except for stacked operators.
  std::vector<Index> block_sizes() const { return impl_->block_sizes(); }

  /// The dense 1-D factor of a kron-separable (F1) or aniso-2d (R1) operator.
  const Matrix* factor() const { return impl_->factor(); }

  std::string describe() const;

 private:
  std::shared_ptr<const Impl> impl_;
};

LinearOperator dense_operator(Matrix m, OperatorKind kind = OperatorKind::dense);
LinearOperator identity_operator(Index n);

/// [F]_ij = h k(h(i-j)), k(s) = exp(-s^2 / (2 gamma^2)) / (2 pi gamma^2), truncated at the edges.
LinearOperator build_gaussian_convolution(Index n, double gamma);

/// (n-1)×n forward differences, row j = (-1 at j, +1 at j+1).
LinearOperator build_tv1(Index n);

/// (n-2)×n second differences with stencil (-1, 2, -1).
LinearOperator build_tv2(Index n);

/// (n-3)×n: first differences on the first half (n/2 - 1 rows), then second
/// differences on indices n/2+1..n (1-based, n/2 - 2 rows).
LinearOperator build_combined_tv(Index n);

/// Matrix-free F1 ⊗ F1 on vec(X): apply = vec(F1 X F1^T), adjoint = vec(F1^T Y F1).
LinearOperator build_separable_2d(const LinearOperator& f1, Index n);

/// Matrix-free [I ⊗ R1; R1 ⊗ I]: output [vec(R1 X); vec(X R1^T)].
LinearOperator build_anisotropic_2d(const LinearOperator& r1, Index n);

/// Real 2 m_r^2 × n^2 operator [Re(G); Im(G)] with G = F ⊗ F, F the unitary
/// n-point DFT (1/sqrt(n) scaling) with the 1-based rows in `removed` deleted.
LinearOperator build_subsampled_fourier(Index n, const std::vector<Index>& removed);

/// Vertical stack; the block sizes are recorded for grouped noise updates.
LinearOperator stack_operators(const std::vector<LinearOperator>& ops);

/// Dense operator made of the given 0-based rows of `op`.
LinearOperator select_rows(const LinearOperator& op, const std::vector<Index>& rows);

/// Largest column count accepted by check_common_kernel (dense SVD).
inline constexpr Index kCommonKernelCap = 1024;

/// ker(F) ∩ ker(R) = {0} at tolerance tol: smallest singular value of the
/// stacked dense [F; R] exceeds tol times the largest.
bool check_common_kernel(const LinearOperator& f, const LinearOperator& r, double tol = 1e-10);

}  // namespace gsbl
