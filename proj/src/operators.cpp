#include "gsbl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <sstream>

#include "gsbl/errors.hpp"

namespace gsbl {

using ComplexMatrix = Eigen::MatrixXcd;

std::string_view to_string(OperatorKind kind) noexcept {
  switch (kind) {
    case OperatorKind::dense:
      return "dense";
    case OperatorKind::convolution:
      return "convolution";
    case OperatorKind::fourier_subsampled:
      return "fourier-subsampled";
    case OperatorKind::kron_separable:
      return "kron-separable";
    case OperatorKind::stacked:
      return "stacked";
    case OperatorKind::tv1:
      return "tv1";
    case OperatorKind::tv2:
      return "tv2";
    case OperatorKind::combined_tv:
      return "combined-tv";
    case OperatorKind::aniso_2d:
      return "aniso-2d";
    case OperatorKind::identity:
      return "identity";
  }
  return "unknown";
}

Grid1D::Grid1D(Index points) : n(points) {
  if (points < 1) throw InvalidArgument("Grid1D: need at least one point");
}

Matrix LinearOperator::Impl::materialize() const {
  Matrix out(rows(), cols());
  Vector e = Vector::Zero(cols());
  for (Index j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    apply(e, out.col(j));
    e[j] = 0.0;
  }
  return out;
}

Vector LinearOperator::Impl::weighted_column_norms2(const VectorRef& w) const {
  const Matrix a = materialize();
  return a.array().square().matrix().transpose() * w;
}

LinearOperator::LinearOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
  if (!impl_) throw InvalidArgument("LinearOperator: null implementation");
}

Vector LinearOperator::apply(const VectorRef& x) const {
  Vector out(rows());
  apply_to(x, out);
  return out;
}

Vector LinearOperator::adjoint(const VectorRef& y) const {
  Vector out(cols());
  adjoint_to(y, out);
  return out;
}

void LinearOperator::apply_to(const VectorRef& x, Eigen::Ref<Vector> out) const {
  if (x.size() != cols() || out.size() != rows()) throw InvalidArgument("LinearOperator::apply: dimension mismatch");
  impl_->apply(x, out);
}

void LinearOperator::adjoint_to(const VectorRef& y, Eigen::Ref<Vector> out) const {
  if (y.size() != rows() || out.size() != cols()) throw InvalidArgument("LinearOperator::adjoint: dimension mismatch");
  impl_->adjoint(y, out);
}

Vector LinearOperator::weighted_column_norms2(const VectorRef& w) const {
  if (w.size() != rows()) throw InvalidArgument("weighted_column_norms2: weight length must equal rows");
  return impl_->weighted_column_norms2(w);
}

std::string LinearOperator::describe() const {
  std::ostringstream os;
  os << to_string(kind()) << ' ' << rows() << 'x' << cols();
  return os.str();
}

namespace {

class DenseImpl final : public LinearOperator::Impl {
 public:
  DenseImpl(Matrix m, OperatorKind kind) : m_(std::move(m)), kind_(kind) {}
  Index rows() const override { return m_.rows(); }
  Index cols() const override { return m_.cols(); }
  OperatorKind kind() const override { return kind_; }
  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override { out.noalias() = m_ * x; }
  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override { out.noalias() = m_.transpose() * y; }
  Matrix materialize() const override { return m_; }
  Vector weighted_column_norms2(const VectorRef& w) const override {
    return m_.array().square().matrix().transpose() * w;
  }
  const Matrix* factor() const override { return &m_; }

 private:
  Matrix m_;
  OperatorKind kind_;
};

class IdentityImpl final : public LinearOperator::Impl {
 public:
  explicit IdentityImpl(Index n) : n_(n) {}
  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  OperatorKind kind() const override { return OperatorKind::identity; }
  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override { out = x; }
  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override { out = y; }
  Matrix materialize() const override { return Matrix::Identity(n_, n_); }
  Vector weighted_column_norms2(const VectorRef& w) const override { return w; }

 private:
  Index n_;
};

// F1 ⊗ F1 acting on column-major n×n images.
class KronImpl final : public LinearOperator::Impl {
 public:
  KronImpl(Matrix f1, Index n) : f1_(std::move(f1)), f1sq_(f1_.array().square().matrix()), n_(n) {}
  Index rows() const override { return f1_.rows() * f1_.rows(); }
  Index cols() const override { return n_ * n_; }
  OperatorKind kind() const override { return OperatorKind::kron_separable; }
  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override {
    const Eigen::Map<const Matrix> img(x.data(), n_, n_);
    const Index m = f1_.rows();
    Eigen::Map<Matrix> res(out.data(), m, m);
    const Matrix tmp = f1_ * img;
    res.noalias() = tmp * f1_.transpose();
  }
  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override {
    const Index m = f1_.rows();
    const Eigen::Map<const Matrix> img(y.data(), m, m);
    Eigen::Map<Matrix> res(out.data(), n_, n_);
    const Matrix tmp = f1_.transpose() * img;
    res.noalias() = tmp * f1_;
  }
  Vector weighted_column_norms2(const VectorRef& w) const override {
    const Index m = f1_.rows();
    const Eigen::Map<const Matrix> wimg(w.data(), m, m);
    Vector out(n_ * n_);
    Eigen::Map<Matrix>(out.data(), n_, n_).noalias() = f1sq_.transpose() * wimg * f1sq_;
    return out;
  }
  const Matrix* factor() const override { return &f1_; }

 private:
  Matrix f1_;
  Matrix f1sq_;
  Index n_;
};

// [I ⊗ R1; R1 ⊗ I]: first block vec(R1 X) (k1×n), second block vec(X R1^T) (n×k1).
class AnisoImpl final : public LinearOperator::Impl {
 public:
  AnisoImpl(Matrix r1, Index n) : r1_(std::move(r1)), r1sq_(r1_.array().square().matrix()), n_(n) {}
  Index rows() const override { return 2 * r1_.rows() * n_; }
  Index cols() const override { return n_ * n_; }
  OperatorKind kind() const override { return OperatorKind::aniso_2d; }
  std::vector<Index> block_sizes() const override { return {r1_.rows() * n_, r1_.rows() * n_}; }
  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override {
    const Index k = r1_.rows();
    const Eigen::Map<const Matrix> img(x.data(), n_, n_);
    Eigen::Map<Matrix>(out.data(), k, n_).noalias() = r1_ * img;
    Eigen::Map<Matrix>(out.data() + k * n_, n_, k).noalias() = img * r1_.transpose();
  }
  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override {
    const Index k = r1_.rows();
    const Eigen::Map<const Matrix> u1(y.data(), k, n_);
    const Eigen::Map<const Matrix> u2(y.data() + k * n_, n_, k);
    Eigen::Map<Matrix> res(out.data(), n_, n_);
    res.noalias() = r1_.transpose() * u1;
    res.noalias() += u2 * r1_;
  }
  Vector weighted_column_norms2(const VectorRef& w) const override {
    const Index k = r1_.rows();
    const Eigen::Map<const Matrix> w1(w.data(), k, n_);
    const Eigen::Map<const Matrix> w2(w.data() + k * n_, n_, k);
    Vector out(n_ * n_);
    Eigen::Map<Matrix> res(out.data(), n_, n_);
    res.noalias() = r1sq_.transpose() * w1;
    res.noalias() += w2 * r1sq_;
    return out;
  }
  const Matrix* factor() const override { return &r1_; }

 private:
  Matrix r1_;
  Matrix r1sq_;
  Index n_;
};

// [Re(F ⊗ F); Im(F ⊗ F)] with F the row-subsampled unitary DFT.
class FourierImpl final : public LinearOperator::Impl {
 public:
  FourierImpl(ComplexMatrix f, Index n) : f_(std::move(f)), n_(n) {
    const Matrix re = f_.real();
    const Matrix im = f_.imag();
    rr_ = re.array().square();
    ii_ = im.array().square();
    ri_ = (re.array() * im.array()).matrix();
  }
  Index rows() const override { return 2 * mr() * mr(); }
  Index cols() const override { return n_ * n_; }
  OperatorKind kind() const override { return OperatorKind::fourier_subsampled; }
  std::vector<Index> block_sizes() const override { return {mr() * mr(), mr() * mr()}; }

  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override {
    const Index m = mr();
    const Eigen::Map<const Matrix> img(x.data(), n_, n_);
    const ComplexMatrix tmp = f_ * img.cast<std::complex<double>>();
    const ComplexMatrix z = tmp * f_.transpose();
    Eigen::Map<Matrix>(out.data(), m, m) = z.real();
    Eigen::Map<Matrix>(out.data() + m * m, m, m) = z.imag();
  }

  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override {
    const Index m = mr();
    ComplexMatrix z(m, m);
    z.real() = Eigen::Map<const Matrix>(y.data(), m, m);
    z.imag() = Eigen::Map<const Matrix>(y.data() + m * m, m, m);
    const ComplexMatrix tmp = f_.adjoint() * z;
    const ComplexMatrix res = tmp * f_.conjugate();
    Eigen::Map<Matrix>(out.data(), n_, n_) = res.real();
  }

  // Re(G)^2 and Im(G)^2 expand into sums of separable terms in Re(F), Im(F).
  Vector weighted_column_norms2(const VectorRef& w) const override {
    const Index m = mr();
    const Eigen::Map<const Matrix> wre(w.data(), m, m);
    const Eigen::Map<const Matrix> wim(w.data() + m * m, m, m);
    Vector out(n_ * n_);
    Eigen::Map<Matrix> res(out.data(), n_, n_);
    res.noalias() = rr_.transpose() * wre * rr_;
    res.noalias() -= 2.0 * (ri_.transpose() * wre * ri_);
    res.noalias() += ii_.transpose() * wre * ii_;
    res.noalias() += rr_.transpose() * wim * ii_;
    res.noalias() += 2.0 * (ri_.transpose() * wim * ri_);
    res.noalias() += ii_.transpose() * wim * rr_;
    return out;
  }

 private:
  Index mr() const { return f_.rows(); }

  ComplexMatrix f_;
  Matrix rr_, ii_, ri_;
  Index n_;
};

class StackedImpl final : public LinearOperator::Impl {
 public:
  explicit StackedImpl(std::vector<LinearOperator> ops) : ops_(std::move(ops)) {
    for (const auto& op : ops_) rows_ += op.rows();
  }
  Index rows() const override { return rows_; }
  Index cols() const override { return ops_.front().cols(); }
  OperatorKind kind() const override { return OperatorKind::stacked; }
  std::vector<Index> block_sizes() const override {
    std::vector<Index> sizes;
    for (const auto& op : ops_) sizes.push_back(op.rows());
    return sizes;
  }
  void apply(const VectorRef& x, Eigen::Ref<Vector> out) const override {
    Index off = 0;
    for (const auto& op : ops_) {
      op.apply_to(x, out.segment(off, op.rows()));
      off += op.rows();
    }
  }
  void adjoint(const VectorRef& y, Eigen::Ref<Vector> out) const override {
    out.setZero();
    Vector part(cols());
    Index off = 0;
    for (const auto& op : ops_) {
      op.adjoint_to(y.segment(off, op.rows()), part);
      out += part;
      off += op.rows();
    }
  }
  Vector weighted_column_norms2(const VectorRef& w) const override {
    Vector out = Vector::Zero(cols());
    Index off = 0;
    for (const auto& op : ops_) {
      out += op.weighted_column_norms2(w.segment(off, op.rows()));
      off += op.rows();
    }
    return out;
  }

 private:
  std::vector<LinearOperator> ops_;
  Index rows_ = 0;
};

Matrix difference_stencil(Index rows, Index cols, Index col_offset, std::initializer_list<double> stencil) {
  Matrix m = Matrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    Index c = col_offset + r;
    for (double v : stencil) m(r, c++) = v;
  }
  return m;
}

Matrix square_factor(const LinearOperator& op, Index n, const char* who) {
  if (op.cols() != n) throw InvalidArgument(std::string(who) + ": 1-D operator must have n columns");
  return op.materialize();
}

}  // namespace

LinearOperator dense_operator(Matrix m, OperatorKind kind) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidArgument("dense_operator: empty matrix");
  return LinearOperator(std::make_shared<DenseImpl>(std::move(m), kind));
}

LinearOperator identity_operator(Index n) {
  if (n < 1) throw InvalidArgument("identity_operator: n must be positive");
  return LinearOperator(std::make_shared<IdentityImpl>(n));
}

LinearOperator build_gaussian_convolution(Index n, double gamma) {
  if (n < 2) throw InvalidArgument("build_gaussian_convolution: n must be at least 2");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("build_gaussian_convolution: gamma must be positive");
  const Grid1D grid(n);
  const double scale = grid.h() / (2.0 * std::numbers::pi * gamma * gamma);
  const double denom = 2.0 * gamma * gamma;
  Matrix f(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double s = grid.offset(i - j);
      f(i, j) = scale * std::exp(-(s * s) / denom);
    }
  }
  return dense_operator(std::move(f), OperatorKind::convolution);
}

LinearOperator build_tv1(Index n) {
  if (n < 2) throw InvalidArgument("build_tv1: n must be at least 2");
  return dense_operator(difference_stencil(n - 1, n, 0, {-1.0, 1.0}), OperatorKind::tv1);
}

LinearOperator build_tv2(Index n) {
  if (n < 3) throw InvalidArgument("build_tv2: n must be at least 3");
  return dense_operator(difference_stencil(n - 2, n, 0, {-1.0, 2.0, -1.0}), OperatorKind::tv2);
}

LinearOperator build_combined_tv(Index n) {
  if (n < 6 || n % 2 != 0) throw InvalidArgument("build_combined_tv: n must be even and at least 6");
  const Index q = n / 2;
  Matrix m = Matrix::Zero(n - 3, n);
  m.topRows(q - 1) = difference_stencil(q - 1, n, 0, {-1.0, 1.0});
  m.bottomRows(q - 2) = difference_stencil(q - 2, n, q, {-1.0, 2.0, -1.0});
  return dense_operator(std::move(m), OperatorKind::combined_tv);
}

LinearOperator build_separable_2d(const LinearOperator& f1, Index n) {
  if (n < 1) throw InvalidArgument("build_separable_2d: n must be positive");
  if (f1.rows() != n) throw InvalidArgument("build_separable_2d: F1 must be n x n");
  Matrix f = square_factor(f1, n, "build_separable_2d");
  return LinearOperator(std::make_shared<KronImpl>(std::move(f), n));
}

LinearOperator build_anisotropic_2d(const LinearOperator& r1, Index n) {
  if (n < 2) throw InvalidArgument("build_anisotropic_2d: n must be at least 2");
  Matrix r = square_factor(r1, n, "build_anisotropic_2d");
  if (r.rows() >= n) throw InvalidArgument("build_anisotropic_2d: R1 must have fewer rows than columns");
  return LinearOperator(std::make_shared<AnisoImpl>(std::move(r), n));
}

LinearOperator build_subsampled_fourier(Index n, const std::vector<Index>& removed) {
  if (n < 2) throw InvalidArgument("build_subsampled_fourier: n must be at least 2");
  std::set<Index> drop;
  for (Index r : removed) {
    if (r < 1 || r > n) throw InvalidArgument("build_subsampled_fourier: removed index out of range 1..n");
    drop.insert(r);
  }
  if (static_cast<Index>(drop.size()) == n) throw InvalidArgument("build_subsampled_fourier: every frequency removed");
  const Index kept = n - static_cast<Index>(drop.size());
  ComplexMatrix f(kept, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  Index row = 0;
  for (Index r = 1; r <= n; ++r) {
    if (drop.count(r)) continue;
    const Index freq = r - 1;
    for (Index k = 0; k < n; ++k) {
      // (freq * k) mod n keeps the phase argument small and exact.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((freq * k) % n) / static_cast<double>(n);
      f(row, k) = std::polar(norm, phase);
    }
    ++row;
  }
  return LinearOperator(std::make_shared<FourierImpl>(std::move(f), n));
}

LinearOperator stack_operators(const std::vector<LinearOperator>& ops) {
  if (ops.empty()) throw InvalidArgument("stack_operators: need at least one operator");
  for (const auto& op : ops) {
    if (op.cols() != ops.front().cols()) throw InvalidArgument("stack_operators: column counts differ");
  }
  return LinearOperator(std::make_shared<StackedImpl>(ops));
}

LinearOperator select_rows(const LinearOperator& op, const std::vector<Index>& rows) {
  if (rows.empty()) throw InvalidArgument("select_rows: no rows selected");
  const Matrix full = op.materialize();
  Matrix m(static_cast<Index>(rows.size()), op.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= op.rows()) throw InvalidArgument("select_rows: row index out of range");
    m.row(static_cast<Index>(i)) = full.row(rows[i]);
  }
  return dense_operator(std::move(m));
}

bool check_common_kernel(const LinearOperator& f, const LinearOperator& r, double tol) {
  if (f.cols() != r.cols()) throw InvalidArgument("check_common_kernel: column counts differ");
  if (!(tol >= 0.0)) throw InvalidArgument("check_common_kernel: tol must be non-negative");
  const Index n = f.cols();
  if (n > kCommonKernelCap) {
    throw UnsupportedSize("check_common_kernel: " + std::to_string(n) + " unknowns exceeds the dense cap of " +
                          std::to_string(kCommonKernelCap) + "; skip validation for this model");
  }
  Matrix stacked(f.rows() + r.rows(), n);
  stacked.topRows(f.rows()) = f.materialize();
  stacked.bottomRows(r.rows()) = r.materialize();
  if (stacked.rows() < n) return false;
  const Eigen::BDCSVD<Matrix> svd(stacked);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return false;
  return s[s.size() - 1] > tol * s[0];
}

}  // namespace gsbl
