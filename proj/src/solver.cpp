#include "gsbl/solver.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "gsbl/errors.hpp"
#include "gsbl/simd.hpp"

namespace gsbl {
namespace {

std::span<const double> view(const VectorRef& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Eigen::Ref<Vector> v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

double norm2(const VectorRef& v) { return std::sqrt(simd::dot(view(v), view(v))); }

// G x on column-major images; see matfree_normal_matvec_2d.
void normal_matvec_2d(const Matrix& f1, const Matrix& r1, const double* alpha, const double* beta1,
                      const double* beta2, const double* x, double* out) {
  const Index n = f1.cols();
  const Index m1 = f1.rows();
  const Index k1 = r1.rows();
  const Eigen::Map<const Matrix> img(x, n, n);
  Eigen::Map<Matrix> res(out, n, n);

  Matrix fx = f1 * img;
  Matrix y = fx * f1.transpose();
  simd::hadamard({alpha, static_cast<std::size_t>(m1 * m1)}, view(y), view(y));
  fx.noalias() = f1.transpose() * y;
  res.noalias() = fx * f1;

  Matrix u = r1 * img;
  simd::hadamard({beta1, static_cast<std::size_t>(k1 * n)}, view(u), view(u));
  res.noalias() += r1.transpose() * u;

  Matrix v = img * r1.transpose();
  simd::hadamard({beta2, static_cast<std::size_t>(n * k1)}, view(v), view(v));
  res.noalias() += v * r1;
}

void check_2d_shapes(const Matrix& f1, const Matrix& r1, const Matrix& a, const Matrix& b1, const Matrix& b2,
                     Index x_size) {
  const Index n = f1.cols();
  if (r1.cols() != n) throw InvalidArgument("matfree 2-D: F1 and R1 differ in columns");
  if (x_size != n * n) throw InvalidArgument("matfree 2-D: x must have n^2 entries");
  if (a.rows() != f1.rows() || a.cols() != f1.rows()) throw InvalidArgument("matfree 2-D: alpha image shape");
  if (b1.rows() != r1.rows() || b1.cols() != n) throw InvalidArgument("matfree 2-D: beta1 image must be k1 x n");
  if (b2.rows() != n || b2.cols() != r1.rows()) throw InvalidArgument("matfree 2-D: beta2 image must be n x k1");
}

Matrix factor_of(const LinearOperator& op) {
  if (const Matrix* f = op.factor()) return *f;
  return op.materialize();
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  switch (backend) {
    case Backend::direct:
      return "direct";
    case Backend::pcg:
      return "pcg";
    case Backend::gradient_descent:
      return "gd";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "direct") return Backend::direct;
  if (name == "pcg") return Backend::pcg;
  if (name == "gd" || name == "gradient-descent") return Backend::gradient_descent;
  throw InvalidArgument("unknown backend '" + std::string(name) + "' (expected direct, pcg or gd)");
}

void BcdOptions::validate() const {
  if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be at least 1");
  if (inner.max_iters < 1) throw InvalidArgument("inner_max_iters must be at least 1");
  if (!(outer_tol > 0.0)) throw InvalidArgument("outer_tol must be positive");
  if (!(inner.tol > 0.0)) throw InvalidArgument("inner_tol must be positive");
  if (!(alpha_init > 0.0) || !std::isfinite(alpha_init)) throw InvalidArgument("alpha_init must be positive");
  if (!(beta_init > 0.0) || !std::isfinite(beta_init)) throw InvalidArgument("beta_init must be positive");
}

Backend BcdOptions::resolve_backend(Index unknowns) const {
  if (backend) return *backend;
  return unknowns <= kDirectBackendCap ? Backend::direct : Backend::gradient_descent;
}

NormalEquations::NormalEquations(const HierarchicalModel& model, bool dense) : model_(model) {
  if (dense) {
    f_dense_ = model.forward().materialize();
    r_dense_ = model.reg().materialize();
    return;
  }
  separable_2d_ = model.forward().kind() == OperatorKind::kron_separable &&
                  model.reg().kind() == OperatorKind::aniso_2d &&
                  model.forward().factor()->cols() == model.reg().factor()->cols();
}

void NormalEquations::matvec(const PrecisionState& state, const VectorRef& x, Eigen::Ref<Vector> out) const {
  const auto& f = model_.forward();
  const auto& r = model_.reg();
  if (separable_2d_) {
    const Matrix& f1 = *f.factor();
    const Matrix& r1 = *r.factor();
    const Index split = r1.rows() * f1.cols();
    normal_matvec_2d(f1, r1, state.alpha.data(), state.beta.data(), state.beta.data() + split, x.data(), out.data());
    return;
  }
  Vector fx(model_.m());
  Vector rx(model_.k());
  if (f_dense_) {
    fx.noalias() = *f_dense_ * x;
    rx.noalias() = *r_dense_ * x;
  } else {
    f.apply_to(x, fx);
    r.apply_to(x, rx);
  }
  simd::hadamard(view(state.alpha), view(fx), view(fx));
  simd::hadamard(view(state.beta), view(rx), view(rx));
  if (f_dense_) {
    out.noalias() = f_dense_->transpose() * fx;
    out.noalias() += r_dense_->transpose() * rx;
  } else {
    Vector part(model_.n());
    f.adjoint_to(fx, out);
    r.adjoint_to(rx, part);
    simd::axpy(1.0, view(part), view(out));
  }
}

Vector NormalEquations::rhs(const PrecisionState& state) const {
  Vector ay(model_.m());
  simd::hadamard(view(state.alpha), view(model_.y()), view(ay));
  if (f_dense_) return f_dense_->transpose() * ay;
  return model_.forward().adjoint(ay);
}

Vector NormalEquations::diagonal(const PrecisionState& state) const {
  return model_.forward().weighted_column_norms2(state.alpha) + model_.reg().weighted_column_norms2(state.beta);
}

Matrix NormalEquations::assemble(const PrecisionState& state) const {
  const Matrix f = f_dense_ ? *f_dense_ : model_.forward().materialize();
  const Matrix r = r_dense_ ? *r_dense_ : model_.reg().materialize();
  Matrix g = f.transpose() * state.alpha.asDiagonal() * f;
  g.noalias() += r.transpose() * state.beta.asDiagonal() * r;
  return g;
}

InnerResult gradient_descent_solve(const SpdMap& matvec, const VectorRef& b, const VectorRef& x0,
                                   const InnerOptions& opts, const GdObserver& observer) {
  if (b.size() != x0.size()) throw InvalidArgument("gradient_descent_solve: b and x0 differ in length");
  InnerResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x = Vector::Zero(b.size());
    res.converged = true;
    return res;
  }
  res.x = x0;
  Vector r(b.size());
  Vector gr(b.size());
  matvec(res.x, gr);
  r = b - gr;
  double rr = simd::dot(view(r), view(r));
  res.relative_residual = std::sqrt(rr) / bnorm;
  while (res.relative_residual > opts.tol && res.iterations < opts.max_iters) {
    matvec(r, gr);
    const double rgr = simd::dot(view(r), view(gr));
    if (!(rgr > 0.0)) throw IllPosedModel("gradient descent: r^T G r <= 0, coefficient matrix is not SPD");
    const double gamma = rr / rgr;
    simd::axpy(gamma, view(r), view(res.x));
    simd::axpy(-gamma, view(gr), view(r));
    ++res.iterations;
    const double rr_prev = rr;
    rr = simd::dot(view(r), view(r));
    res.relative_residual = std::sqrt(rr) / bnorm;
    if (observer) observer({res.iterations, rr_prev, rgr, gamma, std::sqrt(rr)});
  }
  res.converged = res.relative_residual <= opts.tol;
  return res;
}

InnerResult pcg_solve(const SpdMap& matvec, const VectorRef& diagonal, const VectorRef& b, const VectorRef& x0,
                      const InnerOptions& opts) {
  if (b.size() != x0.size() || diagonal.size() != b.size()) throw InvalidArgument("pcg_solve: length mismatch");
  if (!((diagonal.array() > 0.0).all())) throw IllPosedModel("pcg: non-positive diagonal entry");
  InnerResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.x = Vector::Zero(b.size());
    res.converged = true;
    return res;
  }
  const Vector inv_diag = diagonal.cwiseInverse();
  res.x = x0;
  Vector r(b.size());
  Vector q(b.size());
  matvec(res.x, q);
  r = b - q;
  Vector z(b.size());
  simd::hadamard(view(inv_diag), view(r), view(z));
  Vector p = z;
  double rz = simd::dot(view(r), view(z));
  res.relative_residual = norm2(r) / bnorm;
  while (res.relative_residual > opts.tol && res.iterations < opts.max_iters) {
    matvec(p, q);
    const double pq = simd::dot(view(p), view(q));
    if (!(pq > 0.0)) throw IllPosedModel("pcg: p^T G p <= 0, coefficient matrix is not SPD");
    const double step = rz / pq;
    simd::axpy(step, view(p), view(res.x));
    simd::axpy(-step, view(q), view(r));
    ++res.iterations;
    res.relative_residual = norm2(r) / bnorm;
    simd::hadamard(view(inv_diag), view(r), view(z));
    const double rz_next = simd::dot(view(r), view(z));
    simd::xpby(view(z), rz_next / rz, view(p));
    rz = rz_next;
  }
  res.converged = res.relative_residual <= opts.tol;
  return res;
}

namespace {

Vector direct_solve(const NormalEquations& eq, const PrecisionState& state) {
  const Matrix g = eq.assemble(state);
  const Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw IllPosedModel("direct solve: Cholesky factorization failed");
  const Vector piv = llt.matrixLLT().diagonal().array().square();
  if (piv.minCoeff() <= 1e-14 * g.diagonal().maxCoeff()) {
    throw IllPosedModel("direct solve: coefficient matrix is numerically singular");
  }
  return llt.solve(eq.rhs(state));
}

InnerResult solve_with(const NormalEquations& eq, const PrecisionState& state, Backend backend,
                       const VectorRef& warm_start, const InnerOptions& opts) {
  if (backend == Backend::direct) {
    InnerResult res;
    res.x = direct_solve(eq, state);
    res.converged = true;
    return res;
  }
  const SpdMap mv = [&](const VectorRef& v, Eigen::Ref<Vector> out) { eq.matvec(state, v, out); };
  const Vector b = eq.rhs(state);
  if (backend == Backend::pcg) return pcg_solve(mv, eq.diagonal(state), b, warm_start, opts);
  return gradient_descent_solve(mv, b, warm_start, opts);
}

}  // namespace

Vector update_x(const HierarchicalModel& model, const PrecisionState& state, Backend backend,
                const VectorRef& warm_start, const InnerOptions& opts) {
  if (state.alpha.size() != model.m() || state.beta.size() != model.k()) {
    throw InvalidArgument("update_x: precision state does not match the model");
  }
  if (warm_start.size() != model.n()) throw InvalidArgument("update_x: warm start has the wrong length");
  state.validate();
  const NormalEquations eq(model, backend == Backend::direct);
  return solve_with(eq, state, backend, warm_start, opts).x;
}

Vector update_alpha(const VectorRef& residual, const GammaHyperPrior& hyper, const NoiseGrouping& grouping) {
  const Index m = residual.size();
  grouping.validate(m);
  Vector alpha(m);
  if (grouping.mode == NoiseGrouping::Mode::per_entry) {
    simd::precision_update(view(residual), 1.0 + 2.0 * hyper.c, 2.0 * hyper.d, view(alpha));
    return alpha;
  }
  Index off = 0;
  for (Index size : grouping.block_sizes(m)) {
    // Sequential sum so the value does not depend on the kernel variant.
    double ss = 0.0;
    for (Index i = off; i < off + size; ++i) ss += residual[i] * residual[i];
    const double value = (static_cast<double>(size) + 2.0 * hyper.c) / (ss + 2.0 * hyper.d);
    alpha.segment(off, size).setConstant(value);
    off += size;
  }
  return alpha;
}

Vector update_beta(const VectorRef& rx, const GammaHyperPrior& hyper) {
  Vector beta(rx.size());
  simd::precision_update(view(rx), 1.0 + 2.0 * hyper.c, 2.0 * hyper.d, view(beta));
  return beta;
}

Vector matfree_normal_matvec_2d(const LinearOperator& f1, const LinearOperator& r1, const Matrix& alpha_img,
                                const Matrix& beta1_img, const Matrix& beta2_img, const VectorRef& x) {
  const Matrix f = factor_of(f1);
  const Matrix r = factor_of(r1);
  check_2d_shapes(f, r, alpha_img, beta1_img, beta2_img, x.size());
  Vector out(x.size());
  normal_matvec_2d(f, r, alpha_img.data(), beta1_img.data(), beta2_img.data(), x.data(), out.data());
  return out;
}

Vector matfree_normal_rhs_2d(const LinearOperator& f1, const Matrix& alpha_img, const Matrix& y_img) {
  const Matrix f = factor_of(f1);
  if (alpha_img.rows() != f.rows() || alpha_img.cols() != f.rows() || y_img.rows() != f.rows() ||
      y_img.cols() != f.rows()) {
    throw InvalidArgument("matfree_normal_rhs_2d: image shapes must match F1 rows");
  }
  Matrix w = alpha_img.cwiseProduct(y_img);
  Vector out(f.cols() * f.cols());
  Eigen::Map<Matrix>(out.data(), f.cols(), f.cols()).noalias() = f.transpose() * w * f;
  return out;
}

BcdResult bcd_solve(const HierarchicalModel& model, const BcdOptions& opts, const BcdObserver& observer) {
  opts.validate();
  BcdResult res;
  res.backend = opts.resolve_backend(model.n());
  res.state = PrecisionState::constant(model.m(), model.k(), opts.alpha_init, opts.beta_init);
  res.x = Vector::Zero(model.n());
  const NormalEquations eq(model, res.backend == Backend::direct);
  const double eps = std::numeric_limits<double>::epsilon();

  Vector residual(model.m());
  Vector rx(model.k());
  for (Index it = 1; it <= opts.max_outer_iters; ++it) {
    InnerResult inner = solve_with(eq, res.state, res.backend, res.x, opts.inner);
    const double change = (inner.x - res.x).norm() / std::max(res.x.norm(), eps);
    res.x = std::move(inner.x);

    model.forward().apply_to(res.x, residual);
    residual -= model.y();
    res.state.alpha = update_alpha(residual, model.hyper(), model.grouping());
    model.reg().apply_to(res.x, rx);
    res.state.beta = update_beta(rx, model.hyper());

    res.iterations = it;
    res.history.push_back(change);
    res.data_fit.push_back(residual.norm());
    res.reg_norm.push_back(simd::abs_sum(view(rx)));
    res.inner_iterations.push_back(inner.iterations);
    if (res.backend != Backend::direct && !inner.converged) {
      spdlog::debug("outer {}: inner solve stopped at relative residual {:.3e}", it, inner.relative_residual);
    }
    spdlog::debug("outer {}: rel change {:.3e}, inner iterations {}, data fit {:.6e}", it, change, inner.iterations,
                 res.data_fit.back());
    if (observer) observer(it, res.x, res.state);
    if (change <= opts.outer_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gsbl
