#include "gsbl/uq.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "gsbl/errors.hpp"
#include "gsbl/solver.hpp"

namespace gsbl {
namespace {

void check_cap(Index n, const char* who) {
  if (n > kUqCap) {
    throw UnsupportedSize(std::string(who) + ": " + std::to_string(n) + " unknowns exceeds the dense UQ cap of " +
                          std::to_string(kUqCap));
  }
}

void check_state(const HierarchicalModel& model, const PrecisionState& state) {
  if (state.alpha.size() != model.m() || state.beta.size() != model.k()) {
    throw InvalidArgument("precision state does not match the model");
  }
  state.validate();
}

// R^T B R must be invertible for the prior to be proper.
Matrix proper_prior_precision(const HierarchicalModel& model, const PrecisionState& state) {
  const Matrix r = model.reg().materialize();
  if (r.rows() < r.cols()) {
    throw ImproperPrior("R^T B R is singular (R has fewer rows than columns): the prior is improper and the "
                        "evidence does not exist");
  }
  const Eigen::BDCSVD<Matrix> svd(r);
  const Vector& s = svd.singularValues();
  if (s[s.size() - 1] <= 1e-12 * s[0]) {
    throw ImproperPrior("R^T B R is singular (ker R != {0}): the prior is improper and the evidence does not exist");
  }
  return r.transpose() * state.beta.asDiagonal() * r;
}

double log_det_spd(const Matrix& m, const char* what) {
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw IllPosedModel(std::string(what) + ": Cholesky factorization failed");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

PosteriorGaussian::PosteriorGaussian(Vector mean, Matrix precision_factor)
    : mean_(std::move(mean)), factor_(std::move(precision_factor)) {
  if (factor_.rows() != factor_.cols() || factor_.rows() != mean_.size()) {
    throw InvalidArgument("PosteriorGaussian: factor must be n x n");
  }
}

Matrix PosteriorGaussian::covariance() const {
  const Matrix linv = factor_.triangularView<Eigen::Lower>().solve(Matrix::Identity(size(), size()));
  return linv.transpose() * linv;
}

Vector PosteriorGaussian::marginal_variances() const {
  const Matrix linv = factor_.triangularView<Eigen::Lower>().solve(Matrix::Identity(size(), size()));
  return linv.colwise().squaredNorm().transpose();
}

PosteriorGaussian posterior_gaussian(const HierarchicalModel& model, const PrecisionState& state) {
  check_cap(model.n(), "posterior_gaussian");
  check_state(model, state);
  const NormalEquations eq(model, true);
  const Matrix g = eq.assemble(state);
  const Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw IllPosedModel("posterior precision: Cholesky factorization failed");
  Matrix l = llt.matrixL();
  if (l.diagonal().array().square().minCoeff() <= 1e-14 * g.diagonal().maxCoeff()) {
    throw IllPosedModel("posterior precision is numerically singular");
  }
  Vector mean = eq.rhs(state);
  l.triangularView<Eigen::Lower>().solveInPlace(mean);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(mean);
  return PosteriorGaussian(std::move(mean), std::move(l));
}

Matrix sample_posterior(const PosteriorGaussian& post, Index count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("sample_posterior: count must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = post.size();
  const auto upper = post.precision_factor().transpose().triangularView<Eigen::Upper>();
  Matrix out(count, n);
  Vector z(n);
  for (Index s = 0; s < count; ++s) {
    for (Index i = 0; i < n; ++i) z[i] = normal(rng);
    upper.solveInPlace(z);
    out.row(s) = (post.mean() + z).transpose();
  }
  return out;
}

double two_sided_normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("credible level must lie in (0, 1)");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 * (1.0 + level));
}

CredibleBand credible_band(const PosteriorGaussian& post, double level) {
  const double q = two_sided_normal_quantile(level);
  const Vector sd = post.marginal_variances().cwiseSqrt();
  return {post.mean(), post.mean() - q * sd, post.mean() + q * sd, level};
}

double log_evidence(const HierarchicalModel& model, const PrecisionState& state) {
  check_cap(model.n(), "log_evidence");
  check_state(model, state);
  proper_prior_precision(model, state);
  const NormalEquations eq(model, true);
  const Matrix g = eq.assemble(state);
  const Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw IllPosedModel("evidence: Cholesky factorization failed");
  const double log_det_g = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Vector b = eq.rhs(state);
  const Vector mu = llt.solve(b);
  // y^T Σ^{-1} y = y^T A y - b^T μ (Woodbury).
  const double quad = (state.alpha.array() * model.y().array().square()).sum() - b.dot(mu);
  const double m = static_cast<double>(model.m());
  return 0.5 * (state.alpha.array().log().sum() + state.beta.array().log().sum() - log_det_g) - 0.5 * quad -
         0.5 * m * std::log(2.0 * std::numbers::pi);
}

double log_evidence_sigma_form(const HierarchicalModel& model, const PrecisionState& state) {
  check_cap(model.n(), "log_evidence_sigma_form");
  check_state(model, state);
  const Matrix prior_prec = proper_prior_precision(model, state);
  const Matrix f = model.forward().materialize();
  const Eigen::LLT<Matrix> prior_llt(prior_prec);
  if (prior_llt.info() != Eigen::Success) throw ImproperPrior("R^T B R is not positive definite");
  Matrix sigma = f * prior_llt.solve(f.transpose());
  sigma.diagonal() += state.alpha.cwiseInverse();
  const Eigen::LLT<Matrix> sigma_llt(sigma);
  if (sigma_llt.info() != Eigen::Success) throw IllPosedModel("evidence: Sigma is not positive definite");
  const double log_det_sigma = 2.0 * sigma_llt.matrixLLT().diagonal().array().log().sum();
  const double quad = model.y().dot(sigma_llt.solve(model.y()));
  const double m = static_cast<double>(model.m());
  const double log_normal = -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_sigma - 0.5 * quad;
  return log_normal + 0.5 * (state.beta.array().log().sum() - log_det_spd(prior_prec, "R^T B R"));
}

}  // namespace gsbl
