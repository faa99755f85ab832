#include "gsbl/model.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "gsbl/errors.hpp"

namespace gsbl {

void GammaHyperPrior::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("hyper-prior shape c must be positive");
  if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("hyper-prior rate d must be positive");
}

std::vector<Index> NoiseGrouping::block_sizes(Index m) const {
  switch (mode) {
    case Mode::scalar:
      return {m};
    case Mode::per_entry:
      return std::vector<Index>(static_cast<std::size_t>(m), 1);
    case Mode::grouped:
      return blocks;
  }
  return {m};
}

void NoiseGrouping::validate(Index m) const {
  if (mode != Mode::grouped) return;
  if (blocks.empty()) throw InvalidArgument("grouped noise needs at least one block");
  for (Index b : blocks) {
    if (b < 1) throw InvalidArgument("grouped noise blocks must be non-empty");
  }
  if (std::accumulate(blocks.begin(), blocks.end(), Index{0}) != m) {
    throw InvalidArgument("grouped noise block sizes must sum to the data length");
  }
}

PrecisionState PrecisionState::constant(Index m, Index k, double alpha0, double beta0) {
  PrecisionState s{Vector::Constant(m, alpha0), Vector::Constant(k, beta0)};
  s.validate();
  return s;
}

void PrecisionState::validate() const {
  auto ok = [](const Vector& v) { return (v.array() > 0.0).all() && v.allFinite(); };
  if (!ok(alpha)) throw DomainError("noise precisions alpha must be finite and positive");
  if (!ok(beta)) throw DomainError("prior precisions beta must be finite and positive");
}

HierarchicalModel::HierarchicalModel(Vector y, LinearOperator forward, LinearOperator reg, GammaHyperPrior hyper,
                                     NoiseGrouping grouping, bool check_kernel)
    : y_(std::move(y)),
      forward_(std::move(forward)),
      reg_(std::move(reg)),
      hyper_(hyper),
      grouping_(std::move(grouping)) {
  if (forward_.cols() != reg_.cols()) throw InvalidArgument("forward and regularization operators differ in columns");
  if (y_.size() != forward_.rows()) throw InvalidArgument("data length must equal the forward operator's rows");
  hyper_.validate();
  grouping_.validate(m());
  if (!check_kernel) return;
  if (n() > kCommonKernelCap) {
    spdlog::warn("model with {} unknowns exceeds the dense cap {}; common kernel condition not verified", n(),
                 kCommonKernelCap);
    return;
  }
  if (!check_common_kernel(forward_, reg_)) throw IllPosedModel("forward and regularization operators");
}

double gamma_log_pdf(double x, const GammaHyperPrior& hyper) {
  hyper.validate();
  if (!(x > 0.0)) throw DomainError("gamma_log_pdf: x must be positive");
  return hyper.c * std::log(hyper.d) - std::lgamma(hyper.c) + (hyper.c - 1.0) * std::log(x) - hyper.d * x;
}

double log_likelihood(const VectorRef& x, const VectorRef& alpha, const HierarchicalModel& model) {
  if (x.size() != model.n() || alpha.size() != model.m()) throw InvalidArgument("log_likelihood: dimension mismatch");
  if (!((alpha.array() > 0.0).all())) throw DomainError("log_likelihood: alpha must be positive");
  const Vector r = model.forward().apply(x) - model.y();
  const double m = static_cast<double>(model.m());
  return -0.5 * m * std::log(2.0 * std::numbers::pi) + 0.5 * alpha.array().log().sum() -
         0.5 * (alpha.array() * r.array().square()).sum();
}

double log_prior(const VectorRef& x, const VectorRef& beta, const HierarchicalModel& model) {
  if (x.size() != model.n() || beta.size() != model.k()) throw InvalidArgument("log_prior: dimension mismatch");
  if (!((beta.array() > 0.0).all())) throw DomainError("log_prior: beta must be positive");
  const Vector rx = model.reg().apply(x);
  return 0.5 * beta.array().log().sum() - 0.5 * (beta.array() * rx.array().square()).sum();
}

}  // namespace gsbl
