#include "gsbl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "gsbl/errors.hpp"

namespace gsbl {
namespace {

// Independent generator per purpose so that, e.g., changing the noise does not
// move the spike locations.
enum class Stream : std::uint32_t { signal = 1, noise = 2, sensor1 = 3, sensor2 = 4 };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<Index> random_subset(Index n, Index count, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

LinearOperator regularizer_1d(Regularizer reg, Index n) {
  switch (reg) {
    case Regularizer::identity:
      return identity_operator(n);
    case Regularizer::tv1:
      return build_tv1(n);
    case Regularizer::tv2:
      return build_tv2(n);
    case Regularizer::combined:
      return build_combined_tv(n);
  }
  throw InvalidArgument("unknown regularizer");
}

LinearOperator regularizer_2d(Regularizer reg, Index n) {
  if (reg == Regularizer::identity) return identity_operator(n * n);
  return build_anisotropic_2d(regularizer_1d(reg, n), n);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::denoise_sparse:
      return "denoise-sparse";
    case ExperimentKind::deconv_1d:
      return "deconv-1d";
    case ExperimentKind::combined_reg:
      return "combined-reg";
    case ExperimentKind::deconv_2d:
      return "deconv-2d";
    case ExperimentKind::fourier_2d:
      return "fourier-2d";
    case ExperimentKind::fusion:
      return "fusion";
  }
  return "unknown";
}

const std::vector<ExperimentKind>& all_experiments() {
  static const std::vector<ExperimentKind> kinds{ExperimentKind::denoise_sparse, ExperimentKind::deconv_1d,
                                                 ExperimentKind::combined_reg,   ExperimentKind::deconv_2d,
                                                 ExperimentKind::fourier_2d,     ExperimentKind::fusion};
  return kinds;
}

ExperimentKind parse_experiment(std::string_view name) {
  for (ExperimentKind k : all_experiments()) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(Regularizer reg) noexcept {
  switch (reg) {
    case Regularizer::identity:
      return "identity";
    case Regularizer::tv1:
      return "tv1";
    case Regularizer::tv2:
      return "tv2";
    case Regularizer::combined:
      return "combined";
  }
  return "unknown";
}

Regularizer parse_regularizer(std::string_view name) {
  for (Regularizer r : {Regularizer::identity, Regularizer::tv1, Regularizer::tv2, Regularizer::combined}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidArgument("unknown regularizer '" + std::string(name) + "' (expected identity, tv1, tv2, combined)");
}

std::vector<Index> FrequencyRemoval::rows() const {
  if (!explicit_rows.empty()) {
    std::set<Index> uniq(explicit_rows.begin(), explicit_rows.end());
    return {uniq.begin(), uniq.end()};
  }
  if (count < 1) return {};
  if (lo < 1 || hi < lo) throw InvalidArgument("frequency removal needs 1 <= lo <= hi");
  std::set<Index> uniq;
  const double a = std::log(static_cast<double>(lo));
  const double b = std::log(static_cast<double>(hi));
  for (Index i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    uniq.insert(static_cast<Index>(std::lround(std::exp(a + t * (b - a)))));
  }
  return {uniq.begin(), uniq.end()};
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::denoise_sparse:
      c.n = 20;
      c.sigma2 = {5e-2};
      c.regularizer = Regularizer::identity;
      c.spikes = 4;
      break;
    case ExperimentKind::deconv_1d:
      c.n = 40;
      c.sigma2 = {1e-2};
      c.gamma = 3e-2;
      c.regularizer = Regularizer::tv1;
      c.uq_level = 0.999;
      break;
    case ExperimentKind::combined_reg:
      c.n = 20;
      c.sigma2 = {1e-2};
      c.gamma = 1e-2;
      c.regularizer = Regularizer::combined;
      break;
    case ExperimentKind::deconv_2d:
      c.n = 64;
      c.sigma2 = {1e-5};
      c.gamma = 1.5e-2;
      c.regularizer = Regularizer::tv2;
      c.hyper = GammaHyperPrior::image_default();
      c.solver.backend = Backend::pcg;
      break;
    case ExperimentKind::fourier_2d:
      c.n = 64;
      c.sigma2 = {1e-3};
      c.regularizer = Regularizer::tv1;
      c.removal = FrequencyRemoval{25, 3, 50, {}};
      c.hyper = GammaHyperPrior::image_default();
      break;
    case ExperimentKind::fusion:
      c.n = 40;
      c.sigma2 = {5e-1, 1e-2};
      c.gamma = 3e-2;
      c.regularizer = Regularizer::tv1;
      c.fusion_blocks = {36, 24};
      c.noise_model = NoiseGrouping::Mode::grouped;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  // Messages start with the dotted config key they concern.
  auto fail = [](const std::string& key, const std::string& what) { throw InvalidArgument(key + ": " + what); };
  if (!(hyper.c > 0.0) || !std::isfinite(hyper.c)) fail("hyper.c", "the Gamma shape parameter c must be positive");
  if (!(hyper.d > 0.0) || !std::isfinite(hyper.d)) fail("hyper.d", "the Gamma rate parameter d must be positive");
  if (solver.max_outer_iters < 1) fail("solver.max_outer_iters", "must be at least 1");
  if (solver.inner.max_iters < 1) fail("solver.inner_max_iters", "must be at least 1");
  if (!(solver.outer_tol > 0.0)) fail("solver.outer_tol", "must be positive");
  if (!(solver.inner.tol > 0.0)) fail("solver.inner_tol", "must be positive");
  if (!(solver.alpha_init > 0.0) || !std::isfinite(solver.alpha_init)) fail("solver.alpha_init", "must be positive");
  if (!(solver.beta_init > 0.0) || !std::isfinite(solver.beta_init)) fail("solver.beta_init", "must be positive");

  if (sigma2.empty()) fail("noise.sigma2", "at least one noise variance is required");
  for (double s : sigma2) {
    if (!(s >= 0.0) || !std::isfinite(s)) fail("noise.sigma2", "noise variances must be non-negative");
  }
  const std::size_t blocks = kind == ExperimentKind::fusion ? fusion_blocks.size() : 1;
  if (sigma2.size() != 1 && sigma2.size() != blocks) {
    fail("noise.sigma2", "give one variance or one per data block");
  }
  if (uq_level && !(*uq_level > 0.0 && *uq_level < 1.0)) fail("uq.level", "credible level must lie in (0, 1)");
  const bool needs_gamma = kind != ExperimentKind::denoise_sparse && kind != ExperimentKind::fourier_2d;
  if (needs_gamma && !(gamma > 0.0 && std::isfinite(gamma))) fail("operator.gamma", "convolution width must be positive");

  const Index min_n = is_image() ? 16 : kind == ExperimentKind::denoise_sparse ? 1 : 8;
  if (n < min_n) fail("n", "must be at least " + std::to_string(min_n) + " for " + std::string(to_string(kind)));
  if (kind == ExperimentKind::denoise_sparse && (spikes < 0 || spikes > n)) {
    fail("operator.spikes", "must lie in [0, n]");
  }
  if (regularizer == Regularizer::combined && (n < 6 || n % 2 != 0)) {
    fail("operator.regularizer", "the combined regularizer needs an even n >= 6");
  }
  if (is_image() && regularizer != Regularizer::identity) {
    const Index rows = regularizer == Regularizer::tv1 ? n - 1 : regularizer == Regularizer::tv2 ? n - 2 : n - 3;
    if (rows < 1) fail("operator.regularizer", "too few rows for this image size");
  }
  if (kind == ExperimentKind::fusion) {
    if (fusion_blocks.size() != 2) fail("operator.fusion_blocks", "fusion needs exactly two sensor block sizes");
    for (Index b : fusion_blocks) {
      if (b < 1 || b > n) fail("operator.fusion_blocks", "block sizes must lie in [1, n]");
    }
  }
  if (kind == ExperimentKind::fourier_2d) {
    if (removal.explicit_rows.empty() && (removal.count < 0 || removal.lo < 1 || removal.hi < removal.lo)) {
      fail("operator.removal", "needs count >= 0 and 1 <= lo <= hi");
    }
    const auto rows = removal.rows();
    for (Index r : rows) {
      if (r < 1 || r > n) fail("operator.removal", "removed frequency index out of range 1..n");
    }
    if (static_cast<Index>(rows.size()) >= n) fail("operator.removal", "every frequency removed");
  }
  if (uq_level && (is_image() ? n * n : n) > kUqCap) {
    fail("uq.level", "credible bands are limited to " + std::to_string(kUqCap) + " unknowns");
  }
}

Vector generate_sparse_signal(Index n, Index spikes, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("generate_sparse_signal: n must be non-negative");
  if (spikes < 0 || spikes > n) throw InvalidArgument("generate_sparse_signal: spikes must lie in [0, n]");
  auto rng = stream_rng(seed, Stream::signal);
  Vector x = Vector::Zero(n);
  for (Index i : random_subset(n, spikes, rng)) x[i] = 1.0;
  return x;
}

Vector canonical_piecewise_signal(Index n, PiecewiseKind kind) {
  if (n < 8) throw InvalidArgument("canonical_piecewise_signal: n must be at least 8");
  const Grid1D grid(n);
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    const double t = grid.midpoint(i);
    if (kind == PiecewiseKind::constant) {
      x[i] = t < 0.15 ? 0.0 : t < 0.25 ? 2.0 : t < 0.5 ? 1.0 : 0.5;
    } else {
      x[i] = t < 0.25 ? 0.0 : t < 0.5 ? 1.0 : 2.0 * (1.0 - t);
    }
  }
  return x;
}

namespace {

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Standard Shepp–Logan table (Shepp & Logan 1974; MATLAB phantom 'Shepp-Logan').
constexpr Ellipse kSheppLogan[] = {
    {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0}, {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},   {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},   {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

}  // namespace

double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : kSheppLogan) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.x0;
    const double dy = y - e.y0;
    const double xr = dx * std::cos(phi) + dy * std::sin(phi);
    const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
    if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
  }
  return v;
}

Matrix shepp_logan(Index n) {
  if (n < 16) throw InvalidArgument("shepp_logan: n must be at least 16");
  Matrix img(n, n);
  const double nn = static_cast<double>(n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      img(i, j) = shepp_logan_value(-1.0 + (2.0 * j + 1.0) / nn, 1.0 - (2.0 * i + 1.0) / nn);
    }
  }
  return img;
}

Vector add_noise(const VectorRef& y, const std::vector<double>& sigma2, const std::vector<Index>& blocks,
                 std::uint64_t seed) {
  if (std::accumulate(blocks.begin(), blocks.end(), Index{0}) != y.size()) {
    throw InvalidArgument("add_noise: blocks must cover y");
  }
  if (sigma2.size() != 1 && sigma2.size() != blocks.size()) {
    throw InvalidArgument("add_noise: need one variance or one per block");
  }
  for (double s : sigma2) {
    if (!(s >= 0.0)) throw InvalidArgument("add_noise: variances must be non-negative");
  }
  auto rng = stream_rng(seed, Stream::noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out = y;
  Index off = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double sd = std::sqrt(sigma2.size() == 1 ? sigma2[0] : sigma2[b]);
    for (Index i = off; i < off + blocks[b]; ++i) {
      const double z = normal(rng);
      if (sd > 0.0) out[i] += sd * z;
    }
    off += blocks[b];
  }
  return out;
}

double snr(const VectorRef& x_true, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidArgument("snr: sigma2 must be positive");
  if (x_true.size() == 0) return 0.0;
  return x_true.squaredNorm() / static_cast<double>(x_true.size()) / sigma2;
}

Problem build_problem(const ExperimentConfig& config) {
  config.validate();
  const Index n = config.n;
  Vector x_true;
  std::optional<LinearOperator> forward;
  std::optional<LinearOperator> reg;
  Index side = 0;
  std::vector<Index> blocks;

  switch (config.kind) {
    case ExperimentKind::denoise_sparse:
      x_true = generate_sparse_signal(n, config.spikes, config.seed);
      forward = identity_operator(n);
      reg = regularizer_1d(config.regularizer, n);
      break;
    case ExperimentKind::deconv_1d:
    case ExperimentKind::combined_reg:
      x_true = canonical_piecewise_signal(
          n, config.kind == ExperimentKind::deconv_1d ? PiecewiseKind::constant : PiecewiseKind::constant_linear);
      forward = build_gaussian_convolution(n, config.gamma);
      reg = regularizer_1d(config.regularizer, n);
      break;
    case ExperimentKind::deconv_2d:
      x_true = vec(shepp_logan(n));
      forward = build_separable_2d(build_gaussian_convolution(n, config.gamma), n);
      reg = regularizer_2d(config.regularizer, n);
      side = n;
      break;
    case ExperimentKind::fourier_2d:
      x_true = vec(shepp_logan(n));
      forward = build_subsampled_fourier(n, config.removal.rows());
      reg = regularizer_2d(config.regularizer, n);
      side = n;
      break;
    case ExperimentKind::fusion: {
      x_true = canonical_piecewise_signal(n, PiecewiseKind::constant);
      auto rng1 = stream_rng(config.seed, Stream::sensor1);
      auto rng2 = stream_rng(config.seed, Stream::sensor2);
      const auto loc1 = random_subset(n, config.fusion_blocks[0], rng1);
      const auto loc2 = random_subset(n, config.fusion_blocks[1], rng2);
      forward = stack_operators({select_rows(identity_operator(n), loc1),
                                 select_rows(build_gaussian_convolution(n, config.gamma), loc2)});
      reg = regularizer_1d(config.regularizer, n);
      break;
    }
  }
  if (config.kind == ExperimentKind::fusion) {
    blocks = forward->block_sizes();
  } else {
    blocks = {forward->rows()};
  }

  const Vector y_clean = forward->apply(x_true);
  Vector y = add_noise(y_clean, config.sigma2, blocks, config.seed);
  NoiseGrouping grouping{config.noise_model, {}};
  if (config.noise_model == NoiseGrouping::Mode::grouped) grouping.blocks = blocks;
  HierarchicalModel model(std::move(y), *forward, *reg, config.hyper, grouping);
  return Problem{std::move(x_true), y_clean, std::move(model), side, std::move(blocks)};
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Problem problem = build_problem(config);
  const HierarchicalModel& model = problem.model;

  ExperimentReport rep;
  rep.config = config;
  rep.bcd = bcd_solve(model, config.solver);
  rep.x_true = problem.x_true;
  rep.y = model.y();
  rep.x_hat = rep.bcd.x;
  rep.image_side = problem.image_side;
  if (problem.image_side > 0) {
    rep.degraded = config.kind == ExperimentKind::deconv_2d ? rep.y : model.forward().adjoint(rep.y);
  }
  const double true_norm = rep.x_true.norm();
  rep.rel_l2_error = true_norm > 0.0 ? (rep.x_hat - rep.x_true).norm() / true_norm : rep.x_hat.norm();
  for (std::size_t b = 0; b < problem.data_blocks.size(); ++b) {
    const double s2 = config.sigma2.size() == 1 ? config.sigma2[0] : config.sigma2[b];
    rep.snr.push_back(s2 > 0.0 ? snr(rep.x_true, s2) : std::numeric_limits<double>::infinity());
  }
  rep.beta_inv = rep.bcd.state.beta.cwiseInverse();
  rep.beta_inv /= rep.beta_inv.maxCoeff();
  if (config.uq_level) {
    const PosteriorGaussian post = posterior_gaussian(model, rep.bcd.state);
    rep.band = credible_band(post, *config.uq_level);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace gsbl
