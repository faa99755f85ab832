#pragma once

// Test problems: sparse denoising, 1-D deconvolution, combined
// regularization, 2-D deconvolution, subsampled Fourier imaging and
// two-sensor data fusion.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsbl/solver.hpp"
#include "gsbl/uq.hpp"

namespace gsbl {

enum class ExperimentKind { denoise_sparse, deconv_1d, combined_reg, deconv_2d, fourier_2d, fusion };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment(std::string_view name);
const std::vector<ExperimentKind>& all_experiments();

enum class Regularizer { identity, tv1, tv2, combined };

std::string_view to_string(Regularizer reg) noexcept;
Regularizer parse_regularizer(std::string_view name);

/// Frequencies removed from the 1-D DFT: `count` log-spaced integers in
/// [lo, hi] (rounded, duplicates dropped), or an explicit 1-based list.
struct FrequencyRemoval {
  Index count = 25;
  Index lo = 3;
  Index hi = 50;
  std::vector<Index> explicit_rows;

  std::vector<Index> rows() const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::deconv_1d;
  Index n = 40;
  std::vector<double> sigma2{1e-2};  // one variance, or one per data block
  double gamma = 3e-2;               // convolution width
  Regularizer regularizer = Regularizer::tv1;
  FrequencyRemoval removal;
  Index spikes = 4;
  std::vector<Index> fusion_blocks{36, 24};
  NoiseGrouping::Mode noise_model = NoiseGrouping::Mode::scalar;
  GammaHyperPrior hyper = GammaHyperPrior::signal_default();
  std::uint64_t seed = 0;
  BcdOptions solver;
  std::optional<double> uq_level;

  /// Defaults for each experiment.
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Throws InvalidArgument "<dotted.key>: <reason>" for the first violated rule.
  void validate() const;
  bool is_image() const { return kind == ExperimentKind::deconv_2d || kind == ExperimentKind::fourier_2d; }
};

/// Built problem: ground truth and the assembled model.
struct Problem {
  Vector x_true;
  Vector y_clean;
  HierarchicalModel model;
  Index image_side = 0;  // > 0 for 2-D problems (x = vec of side×side image)
  std::vector<Index> data_blocks;
};

struct ExperimentReport {
  ExperimentConfig config;
  Vector x_true;
  Vector y;
  Vector x_hat;
  Vector degraded;  // 2-D only: blurred image, or Fᵀy for Fourier data
  double rel_l2_error = 0.0;
  std::vector<double> snr;  // one per noise block
  Vector beta_inv;          // β^{-1} / max β^{-1}
  std::optional<CredibleBand> band;
  BcdResult bcd;
  Index image_side = 0;
  double seconds = 0.0;
};

/// Zeros except `spikes` seeded-random unit entries.
Vector generate_sparse_signal(Index n, Index spikes, std::uint64_t seed);

enum class PiecewiseKind { constant, constant_linear };

/// Signals sampled at cell midpoints (i + 1/2)/n.
///   constant:        0 on [0, .15), 2 on [.15, .25), 1 on [.25, .5), 0.5 on [.5, 1]
///   constant_linear: 0 on [0, .25), 1 on [.25, .5), then linear from 1 at t = .5 to 0 at t = 1
Vector canonical_piecewise_signal(Index n, PiecewiseKind kind);

/// Shepp–Logan intensity at (x, y) ∈ [-1, 1]^2 (sum over the ten ellipses).
double shepp_logan_value(double x, double y);

/// n×n Shepp–Logan raster; entry (i, j) samples x = -1 + (2j+1)/n, y = 1 - (2i+1)/n.
Matrix shepp_logan(Index n);

/// Adds N(0, σ_d^2) noise block by block. sigma2 holds one value or one per block.
Vector add_noise(const VectorRef& y, const std::vector<double>& sigma2, const std::vector<Index>& blocks,
                 std::uint64_t seed);

/// E[x^2] / σ^2 with E[x^2] the mean square of x.
double snr(const VectorRef& x_true, double sigma2);

/// Ground truth, data and model for a config.
Problem build_problem(const ExperimentConfig& config);

/// Full pipeline: build, solve with BCD, compute metrics and (optionally) the credible band.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace gsbl
