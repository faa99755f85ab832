#pragma once

// JSON experiment configs (top-level "schema": 1). Keys left out take the
// defaults of the named experiment.
//
//   {
//     "schema": 1,
//     "experiment": "deconv-1d",
//     "n": 40,
//     "seed": 0,
//     "noise": {"sigma2": [0.01], "model": "scalar"},
//     "operator": {"gamma": 0.03, "regularizer": "tv1", "spikes": 4,
//                  "fusion_blocks": [36, 24], "removal": {"count": 25, "lo": 3, "hi": 50, "rows": []}},
//     "hyper": {"c": 1, "d": 1e-4},
//     "solver": {"backend": "auto", "max_outer_iters": 1000, "outer_tol": 1e-6,
//                "inner_max_iters": 10000, "inner_tol": 1e-10, "alpha_init": 1, "beta_init": 1},
//     "uq": {"level": 0.999}
//   }

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gsbl/experiments.hpp"

namespace gsbl {

inline constexpr int kConfigSchema = 1;

std::string_view to_string(NoiseGrouping::Mode mode) noexcept;
NoiseGrouping::Mode parse_noise_model(std::string_view name);

/// Parses and validates a config. `overrides` are "dotted.key=value" strings
/// whose value is read as JSON (bare words fall back to strings).
/// Throws ConfigError; errors located in `text` carry a 1-based line number.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

/// Reads and parses a file. Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Complete config (every key) in the layout above.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

/// Sets `doc[path] = value` for one "dotted.key=value" assignment.
void apply_override(nlohmann::json& doc, std::string_view assignment);

}  // namespace gsbl
