#pragma once

// Artifact formats: comma-separated CSV with a header row and 17 significant
// digits, 16-bit binary PGM (P5, maxval 65535) with a JSON sidecar holding the
// [min, max] that was mapped onto [0, 65535], and the run report.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsbl/experiments.hpp"

namespace gsbl {

/// "%.17g", which round-trips every double.
std::string format_double(double v);

/// One row per entry: `index` followed by one column per vector. All columns
/// must have the same length.
void write_indexed_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       const std::vector<Vector>& columns);

/// iter,rel_change,data_fit,reg_norm (iter is 1-based).
void write_history_csv(const std::filesystem::path& path, const BcdResult& result);

/// index,mean,lower,upper.
void write_band_csv(const std::filesystem::path& path, const CredibleBand& band);

/// sample,x_0,...,x_{n-1}; one row per draw.
void write_samples_csv(const std::filesystem::path& path, const Matrix& samples);

/// Header names and numeric rows of a CSV written by the functions above.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

struct PgmScale {
  double min = 0.0;
  double max = 0.0;
};

/// Writes the image row by row, mapping [min, max] linearly onto [0, 65535]
/// (a constant image maps to 0), plus `<path>.json` with the scale.
PgmScale write_pgm16(const std::filesystem::path& path, const Matrix& image);

/// Raw 16-bit levels of a P5 file with maxval 65535.
Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> read_pgm16(const std::filesystem::path& path);

/// Deterministic report (no timings); keys are listed in docs/report-schema.md.
nlohmann::ordered_json report_to_json(const ExperimentReport& report, const std::vector<std::string>& files);

/// Writes text to a file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes every artifact of a run into `dir` (which must exist) and returns the
/// file names written.
std::vector<std::string> write_artifacts(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace gsbl
