#include "gsbl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gsbl/config.hpp"
#include "gsbl/errors.hpp"

namespace gsbl {
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Matrix as_image(const Vector& v, Index side) { return Eigen::Map<const Matrix>(v.data(), side, side); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_indexed_csv(const fs::path& path, const std::vector<std::string>& names, const std::vector<Vector>& columns) {
  if (names.size() != columns.size()) throw InvalidArgument("write_indexed_csv: one name per column");
  const Index rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw InvalidArgument("write_indexed_csv: columns differ in length");
  }
  auto out = open_out(path);
  out << "index";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < rows; ++i) {
    out << i;
    for (const auto& c : columns) out << ',' << format_double(c[i]);
    out << '\n';
  }
  finish(out, path);
}

void write_history_csv(const fs::path& path, const BcdResult& result) {
  auto out = open_out(path);
  out << "iter,rel_change,data_fit,reg_norm\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    out << i + 1 << ',' << format_double(result.history[i]) << ',' << format_double(result.data_fit.at(i)) << ','
        << format_double(result.reg_norm.at(i)) << '\n';
  }
  finish(out, path);
}

void write_band_csv(const fs::path& path, const CredibleBand& band) {
  write_indexed_csv(path, {"mean", "lower", "upper"}, {band.mean, band.lower, band.upper});
}

void write_samples_csv(const fs::path& path, const Matrix& samples) {
  auto out = open_out(path);
  out << "sample";
  for (Index j = 0; j < samples.cols(); ++j) out << ",x_" << j;
  out << '\n';
  for (Index s = 0; s < samples.rows(); ++s) {
    out << s;
    for (Index j = 0; j < samples.cols(); ++j) out << ',' << format_double(samples(s, j));
    out << '\n';
  }
  finish(out, path);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  table.header = split_commas(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(table.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

PgmScale write_pgm16(const fs::path& path, const Matrix& image) {
  if (image.size() == 0) throw InvalidArgument("write_pgm16: empty image");
  const PgmScale scale{image.minCoeff(), image.maxCoeff()};
  const double span = scale.max - scale.min;
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  for (Index i = 0; i < image.rows(); ++i) {
    for (Index j = 0; j < image.cols(); ++j) {
      const double t = span > 0.0 ? (image(i, j) - scale.min) / span : 0.0;
      const auto level = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
      const char bytes[2] = {static_cast<char>(level >> 8), static_cast<char>(level & 0xff)};
      out.write(bytes, 2);
    }
  }
  finish(out, path);

  nlohmann::ordered_json side;
  side["file"] = path.filename().string();
  side["width"] = image.cols();
  side["height"] = image.rows();
  side["maxval"] = 65535;
  side["min"] = scale.min;
  side["max"] = scale.max;
  write_text(fs::path(path.string() + ".json"), side.dump(2) + "\n");
  return scale;
}

Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> read_pgm16(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string magic;
  Index width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 65535 || width < 1 || height < 1) {
    throw IoError("'" + path.string() + "' is not a 16-bit P5 image");
  }
  in.get();
  Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> img(height, width);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      unsigned char b[2];
      if (!in.read(reinterpret_cast<char*>(b), 2)) throw IoError("'" + path.string() + "' is truncated");
      img(i, j) = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }
  }
  return img;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& r, const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  j["schema"] = kConfigSchema;
  j["experiment"] = std::string(to_string(r.config.kind));
  j["seed"] = r.config.seed;
  j["unknowns"] = r.x_hat.size();
  j["data_size"] = r.y.size();
  j["image_side"] = r.image_side;
  j["rel_l2_error"] = r.rel_l2_error;
  j["snr"] = r.snr;
  j["iterations"] = r.bcd.iterations;
  j["converged"] = r.bcd.converged;
  j["backend"] = std::string(to_string(r.bcd.backend));
  j["final_rel_change"] = r.bcd.history.empty() ? 0.0 : r.bcd.history.back();
  j["data_fit"] = r.bcd.data_fit.empty() ? 0.0 : r.bcd.data_fit.back();
  j["reg_norm"] = r.bcd.reg_norm.empty() ? 0.0 : r.bcd.reg_norm.back();
  Index inner = 0;
  for (Index k : r.bcd.inner_iterations) inner += k;
  j["inner_iterations"] = inner;

  std::vector<Index> order(static_cast<std::size_t>(r.beta_inv.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const std::size_t top = std::min<std::size_t>(3, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](Index a, Index b) { return r.beta_inv[a] > r.beta_inv[b] || (r.beta_inv[a] == r.beta_inv[b] && a < b); });
  order.resize(top);
  j["beta_inv_top"] = order;

  if (r.band) {
    const auto& b = *r.band;
    Index inside = 0;
    for (Index i = 0; i < r.x_true.size(); ++i) {
      if (r.x_true[i] >= b.lower[i] && r.x_true[i] <= b.upper[i]) ++inside;
    }
    j["uq"] = {{"level", b.level},
               {"coverage", static_cast<double>(inside) / static_cast<double>(r.x_true.size())},
               {"mean_width", (b.upper - b.lower).mean()}};
  } else {
    j["uq"] = nullptr;
  }
  j["config"] = config_to_json(r.config);
  j["files"] = files;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
  finish(out, path);
}

std::vector<std::string> write_artifacts(const fs::path& dir, const ExperimentReport& r) {
  std::vector<std::string> files;
  auto add = [&](const std::string& name) {
    files.push_back(name);
    return dir / name;
  };
  write_indexed_csv(add("x_hat.csv"), {"x_hat"}, {r.x_hat});
  write_indexed_csv(add("x_true.csv"), {"x_true"}, {r.x_true});
  write_indexed_csv(add("y.csv"), {"y"}, {r.y});
  write_indexed_csv(add("beta_inv.csv"), {"beta_inv"}, {r.beta_inv});
  write_history_csv(add("history.csv"), r.bcd);
  if (r.band) write_band_csv(add("band.csv"), *r.band);
  if (r.image_side > 0) {
    for (const auto& [name, v] : {std::pair<std::string, const Vector*>{"x_true.pgm", &r.x_true},
                                  {"x_hat.pgm", &r.x_hat},
                                  {"degraded.pgm", &r.degraded}}) {
      write_pgm16(add(name), as_image(*v, r.image_side));
      files.push_back(name + ".json");
    }
  }
  nlohmann::ordered_json timings;
  timings["seconds"] = r.seconds;
  write_text(add("timings.json"), timings.dump(2) + "\n");
  files.push_back("report.json");
  write_text(dir / "report.json", report_to_json(r, files).dump(2) + "\n");
  return files;
}

}  // namespace gsbl
