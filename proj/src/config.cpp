#include "gsbl/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "gsbl/errors.hpp"

namespace gsbl {
namespace {

using nlohmann::json;

int line_at(std::string_view text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

std::vector<std::string> split_path(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.emplace_back(key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

// Line of a dotted key in the raw text, found by walking its components in
// order. 0 when the key does not occur (e.g. it came from an override).
int key_line(std::string_view text, std::string_view key) {
  std::size_t pos = 0;
  for (const std::string& part : split_path(key)) {
    const std::string quoted = "\"" + part + "\"";
    std::size_t hit = pos;
    while (true) {
      hit = text.find(quoted, hit);
      if (hit == std::string_view::npos) return 0;
      std::size_t after = hit + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      hit += quoted.size();
    }
    pos = hit + quoted.size();
  }
  return line_at(text, pos);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const int line = key_line(text_, key);
    throw ConfigError(key + ": " + what + (line == 0 && !key.empty() ? " (set on the command line)" : ""), line);
  }

  void check_keys(const json& obj, const std::string& prefix, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(prefix, "expected an object");
    for (const auto& item : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
        fail(prefix.empty() ? item.key() : prefix + "." + item.key(), "unknown key");
      }
    }
  }

  double number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
  }

  Index integer(const json& j, const std::string& key) const {
    if (!j.is_number_integer()) fail(key, "expected an integer");
    return j.get<Index>();
  }

  std::string string(const json& j, const std::string& key) const {
    if (!j.is_string()) fail(key, "expected a string");
    return j.get<std::string>();
  }

  std::vector<double> numbers(const json& j, const std::string& key) const {
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) fail(key, "expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, key));
    return out;
  }

  std::vector<Index> integers(const json& j, const std::string& key) const {
    if (!j.is_array()) fail(key, "expected an array of integers");
    std::vector<Index> out;
    for (const auto& v : j) out.push_back(integer(v, key));
    return out;
  }

  // Runs `parse` on the value and turns InvalidArgument into a located error.
  template <class F>
  void enumerated(const json& j, const std::string& key, F parse) const {
    const std::string value = string(j, key);
    try {
      parse(value);
    } catch (const InvalidArgument& e) {
      fail(key, e.what());
    }
  }

 private:
  std::string_view text_;
};

ExperimentConfig from_json(const json& doc, const Reader& rd) {
  rd.check_keys(doc, "", {"schema", "experiment", "n", "seed", "noise", "operator", "hyper", "solver", "uq"});
  if (!doc.contains("schema")) rd.fail("schema", "missing (expected \"schema\": 1)");
  if (rd.integer(doc["schema"], "schema") != kConfigSchema) {
    rd.fail("schema", "unsupported schema version (expected " + std::to_string(kConfigSchema) + ")");
  }
  if (!doc.contains("experiment")) rd.fail("experiment", "missing experiment name");
  ExperimentConfig cfg;
  rd.enumerated(doc["experiment"], "experiment",
                [&](const std::string& v) { cfg = ExperimentConfig::defaults(parse_experiment(v)); });

  if (doc.contains("n")) cfg.n = rd.integer(doc["n"], "n");
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
      rd.fail("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("noise")) {
    const json& noise = doc["noise"];
    rd.check_keys(noise, "noise", {"sigma2", "model"});
    if (noise.contains("sigma2")) cfg.sigma2 = rd.numbers(noise["sigma2"], "noise.sigma2");
    if (noise.contains("model")) {
      rd.enumerated(noise["model"], "noise.model",
                    [&](const std::string& v) { cfg.noise_model = parse_noise_model(v); });
    }
  }
  if (doc.contains("operator")) {
    const json& op = doc["operator"];
    rd.check_keys(op, "operator", {"gamma", "regularizer", "spikes", "fusion_blocks", "removal"});
    if (op.contains("gamma")) cfg.gamma = rd.number(op["gamma"], "operator.gamma");
    if (op.contains("regularizer")) {
      rd.enumerated(op["regularizer"], "operator.regularizer",
                    [&](const std::string& v) { cfg.regularizer = parse_regularizer(v); });
    }
    if (op.contains("spikes")) cfg.spikes = rd.integer(op["spikes"], "operator.spikes");
    if (op.contains("fusion_blocks")) cfg.fusion_blocks = rd.integers(op["fusion_blocks"], "operator.fusion_blocks");
    if (op.contains("removal")) {
      const json& rm = op["removal"];
      rd.check_keys(rm, "operator.removal", {"count", "lo", "hi", "rows"});
      if (rm.contains("count")) cfg.removal.count = rd.integer(rm["count"], "operator.removal.count");
      if (rm.contains("lo")) cfg.removal.lo = rd.integer(rm["lo"], "operator.removal.lo");
      if (rm.contains("hi")) cfg.removal.hi = rd.integer(rm["hi"], "operator.removal.hi");
      if (rm.contains("rows")) cfg.removal.explicit_rows = rd.integers(rm["rows"], "operator.removal.rows");
    }
  }
  if (doc.contains("hyper")) {
    const json& h = doc["hyper"];
    rd.check_keys(h, "hyper", {"c", "d"});
    if (h.contains("c")) cfg.hyper.c = rd.number(h["c"], "hyper.c");
    if (h.contains("d")) cfg.hyper.d = rd.number(h["d"], "hyper.d");
  }
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    rd.check_keys(s, "solver",
                  {"backend", "max_outer_iters", "outer_tol", "inner_max_iters", "inner_tol", "alpha_init", "beta_init"});
    if (s.contains("backend")) {
      rd.enumerated(s["backend"], "solver.backend", [&](const std::string& v) {
        if (v == "auto") {
          cfg.solver.backend.reset();
        } else {
          cfg.solver.backend = parse_backend(v);
        }
      });
    }
    if (s.contains("max_outer_iters")) cfg.solver.max_outer_iters = rd.integer(s["max_outer_iters"], "solver.max_outer_iters");
    if (s.contains("outer_tol")) cfg.solver.outer_tol = rd.number(s["outer_tol"], "solver.outer_tol");
    if (s.contains("inner_max_iters")) cfg.solver.inner.max_iters = rd.integer(s["inner_max_iters"], "solver.inner_max_iters");
    if (s.contains("inner_tol")) cfg.solver.inner.tol = rd.number(s["inner_tol"], "solver.inner_tol");
    if (s.contains("alpha_init")) cfg.solver.alpha_init = rd.number(s["alpha_init"], "solver.alpha_init");
    if (s.contains("beta_init")) cfg.solver.beta_init = rd.number(s["beta_init"], "solver.beta_init");
  }
  if (doc.contains("uq")) {
    const json& u = doc["uq"];
    if (u.is_null()) {
      cfg.uq_level.reset();
    } else {
      rd.check_keys(u, "uq", {"level"});
      if (u.contains("level")) {
        if (u["level"].is_null()) {
          cfg.uq_level.reset();
        } else {
          cfg.uq_level = rd.number(u["level"], "uq.level");
        }
      }
    }
  }

  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    const std::size_t colon = msg.find(": ");
    if (colon == std::string::npos) throw ConfigError(msg);
    rd.fail(msg.substr(0, colon), msg.substr(colon + 2));
  }
  return cfg;
}

}  // namespace

std::string_view to_string(NoiseGrouping::Mode mode) noexcept {
  switch (mode) {
    case NoiseGrouping::Mode::scalar:
      return "scalar";
    case NoiseGrouping::Mode::per_entry:
      return "per-entry";
    case NoiseGrouping::Mode::grouped:
      return "grouped";
  }
  return "unknown";
}

NoiseGrouping::Mode parse_noise_model(std::string_view name) {
  for (auto m : {NoiseGrouping::Mode::scalar, NoiseGrouping::Mode::per_entry, NoiseGrouping::Mode::grouped}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown noise model '" + std::string(name) + "' (expected scalar, per-entry or grouped)");
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("--set '" + std::string(assignment) + "': expected key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  const auto parts = split_path(key);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("--set '" + key + "': empty key component");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("--set '" + key + "': '" + parts[i - 1] + "' is not an object");
    node = &(*node)[parts[i]];
  }
  *node = std::move(value);
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), line_at(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", 1);
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc, Reader(text));
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading config '" + path.string() + "'");
  return parse_config(ss.str(), overrides);
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["schema"] = kConfigSchema;
  j["experiment"] = std::string(to_string(c.kind));
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["noise"] = {{"sigma2", c.sigma2}, {"model", std::string(to_string(c.noise_model))}};
  j["operator"] = {{"gamma", c.gamma},
                   {"regularizer", std::string(to_string(c.regularizer))},
                   {"spikes", c.spikes},
                   {"fusion_blocks", c.fusion_blocks},
                   {"removal",
                    {{"count", c.removal.count},
                     {"lo", c.removal.lo},
                     {"hi", c.removal.hi},
                     {"rows", c.removal.explicit_rows}}}};
  j["hyper"] = {{"c", c.hyper.c}, {"d", c.hyper.d}};
  j["solver"] = {{"backend", c.solver.backend ? std::string(to_string(*c.solver.backend)) : std::string("auto")},
                 {"max_outer_iters", c.solver.max_outer_iters},
                 {"outer_tol", c.solver.outer_tol},
                 {"inner_max_iters", c.solver.inner.max_iters},
                 {"inner_tol", c.solver.inner.tol},
                 {"alpha_init", c.solver.alpha_init},
                 {"beta_init", c.solver.beta_init}};
  j["uq"] = {{"level", c.uq_level ? nlohmann::ordered_json(*c.uq_level) : nlohmann::ordered_json(nullptr)}};
  return j;
}

}  // namespace gsbl
