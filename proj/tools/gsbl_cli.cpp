#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "gsbl/config.hpp"
#include "gsbl/errors.hpp"
#include "gsbl/experiments.hpp"
#include "gsbl/io.hpp"
#include "gsbl/uq.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { ok = 0, failure = 1, config_error = 2, ill_posed = 3, io_error = 4 };

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> uq;
  std::optional<std::string> backend;
  gsbl::Index count = 100;
  bool verbose = false;
};

std::vector<std::string> overrides(const Options& o) {
  std::vector<std::string> all = o.sets;
  if (o.seed) all.push_back("seed=" + std::to_string(*o.seed));
  if (o.uq) all.push_back("uq.level=" + gsbl::format_double(*o.uq));
  if (o.backend) all.push_back("solver.backend=\"" + *o.backend + "\"");
  return all;
}

// Builds the artifacts in a hidden sibling directory and renames it into place
// only once everything was written.
template <class F>
void write_atomically(const fs::path& out, F&& fill) {
  const fs::path target = fs::absolute(out).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  const std::string tag = std::to_string(rd()) + std::to_string(rd());
  const fs::path tmp = parent / ("." + target.filename().string() + ".partial-" + tag);
  fs::create_directory(tmp);
  try {
    fill(tmp);
    if (fs::exists(target)) {
      const fs::path old = parent / ("." + target.filename().string() + ".old-" + tag);
      fs::rename(target, old);
      fs::rename(tmp, target);
      fs::remove_all(old);
    } else {
      fs::rename(tmp, target);
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
}

int cmd_list() {
  for (gsbl::ExperimentKind k : gsbl::all_experiments()) std::cout << gsbl::to_string(k) << '\n';
  return ok;
}

int cmd_validate(const Options& o) {
  const gsbl::ExperimentConfig cfg = gsbl::load_config(o.config, overrides(o));
  std::cout << "valid: " << gsbl::to_string(cfg.kind) << " (n=" << cfg.n << ", seed=" << cfg.seed << ")\n";
  return ok;
}

int cmd_run(const Options& o) {
  const gsbl::ExperimentConfig cfg = gsbl::load_config(o.config, overrides(o));
  const gsbl::ExperimentReport rep = gsbl::run_experiment(cfg);
  write_atomically(o.out, [&](const fs::path& dir) { gsbl::write_artifacts(dir, rep); });
  std::printf("%s: iterations=%lld rel_l2_error=%.6g wall=%.3fs -> %s\n", std::string(gsbl::to_string(cfg.kind)).c_str(),
              static_cast<long long>(rep.bcd.iterations), rep.rel_l2_error, rep.seconds, o.out.c_str());
  return ok;
}

int cmd_sample(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  const gsbl::ExperimentConfig cfg = gsbl::load_config(o.config, overrides(o));
  const gsbl::Problem problem = gsbl::build_problem(cfg);
  const gsbl::BcdResult bcd = gsbl::bcd_solve(problem.model, cfg.solver);
  const gsbl::PosteriorGaussian post = gsbl::posterior_gaussian(problem.model, bcd.state);
  const gsbl::Matrix draws = gsbl::sample_posterior(post, o.count, cfg.seed);
  write_atomically(o.out, [&](const fs::path& dir) {
    gsbl::write_samples_csv(dir / "samples.csv", draws);
    gsbl::write_indexed_csv(dir / "posterior.csv", {"mean", "sd", "x_true"},
                            {post.mean(), post.marginal_variances().cwiseSqrt(), problem.x_true});
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s: samples=%lld iterations=%lld wall=%.3fs -> %s\n", std::string(gsbl::to_string(cfg.kind)).c_str(),
              static_cast<long long>(o.count), static_cast<long long>(bcd.iterations), secs, o.out.c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized sparse Bayesian learning: experiments and reconstructions"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
    if (needs_out) sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--set", o.sets, "Override a config key: dotted.key=value (repeatable)");
    sub->add_option("--seed", o.seed, "Override the seed");
    sub->add_option("--uq", o.uq, "Credible level for the band, e.g. 0.999");
    sub->add_option("--backend", o.backend, "x-update backend")->check(CLI::IsMember({"direct", "pcg", "gd"}));
    sub->add_flag("-v,--verbose", o.verbose, "Log solver progress");
  };

  CLI::App* list = app.add_subcommand("list", "Print the built-in experiment names");
  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  add_common(validate, false);
  CLI::App* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  add_common(run, true);
  CLI::App* sample = app.add_subcommand("sample", "Draw samples from the posterior at the BCD hyper-parameters");
  add_common(sample, true);
  sample->add_option("--count", o.count, "Number of draws")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (list->parsed()) return cmd_list();
    if (validate->parsed()) return cmd_validate(o);
    if (run->parsed()) return cmd_run(o);
    if (sample->parsed()) return cmd_sample(o);
  } catch (const gsbl::ConfigError& e) {
    std::cerr << "config error: " << o.config << ": " << e.what() << '\n';
    return config_error;
  } catch (const gsbl::IllPosedModel& e) {
    std::cerr << "ill-posed model: " << e.what() << '\n';
    return ill_posed;
  } catch (const gsbl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
