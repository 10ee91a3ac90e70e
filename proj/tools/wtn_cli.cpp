#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wtn/harness.hpp"

namespace {

std::vector<uint64_t> seed_range(uint64_t base, int count) {
  std::vector<uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<uint64_t>(i));
  return seeds;
}

int do_run(const std::string& config_path, const wtn::RunOptions& opt) {
  const wtn::json config = wtn::load_config(config_path);
  const wtn::RunSummary summary = wtn::run_config(config, opt);
  for (const wtn::JobResult& r : summary.results) {
    std::cout << r.spec.name << " seed=" << r.spec.cfg.seed;
    if (r.has_rel) std::cout << " rel_l2=" << r.rel_l2;
    std::cout << " wall_ms=" << static_cast<long long>(r.wall_ms) << '\n';
  }
  for (const std::string& f : summary.failures) std::cerr << "FAILED: " << f << '\n';
  std::cout << "report: " << wtn::report_path(opt).string() << '\n';
  return summary.failures.empty() ? 0 : 1;
}

int do_quadstudy(const wtn::RunOptions& opt, uint64_t base_seed) {
  const auto rows = wtn::quadrature_study(seed_range(base_seed, 5));
  std::filesystem::create_directories(opt.out_dir);
  const std::string path =
      (std::filesystem::path(opt.out_dir) / "quadstudy.csv").string();
  wtn::write_quadstudy_csv(rows, path);
  for (const auto& r : rows)
    std::cout << r.method << " n=" << r.n_points << " rel_l2=" << r.rel_l2 << '\n';
  std::cout << "csv: " << path << '\n';
  return 0;
}

int do_sweep_gamma(const wtn::RunOptions& opt, uint64_t base_seed) {
  wtn::GammaSweepOptions sweep;
  sweep.seeds = seed_range(base_seed, 3);
  const auto results = wtn::gamma_sweep_study(sweep);
  wtn::write_gamma_sweep_csv(results, opt.out_dir);
  for (const auto& res : results)
    for (const auto& row : res.rows)
      std::cout << "M=" << res.M << " sigma_f=" << row.sigma_f
                << " gamma_opt=" << row.gamma_opt << '\n';
  std::cout << "csv: " << opt.out_dir << "/sweep_gamma.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meshless weak-form solvers for elliptic problems"};
  app.require_subcommand(1);

  std::string config_path;
  wtn::RunOptions opt;
  uint64_t seed = 1;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--jobs", opt.jobs, "worker pool size")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };

  CLI::App* run = app.add_subcommand("run", "run experiments from a config file");
  run->add_option("config", config_path, "JSON experiment config")->required();
  add_common(run);
  run->add_option("--ref", opt.ref_path, "reference grid CSV for problems without an exact solution");

  CLI::App* list = app.add_subcommand("list", "list the problem catalog");

  CLI::App* quad = app.add_subcommand("quadstudy", "Simpson vs Monte Carlo error study");
  add_common(quad);

  CLI::App* sweep = app.add_subcommand("sweep-gamma", "shape-parameter projection sweep");
  add_common(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (seed_given) opt.seed = seed;
      return do_run(config_path, opt);
    }
    if (list->parsed()) {
      wtn::list_catalog(std::cout);
      return 0;
    }
    if (quad->parsed()) return do_quadstudy(opt, seed);
    if (sweep->parsed()) return do_sweep_gamma(opt, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
