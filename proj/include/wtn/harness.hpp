#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "wtn/evaluation.hpp"

namespace wtn {

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { wtn, fwtn, pou, sf, drm };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::wtn: return "wtn";
    case Method::fwtn: return "fwtn";
    case Method::pou: return "pou";
    case Method::sf: return "sf";
    case Method::drm: return "drm";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::wtn, Method::fwtn, Method::pou, Method::sf, Method::drm})
    if (s == method_name(m)) return m;
  throw ConfigError("unknown method '" + s + "' (known: wtn, fwtn, pou, sf, drm)");
}

// One fully resolved job: every hyperparameter scalar, one seed.
struct JobSpec {
  std::string name;
  std::string problem;
  Method method = Method::wtn;
  SolveConfig cfg;
  std::string layout;     // pou only
  bool export_field = false;
  std::string ref_path;   // reference grid for problems without an exact solution
};

struct JobResult {
  JobSpec spec;
  bool has_rel = false;
  double rel_l2 = 0.0;
  double wall_ms = 0.0;
  int rank = 0;
  double ls_residual = 0.0;
  double weak_residual = 0.0;
  double boundary_residual = 0.0;
  double interface_value_residual = 0.0;
  double interface_flux_residual = 0.0;
};

// ---------------------------------------------------------------------------
// Config serialization. The report embeds the resolved config of every job so
// a row can be re-run verbatim.
// ---------------------------------------------------------------------------

inline json parse_config_text(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(name + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

inline json quad_to_json(const QuadratureConfig& q) {
  json j;
  j["mode"] = q.mode == QuadMode::simpson ? "simpson" : "mc";
  j["points_per_axis"] = q.points_per_axis;
  j["boundary_points"] = q.boundary_points;
  j["mc_samples"] = q.mc_samples;
  return j;
}

inline QuadratureConfig quad_from_json(const json& j) {
  QuadratureConfig q;
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "simpson")
      q.mode = QuadMode::simpson;
    else if (mode == "mc")
      q.mode = QuadMode::monte_carlo;
    else
      throw ConfigError("unknown quadrature mode '" + mode + "' (known: simpson, mc)");
  }
  q.points_per_axis = j.value("points_per_axis", q.points_per_axis);
  q.boundary_points = j.value("boundary_points", q.boundary_points);
  q.mc_samples = j.value("mc_samples", q.mc_samples);
  return q;
}

inline json job_to_json(const JobSpec& job) {
  json c;
  c["name"] = job.name;
  c["problem"] = job.problem;
  c["method"] = method_name(job.method);
  if (!job.layout.empty()) c["layout"] = job.layout;
  c["M"] = job.cfg.M;
  c["N"] = job.cfg.N;
  c["gamma"] = job.cfg.gamma;
  c["sigma"] = job.cfg.sigma;
  c["cutoff"] = job.cfg.cutoff;
  c["beta"] = job.cfg.beta;
  c["lambda"] = job.cfg.lambda;
  c["beta_sf"] = job.cfg.beta_sf;
  c["beta_drm"] = job.cfg.beta_drm;
  c["eps_drm"] = job.cfg.eps_drm;
  c["boundary_per_edge"] = job.cfg.boundary_per_edge;
  c["interior_samples"] = job.cfg.interior_samples;
  c["n_interface"] = job.cfg.n_interface;
  c["fourier_p"] = job.cfg.fourier_p;
  c["eps_f"] = job.cfg.eps_f;
  c["quad"] = quad_to_json(job.cfg.quad);
  c["seeds"] = json::array({job.cfg.seed});
  c["export_field"] = job.export_field;
  if (!job.ref_path.empty()) c["ref"] = job.ref_path;
  return c;
}

struct RunOptions {
  std::string out_dir = "out";
  std::optional<uint64_t> seed;  // overrides every experiment's seed list
  int jobs = 1;
  std::string ref_path;          // fallback reference grid
};

namespace detail {

inline std::vector<double> sweep_values(const json& e, const char* key, double dflt) {
  if (!e.contains(key)) return {dflt};
  const json& v = e.at(key);
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(std::string("empty sweep list for '") + key + "'");
    return v.get<std::vector<double>>();
  }
  return {v.get<double>()};
}

}  // namespace detail

// Expands one experiment object into jobs: list-valued hyperparameters expand
// Cartesian-product style (fixed key order M, N, gamma, sigma, beta, lambda,
// beta_sf, beta_drm), then one job per seed. Validation happens here, before
// any compute.
inline std::vector<JobSpec> expand_experiment(const json& e, const RunOptions& opt) {
  if (!e.contains("problem")) throw ConfigError("experiment without a 'problem' field");
  if (!e.contains("method")) throw ConfigError("experiment without a 'method' field");
  const Problem& prob = get_problem(e.at("problem").get<std::string>());
  const Method method = parse_method(e.at("method").get<std::string>());
  const std::string base_name =
      e.value("name", prob.id + "-" + std::string(method_name(method)));

  std::string layout = e.value("layout", std::string{});
  if (method == Method::pou && layout.empty()) layout = prob.defaults.layout;
  if (method == Method::pou) {
    if (layout.empty())
      throw ConfigError("experiment '" + base_name + "': pou needs a partition layout");
    get_layout(prob, layout);  // unknown layout fails here, not mid-run
  }

  SolveConfig base = config_for(prob);
  base.cutoff = e.value("cutoff", base.cutoff);
  base.eps_drm = e.value("eps_drm", base.eps_drm);
  base.eps_f = e.value("eps_f", base.eps_f);
  base.boundary_per_edge = e.value("boundary_per_edge", base.boundary_per_edge);
  base.interior_samples = e.value("interior_samples", base.interior_samples);
  base.n_interface = e.value("n_interface", base.n_interface);
  base.fourier_p = e.value("fourier_p", base.fourier_p);
  if (e.contains("quad")) base.quad = quad_from_json(e.at("quad"));

  const auto Ms = detail::sweep_values(e, "M", base.M);
  const auto Ns = detail::sweep_values(e, "N", base.N);
  const auto gammas = detail::sweep_values(e, "gamma", base.gamma);
  const auto sigmas = detail::sweep_values(e, "sigma", base.sigma);
  const auto betas = detail::sweep_values(e, "beta", base.beta);
  const auto lambdas = detail::sweep_values(e, "lambda", base.lambda);
  const auto betas_sf = detail::sweep_values(e, "beta_sf", base.beta_sf);
  const auto betas_drm = detail::sweep_values(e, "beta_drm", base.beta_drm);

  std::vector<uint64_t> seeds{1};
  if (e.contains("seeds")) {
    const json& s = e.at("seeds");
    seeds = s.is_array() ? s.get<std::vector<uint64_t>>()
                         : std::vector<uint64_t>{s.get<uint64_t>()};
    if (seeds.empty()) throw ConfigError("experiment '" + base_name + "': empty seed list");
  }
  if (opt.seed) seeds = {*opt.seed};

  std::string ref = e.value("ref", std::string{});
  if (ref.empty()) ref = opt.ref_path;
  const bool export_field = e.value("export_field", false);

  std::vector<JobSpec> jobs;
  int combo = 0;
  for (double M : Ms)
    for (double N : Ns)
      for (double gamma : gammas)
        for (double sigma : sigmas)
          for (double beta : betas)
            for (double lambda : lambdas)
              for (double bsf : betas_sf)
                for (double bdrm : betas_drm) {
                  JobSpec job;
                  job.name = base_name + "#" + std::to_string(combo++);
                  job.problem = prob.id;
                  job.method = method;
                  job.layout = method == Method::pou ? layout : std::string{};
                  job.export_field = export_field;
                  job.ref_path = ref;
                  job.cfg = base;
                  job.cfg.M = static_cast<int>(M);
                  job.cfg.N = static_cast<int>(N);
                  job.cfg.gamma = gamma;
                  job.cfg.sigma = sigma;
                  job.cfg.beta = beta;
                  job.cfg.lambda = lambda;
                  job.cfg.beta_sf = bsf;
                  job.cfg.beta_drm = bdrm;
                  for (uint64_t seed : seeds) {
                    job.cfg.seed = seed;
                    jobs.push_back(job);
                  }
                }
  return jobs;
}

inline std::vector<JobSpec> expand_config(const json& config, const RunOptions& opt) {
  if (!config.contains("experiments") || !config.at("experiments").is_array())
    throw ConfigError("config needs an 'experiments' array");
  std::vector<JobSpec> jobs;
  for (const json& e : config.at("experiments")) {
    auto batch = expand_experiment(e, opt);
    jobs.insert(jobs.end(), batch.begin(), batch.end());
  }
  if (jobs.empty()) throw ConfigError("config expands to zero jobs");
  return jobs;
}

// ---------------------------------------------------------------------------
// Execution.
// ---------------------------------------------------------------------------

inline Solution run_method(const Problem& prob, const JobSpec& job) {
  switch (job.method) {
    case Method::wtn: return solve_wtn(prob, job.cfg);
    case Method::fwtn: return solve_fwtn(prob, job.cfg);
    case Method::pou: return solve_pou_wtn(prob, job.cfg, get_layout(prob, job.layout));
    case Method::sf: return solve_sf(prob, job.cfg);
    case Method::drm: return solve_drm(prob, job.cfg);
  }
  throw std::logic_error("unreachable method dispatch");
}

inline JobResult run_job(const JobSpec& job, const std::string& out_dir) {
  const Problem& prob = get_problem(job.problem);
  const auto t0 = std::chrono::steady_clock::now();
  const Solution sol = run_method(prob, job);

  JobResult r;
  r.spec = job;
  r.rank = sol.rank;
  r.ls_residual = sol.ls_residual;
  r.weak_residual = sol.weak_residual;
  r.boundary_residual = sol.boundary_residual;
  r.interface_value_residual = sol.interface_value_residual;
  r.interface_flux_residual = sol.interface_flux_residual;
  if (prob.has_exact()) {
    r.rel_l2 = error_vs_exact(sol, prob);
    r.has_rel = true;
  } else if (!job.ref_path.empty()) {
    const ReferenceGrid ref = load_reference_grid(job.ref_path);
    r.rel_l2 = error_vs_reference(sol, prob, ref);
    r.has_rel = true;
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

  if (job.export_field) {
    const std::filesystem::path dir = std::filesystem::path(out_dir) / "fields";
    std::filesystem::create_directories(dir);
    const std::string file =
        job.name + "_s" + std::to_string(job.cfg.seed) + ".csv";
    export_csv(evaluate_on_grid(sol, prob), (dir / file).string());
  }
  return r;
}

inline json result_to_json(const JobResult& r) {
  json row;
  row["experiment"] = r.spec.name;
  row["method"] = method_name(r.spec.method);
  row["problem"] = r.spec.problem;
  row["seed"] = r.spec.cfg.seed;
  row["rel_l2"] = r.has_rel ? json(r.rel_l2) : json(nullptr);
  row["rank"] = r.rank;
  row["ls_residual"] = r.ls_residual;
  row["weak_residual"] = r.weak_residual;
  row["boundary_residual"] = r.boundary_residual;
  row["interface_value_residual"] = r.interface_value_residual;
  row["interface_flux_residual"] = r.interface_flux_residual;
  row["wall_ms"] = r.wall_ms;
  row["config"] = job_to_json(r.spec);
  return row;
}

struct RunSummary {
  std::vector<JobResult> results;       // in job order, failed jobs omitted
  std::vector<std::string> failures;    // one diagnostic per failed job
};

// Worker pool over the expanded job list. Jobs share nothing; results are
// buffered per slot and the report is appended in job order afterwards, so a
// rerun produces the same file bytes (wall_ms aside) at any --jobs value.
inline RunSummary run_jobs(const std::vector<JobSpec>& jobs, const RunOptions& opt) {
  const int n = static_cast<int>(jobs.size());
  std::vector<std::optional<JobResult>> slots(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        slots[static_cast<std::size_t>(i)] = run_job(jobs[static_cast<std::size_t>(i)], opt.out_dir);
      } catch (const std::exception& ex) {
        errors[static_cast<std::size_t>(i)] =
            "job " + jobs[static_cast<std::size_t>(i)].name + " seed " +
            std::to_string(jobs[static_cast<std::size_t>(i)].cfg.seed) + ": " + ex.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min(opt.jobs, n));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  RunSummary summary;
  for (int i = 0; i < n; ++i) {
    if (slots[static_cast<std::size_t>(i)])
      summary.results.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
    else
      summary.failures.push_back(errors[static_cast<std::size_t>(i)]);
  }
  return summary;
}

inline std::filesystem::path report_path(const RunOptions& opt) {
  return std::filesystem::path(opt.out_dir) / "report.jsonl";
}

inline void append_report(const std::vector<JobResult>& results, const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  std::ofstream out(report_path(opt), std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + report_path(opt).string());
  for (const JobResult& r : results) out << result_to_json(r).dump() << '\n';
}

inline RunSummary run_config(const json& config, const RunOptions& opt) {
  const std::vector<JobSpec> jobs = expand_config(config, opt);
  RunSummary summary = run_jobs(jobs, opt);
  append_report(summary.results, opt);
  return summary;
}

// ---------------------------------------------------------------------------
// Catalog listing.
// ---------------------------------------------------------------------------

inline void list_catalog(std::ostream& out) {
  out << "problem            reference      M     N     gamma  sigma  boundary  layout\n";
  for (const std::string& id : problem_ids()) {
    const Problem& p = get_problem(id);
    std::ostringstream row;
    row << id;
    row << std::string(id.size() < 19 ? 19 - id.size() : 1, ' ');
    const std::string ref = p.has_exact() ? "exact" : "external_grid";
    row << ref << std::string(ref.size() < 15 ? 15 - ref.size() : 1, ' ');
    auto col = [&row](const std::string& s, std::size_t w) {
      row << s << std::string(s.size() < w ? w - s.size() : 1, ' ');
    };
    col(std::to_string(p.defaults.M), 6);
    col(std::to_string(p.defaults.N), 6);
    std::ostringstream g;
    g << p.defaults.gamma;
    col(g.str(), 7);
    std::ostringstream s;
    s << p.defaults.sigma;
    col(s.str(), 7);
    col(p.hard_constraint ? "hard" : "penalty", 10);
    out << row.str() << (p.defaults.layout.empty() ? "-" : p.defaults.layout) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Quadrature study: Simpson vs Monte Carlo on the smooth hard-constraint
// problem, matched total point counts, median error over the master seeds.
// ---------------------------------------------------------------------------

struct QuadStudyRow {
  std::string method;  // "simpson" | "mc"
  int n_points = 0;
  double rel_l2 = 0.0;
};

inline std::vector<QuadStudyRow> quadrature_study(const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("quadrature study needs seeds");
  const Problem& prob = get_problem("poisson_smooth");
  std::vector<QuadStudyRow> rows;
  for (int p : {5, 9, 17, 33}) {
    std::vector<double> errs;
    for (uint64_t seed : seeds) {
      SolveConfig cfg = config_for(prob);
      cfg.seed = seed;
      cfg.quad.points_per_axis = p;
      errs.push_back(error_vs_exact(solve_wtn(prob, cfg), prob));
    }
    rows.push_back({"simpson", p * p, median(errs)});
  }
  for (int n : {25, 81, 289, 1089}) {
    std::vector<double> errs;
    for (uint64_t seed : seeds) {
      SolveConfig cfg = config_for(prob);
      cfg.seed = seed;
      cfg.quad.mode = QuadMode::monte_carlo;
      cfg.quad.mc_samples = n;
      errs.push_back(error_vs_exact(solve_wtn(prob, cfg), prob));
    }
    rows.push_back({"mc", n, median(errs)});
  }
  return rows;
}

inline void write_quadstudy_csv(const std::vector<QuadStudyRow>& rows,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::string buf = "method,n_points,rel_l2\n";
  for (const QuadStudyRow& r : rows) {
    buf += r.method;
    buf.push_back(',');
    buf += std::to_string(r.n_points);
    buf.push_back(',');
    detail::append_number(buf, r.rel_l2);
    buf.push_back('\n');
  }
  out << buf;
}

// ---------------------------------------------------------------------------
// Shape-parameter sweep front end.
// ---------------------------------------------------------------------------

struct GammaSweepOptions {
  std::vector<int> Ms{200, 400};
  std::vector<double> sigma_fs{2.0, 1.0, 0.5, 0.1, 0.05, 0.03};
  std::vector<double> gammas{0.5, 1.0, 1.2, 1.5, 2.0, 3.0, 4.0, 5.0,
                             6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0};
  std::vector<uint64_t> seeds{1, 2, 3};
  int n_axis = 101;
};

inline std::vector<ShapeSweepResult> gamma_sweep_study(const GammaSweepOptions& opt) {
  std::vector<ShapeSweepResult> out;
  out.reserve(opt.Ms.size());
  for (int M : opt.Ms)
    out.push_back(shape_sweep(M, opt.sigma_fs, opt.gammas, opt.seeds, opt.n_axis));
  return out;
}

inline void write_gamma_sweep_csv(const std::vector<ShapeSweepResult>& results,
                                  const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(std::filesystem::path(dir) / "sweep_gamma.csv");
    if (!out) throw std::runtime_error("cannot write sweep_gamma.csv under " + dir);
    std::string buf = "M,sigma_f,gamma_opt\n";
    for (const ShapeSweepResult& res : results)
      for (const ShapeSweepEntry& row : res.rows) {
        buf += std::to_string(res.M);
        buf.push_back(',');
        detail::append_number(buf, row.sigma_f);
        buf.push_back(',');
        detail::append_number(buf, row.gamma_opt);
        buf.push_back('\n');
      }
    out << buf;
  }
  std::ofstream out(std::filesystem::path(dir) / "sweep_gamma_curves.csv");
  if (!out) throw std::runtime_error("cannot write sweep_gamma_curves.csv under " + dir);
  std::string buf = "M,sigma_f,gamma,rel_proj\n";
  for (const ShapeSweepResult& res : results)
    for (const ShapeSweepEntry& row : res.rows)
      for (std::size_t gi = 0; gi < res.gammas.size(); ++gi) {
        buf += std::to_string(res.M);
        buf.push_back(',');
        detail::append_number(buf, row.sigma_f);
        buf.push_back(',');
        detail::append_number(buf, res.gammas[gi]);
        buf.push_back(',');
        detail::append_number(buf, row.median_curve[gi]);
        buf.push_back('\n');
      }
  out << buf;
}

}  // namespace wtn
