#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wtn/problems.hpp"
#include "wtn/solvers.hpp"

namespace wtn {

// ---------------------------------------------------------------------------
// Evaluation grids. Row-major with x fastest, the same layout the reference
// CSV files use, so exports can be re-ingested as reference grids.
// ---------------------------------------------------------------------------

struct GridSpec {
  Box bounds;
  int nx = 129;
  int ny = 129;
  int size() const { return nx * ny; }
};

inline GridSpec eval_grid(const Problem& prob, int n = 129) {
  return GridSpec{prob.domain.bounding_box(), n, n};
}

inline Eigen::MatrixX2d grid_points(const GridSpec& g) {
  if (g.nx < 2 || g.ny < 2) throw std::invalid_argument("grid needs at least 2x2 points");
  Eigen::MatrixX2d pts(g.size(), 2);
  for (int j = 0, k = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i, ++k) {
      pts(k, 0) = g.bounds.lo.x + g.bounds.width() * i / (g.nx - 1);
      pts(k, 1) = g.bounds.lo.y + g.bounds.height() * j / (g.ny - 1);
    }
  return pts;
}

// A scalar field sampled on a GridSpec, u in the same row-major order.
struct GridField {
  GridSpec spec;
  Eigen::VectorXd u;
};

// ---------------------------------------------------------------------------
// Error metrics.
// ---------------------------------------------------------------------------

inline double relative_l2(const Eigen::VectorXd& u_hat, const Eigen::VectorXd& u_ref) {
  if (u_hat.size() != u_ref.size())
    throw std::invalid_argument("error metric needs equally sized value vectors");
  const double denom = u_ref.norm();
  if (denom == 0.0) throw std::domain_error("relative error against a zero reference");
  return (u_hat - u_ref).norm() / denom;
}

namespace detail {

// Grid rows inside the domain. Rectangles keep every row; the L-shape drops
// the cut-out quadrant.
inline std::vector<int> contained_rows(const Domain& dom, const Eigen::MatrixX2d& pts) {
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(pts.rows()));
  for (int k = 0; k < pts.rows(); ++k)
    if (dom.contains({pts(k, 0), pts(k, 1)})) keep.push_back(k);
  return keep;
}

inline Eigen::MatrixX2d select_rows(const Eigen::MatrixX2d& pts, const std::vector<int>& rows) {
  Eigen::MatrixX2d sub(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = pts.row(rows[i]);
  return sub;
}

}  // namespace detail

// Relative L2 error over the evaluation grid, restricted to points inside the
// domain, against the catalog's exact solution.
inline double error_vs_exact(const Solution& sol, const Problem& prob, int n = 129) {
  const Eigen::MatrixX2d pts = grid_points(eval_grid(prob, n));
  const auto keep = detail::contained_rows(prob.domain, pts);
  const Eigen::MatrixX2d sub = detail::select_rows(pts, keep);
  return relative_l2(sol.values(sub), eval_exact(prob, sub));
}

// Same metric against an ingested reference grid, interpolated bilinearly at
// the evaluation points.
inline double error_vs_reference(const Solution& sol, const Problem& prob,
                                 const ReferenceGrid& ref, int n = 129) {
  const Eigen::MatrixX2d pts = grid_points(eval_grid(prob, n));
  const auto keep = detail::contained_rows(prob.domain, pts);
  const Eigen::MatrixX2d sub = detail::select_rows(pts, keep);
  Eigen::VectorXd u_ref(sub.rows());
  for (int k = 0; k < sub.rows(); ++k) u_ref[k] = ref.at({sub(k, 0), sub(k, 1)});
  return relative_l2(sol.values(sub), u_ref);
}

// ---------------------------------------------------------------------------
// Grid evaluation and CSV export.
// ---------------------------------------------------------------------------

// Solution values over the full bounding-box grid. Points outside the domain
// (the L-shape cut-out) export as zero so the file stays rectangular.
inline GridField evaluate_on_grid(const Solution& sol, const Problem& prob, int n = 129) {
  const GridSpec spec = eval_grid(prob, n);
  const Eigen::MatrixX2d pts = grid_points(spec);
  GridField f{spec, Eigen::VectorXd::Zero(spec.size())};
  const auto keep = detail::contained_rows(prob.domain, pts);
  if (static_cast<int>(keep.size()) == spec.size()) {
    f.u = sol.values(pts);
    return f;
  }
  const Eigen::VectorXd v = sol.values(detail::select_rows(pts, keep));
  for (std::size_t i = 0; i < keep.size(); ++i) f.u[keep[i]] = v[static_cast<Eigen::Index>(i)];
  return f;
}

inline GridField exact_on_grid(const Problem& prob, int n = 129) {
  const GridSpec spec = eval_grid(prob, n);
  const Eigen::MatrixX2d pts = grid_points(spec);
  GridField f{spec, Eigen::VectorXd::Zero(spec.size())};
  const auto keep = detail::contained_rows(prob.domain, pts);
  const Eigen::VectorXd v = eval_exact(prob, detail::select_rows(pts, keep));
  for (std::size_t i = 0; i < keep.size(); ++i) f.u[keep[i]] = v[static_cast<Eigen::Index>(i)];
  return f;
}

// Pointwise difference of two fields on the same grid (error-field export).
inline GridField field_difference(const GridField& a, const GridField& b) {
  if (a.spec.nx != b.spec.nx || a.spec.ny != b.spec.ny)
    throw std::invalid_argument("field difference needs matching grids");
  return GridField{a.spec, a.u - b.u};
}

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace detail

// x,y,u CSV at 17 significant digits; re-ingesting the file reproduces the
// doubles bit for bit.
inline void export_csv(const GridField& f, const std::string& path) {
  if (f.u.size() != f.spec.size())
    throw std::invalid_argument("grid field value count does not match its spec");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::string buf = "x,y,u\n";
  buf.reserve(static_cast<std::size_t>(f.spec.size()) * 60 + 8);
  const GridSpec& g = f.spec;
  for (int j = 0, k = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i, ++k) {
      detail::append_number(buf, g.bounds.lo.x + g.bounds.width() * i / (g.nx - 1));
      buf.push_back(',');
      detail::append_number(buf, g.bounds.lo.y + g.bounds.height() * j / (g.ny - 1));
      buf.push_back(',');
      detail::append_number(buf, f.u[k]);
      buf.push_back('\n');
    }
  out << buf;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Projection (expressivity) studies.
// ---------------------------------------------------------------------------

// Least-squares projection residual of a target onto the basis columns over a
// sample grid. The target is normalized by its max-abs first: the ratio is
// scale-invariant and the sharpest study targets overflow a squared norm.
inline double projection_error(const NeuralBasis& basis, const Eigen::VectorXd& target,
                               const Eigen::MatrixX2d& pts) {
  if (pts.rows() == 0) throw std::invalid_argument("projection needs a nonempty grid");
  if (target.size() != pts.rows())
    throw std::invalid_argument("target values do not match the grid");
  const double scale = target.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw std::domain_error("projection against a zero target");
  const Eigen::VectorXd t = target / scale;
  const Eigen::MatrixXd A = basis.eval(pts);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(A);
  const Eigen::VectorXd alpha = cod.solve(t);
  return (A * alpha - t).norm() / t.norm();
}

// Sharpness-controlled target for the shape-parameter study, with its printed
// normalization; sigma_f sets how fast the field varies.
inline ScalarField shape_target(double sigma_f) {
  if (sigma_f <= 0.0) throw std::invalid_argument("target width must be positive");
  const double s2 = 2.0 * sigma_f * sigma_f;
  const double pref = 1.0 / (detail::kPi * s2);
  return [s2, pref](Vec2 q) { return pref * std::exp((q.x * q.x - q.y * q.y) / s2); };
}

struct ShapeSweepEntry {
  double sigma_f = 0.0;
  double gamma_opt = 0.0;
  std::vector<double> median_curve;  // median projection error per gamma
};

struct ShapeSweepResult {
  int M = 0;
  std::vector<double> gammas;
  std::vector<ShapeSweepEntry> rows;
};

// Optimal shape parameter per target width: projection error of each
// sigma_f target, median over seeds, minimized over the gamma grid. Each
// (gamma, seed) basis is factored once and reused across every target.
inline ShapeSweepResult shape_sweep(int M, const std::vector<double>& sigma_fs,
                                    const std::vector<double>& gammas,
                                    const std::vector<uint64_t>& seeds, int n_axis = 101) {
  if (sigma_fs.empty() || gammas.empty() || seeds.empty())
    throw std::invalid_argument("shape sweep needs targets, gammas, and seeds");
  const Domain dom = Domain::rectangle({-1.0, -1.0}, {1.0, 1.0});
  const Eigen::MatrixX2d pts = grid_points(GridSpec{dom.bounding_box(), n_axis, n_axis});

  std::vector<Eigen::VectorXd> targets;
  targets.reserve(sigma_fs.size());
  for (double sf : sigma_fs) {
    Eigen::VectorXd t = eval_field(shape_target(sf), pts);
    t /= t.cwiseAbs().maxCoeff();
    targets.push_back(std::move(t));
  }

  // errs[target][gamma] = per-seed projection errors
  std::vector<std::vector<std::vector<double>>> errs(
      sigma_fs.size(), std::vector<std::vector<double>>(gammas.size()));
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    for (uint64_t seed : seeds) {
      const NeuralBasis basis =
          build_transnet(M, gammas[gi], dom, split_seed(seed, "basis", 0));
      const Eigen::MatrixXd A = basis.eval(pts);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
      cod.setThreshold(1e-10);
      cod.compute(A);
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const Eigen::VectorXd alpha = cod.solve(targets[ti]);
        errs[ti][gi].push_back((A * alpha - targets[ti]).norm() / targets[ti].norm());
      }
    }
  }

  ShapeSweepResult out;
  out.M = M;
  out.gammas = gammas;
  for (std::size_t ti = 0; ti < sigma_fs.size(); ++ti) {
    ShapeSweepEntry row;
    row.sigma_f = sigma_fs[ti];
    row.median_curve.reserve(gammas.size());
    for (std::size_t gi = 0; gi < gammas.size(); ++gi)
      row.median_curve.push_back(median(errs[ti][gi]));
    const auto best = std::min_element(row.median_curve.begin(), row.median_curve.end());
    row.gamma_opt = gammas[static_cast<std::size_t>(best - row.median_curve.begin())];
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment records (the harness serializes these as JSON lines).
// ---------------------------------------------------------------------------

struct ErrorReport {
  std::string method;
  std::string problem;
  std::map<std::string, double> params;
  double rel_l2 = 0.0;
  uint64_t seed = 0;
  double wall_ms = 0.0;
  std::optional<GridField> error_field;
};

}  // namespace wtn
