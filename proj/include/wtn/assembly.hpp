#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "wtn/geometry.hpp"
#include "wtn/problems.hpp"
#include "wtn/quadrature.hpp"
#include "wtn/test_space.hpp"
#include "wtn/trial_basis.hpp"

namespace wtn {

struct WeakSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd f;
};

struct BoundarySystem {
  Eigen::MatrixXd B;
  Eigen::VectorXd g;
};

// Row weights for the stacked least-squares systems. The weak form uses
// sqrt(beta |dOmega| / N_b); the collocation and energy forms fold in the
// interior sample density so beta keeps its meaning across methods.
inline double weak_boundary_weight(double beta, double boundary_len, int n_boundary) {
  return std::sqrt(beta * boundary_len / n_boundary);
}

inline double sf_boundary_weight(double beta_sf, double boundary_len, double area, int n_interior,
                                 int n_boundary) {
  return std::sqrt(beta_sf * boundary_len * n_interior / (area * n_boundary));
}

inline double drm_boundary_weight(double beta_drm, double boundary_len, double area,
                                  int n_interior, int n_boundary) {
  return std::sqrt(2.0 * beta_drm * n_interior * boundary_len / (n_boundary * area));
}

namespace detail {

struct PsiAtNodes {
  Eigen::VectorXd val, gx, gy;
};

inline PsiAtNodes psi_at(const TestFunction& psi, const Eigen::MatrixX2d& pts) {
  PsiAtNodes out;
  const int n = static_cast<int>(pts.rows());
  out.val.resize(n);
  out.gx.resize(n);
  out.gy.resize(n);
  for (int k = 0; k < n; ++k) {
    const Vec2 p{pts(k, 0), pts(k, 1)};
    out.val[k] = psi.value(p);
    const Vec2 g = psi.grad(p);
    out.gx[k] = g.x;
    out.gy[k] = g.y;
  }
  return out;
}

// One Simpson piece of the stiffness row: accumulates
// int kappa grad(phi) . grad(psi) into row and int f psi into fi.
using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Composite rules lose their order when the integrand jumps inside a box, so
// boxes are cut at the declared discontinuity lines. The halves retreat from
// the cut by kGeomEps so no quadrature node evaluates the wrong branch; the
// skipped sliver is O(eps).
inline std::vector<Box> split_at_x(const Box& piece, const std::vector<double>& xs) {
  std::vector<double> cuts;
  for (double x : xs)
    if (x > piece.lo.x + 16 * kGeomEps && x < piece.hi.x - 16 * kGeomEps) cuts.push_back(x);
  if (cuts.empty()) return {piece};
  std::sort(cuts.begin(), cuts.end());
  std::vector<Box> out;
  double lo = piece.lo.x;
  for (double x : cuts) {
    out.push_back({{lo, piece.lo.y}, {x - kGeomEps, piece.hi.y}});
    lo = x + kGeomEps;
  }
  out.push_back({{lo, piece.lo.y}, {piece.hi.x, piece.hi.y}});
  return out;
}

template <class Basis>
void weak_piece_simpson(const Basis& basis, const TestFunction& psi, const ScalarField& kappa,
                        const ScalarField& source, const Box& piece, int n_axis, RowRef row,
                        double& fi) {
  const QuadratureRule rule = simpson_box(piece, n_axis);
  const BasisEval e = basis.eval_all(rule.points, kEvalGrad);
  const PsiAtNodes psi_v = psi_at(psi, rule.points);
  const int n = static_cast<int>(rule.weights.size());
  Eigen::VectorXd wx(n), wy(n);
  for (int k = 0; k < n; ++k) {
    const Vec2 p{rule.points(k, 0), rule.points(k, 1)};
    const double wk = rule.weights[k] * kappa(p);
    wx[k] = wk * psi_v.gx[k];
    wy[k] = wk * psi_v.gy[k];
    fi += rule.weights[k] * source(p) * psi_v.val[k];
  }
  row.noalias() += wx.transpose() * e.gx;
  row.noalias() += wy.transpose() * e.gy;
}

// Boundary part of the weak row: -int_dOmega kappa psi dphi/dn over the edges
// that meet the support box. Always Simpson, also in Monte Carlo mode. The
// kappa factor is what integration by parts of -div(kappa grad u) leaves on
// the boundary; dropping it injects O(kappa - 1) inconsistency into every row
// whose test function touches the boundary.
template <class Basis>
void weak_edge_term(const Basis& basis, const TestFunction& psi, const ScalarField& kappa,
                    const std::vector<Edge>& edges, const Box& support, int n_edge, RowRef row) {
  for (const Edge& edge : edges) {
    const std::optional<Edge> seg = clip_segment(edge, support);
    if (!seg) continue;
    const Quadrature1D q = simpson_nodes(0.0, seg->length(), n_edge);
    Eigen::MatrixX2d pts(n_edge, 2);
    for (int k = 0; k < n_edge; ++k) {
      const Vec2 p = seg->point_at(q.nodes[k] / seg->length());
      pts(k, 0) = p.x;
      pts(k, 1) = p.y;
    }
    const BasisEval e = basis.eval_all(pts, kEvalGrad);
    Eigen::VectorXd w(n_edge);
    for (int k = 0; k < n_edge; ++k) {
      const Vec2 p{pts(k, 0), pts(k, 1)};
      w[k] = q.weights[k] * psi.value(p) * kappa(p);
    }
    row.noalias() -= (w.transpose() * e.gx) * seg->normal.x;
    row.noalias() -= (w.transpose() * e.gy) * seg->normal.y;
  }
}

// Importance-sampled stiffness row: draws x ~ psi, averages the integrands
// divided by the density. grad(psi)/psi has the closed form -(x - mu)/sigma^2.
template <class Basis>
void weak_row_importance(const Basis& basis, const TestFunction& psi, const Domain& domain,
                         const ScalarField& kappa, const ScalarField& source, int n_draws,
                         Rng& rng, RowRef row, double& fi) {
  const Eigen::MatrixX2d pts = importance_draws(psi, n_draws, rng);
  const BasisEval e = basis.eval_all(pts, kEvalGrad);
  Eigen::VectorXd wx = Eigen::VectorXd::Zero(n_draws);
  Eigen::VectorXd wy = Eigen::VectorXd::Zero(n_draws);
  double facc = 0.0;
  for (int k = 0; k < n_draws; ++k) {
    const Vec2 p{pts(k, 0), pts(k, 1)};
    if (!domain.contains(p)) continue;
    const double kap = kappa(p);
    wx[k] = -kap * (p.x - psi.mu.x) / (psi.sigma.x * psi.sigma.x);
    wy[k] = -kap * (p.y - psi.mu.y) / (psi.sigma.y * psi.sigma.y);
    facc += source(p);
  }
  row.noalias() += (wx.transpose() * e.gx) / n_draws;
  row.noalias() += (wy.transpose() * e.gy) / n_draws;
  fi += facc / n_draws;
}

}  // namespace detail

namespace detail {

// Weak rows are rescaled to an amplitude-one test profile: the Gaussian density
// carries a 1/(2 pi sx sy) prefactor that would otherwise make every weak row
// ~64x heavier than a boundary row at sigma 0.05, and the least-squares solve
// would then spend the boundary budget on shaving quadrature-level weak
// residual. Peak-one profiles keep the two blocks on the scale the boundary
// weight assumes.
inline double test_amplitude(const TestFunction& psi) {
  return 2.0 * kPi * psi.sigma.x * psi.sigma.y;
}

}  // namespace detail

// Weak rows A_ij = int_Omega kappa grad(phi_j).grad(psi_i)
//                  - int_dOmega kappa psi_i dphi_j/dn
// and load f_i = int_Omega f psi_i, both restricted to each test function's
// support box and scaled to amplitude-one profiles (detail::test_amplitude).
// Monte Carlo mode replaces the domain integrals by importance sampling from
// psi_i; edge integrals stay Simpson.
inline WeakSystem assemble_weak(const NeuralBasis& basis, const std::vector<TestFunction>& tests,
                                const Problem& prob, const QuadratureConfig& quad,
                                Rng* mc_rng = nullptr) {
  if (quad.mode == QuadMode::monte_carlo && mc_rng == nullptr)
    throw std::invalid_argument("monte carlo assembly needs an rng");
  const int n_tests = static_cast<int>(tests.size());
  WeakSystem sys;
  sys.A = Eigen::MatrixXd::Zero(n_tests, basis.size());
  sys.f = Eigen::VectorXd::Zero(n_tests);
  const std::vector<Edge>& edges = prob.domain.edges();
  for (int i = 0; i < n_tests; ++i) {
    const TestFunction& psi = tests[i];
    const Box support = psi.support_box();
    auto row = sys.A.row(i);
    if (quad.mode == QuadMode::simpson) {
      for (const Box& piece : clip_box(prob.domain, support))
        for (const Box& sub : detail::split_at_x(piece, prob.x_splits))
          detail::weak_piece_simpson(basis, psi, prob.kappa, prob.source, sub,
                                     quad.points_per_axis, row, sys.f[i]);
    } else {
      detail::weak_row_importance(basis, psi, prob.domain, prob.kappa, prob.source,
                                  quad.mc_samples, *mc_rng, row, sys.f[i]);
    }
    detail::weak_edge_term(basis, psi, prob.kappa, edges, support, quad.boundary_points, row);
    const double amp = detail::test_amplitude(psi);
    row *= amp;
    sys.f[i] *= amp;
  }
  return sys;
}

// Partitioned variant: the stiffness integral splits over subdomains, where
// the unity weights are constant 1, using the one-sided kappa fields when the
// layout provides them. The boundary term runs over each subdomain's share of
// the outer boundary only.
inline WeakSystem assemble_weak_pou(const PoUBasis& pou, const std::vector<TestFunction>& tests,
                                    const Problem& prob, const LayoutSpec& lspec,
                                    const QuadratureConfig& quad) {
  if (quad.mode != QuadMode::simpson)
    throw std::invalid_argument("partitioned weak assembly supports Simpson quadrature only");
  const PartitionLayout& layout = pou.layout();
  const int n_sub = static_cast<int>(layout.subdomains.size());
  if (!lspec.kappa.empty() && static_cast<int>(lspec.kappa.size()) != n_sub)
    throw std::invalid_argument("one-sided kappa count does not match the subdomain count");

  const int n_tests = static_cast<int>(tests.size());
  WeakSystem sys;
  sys.A = Eigen::MatrixXd::Zero(n_tests, pou.size());
  sys.f = Eigen::VectorXd::Zero(n_tests);

  std::vector<std::vector<Edge>> exterior(static_cast<std::size_t>(n_sub));
  for (int l = 0; l < n_sub; ++l) exterior[l] = exterior_edges(layout, l);

  for (int i = 0; i < n_tests; ++i) {
    const TestFunction& psi = tests[i];
    const Box support = psi.support_box();
    for (int l = 0; l < n_sub; ++l) {
      const NeuralBasis& local = pou.local(l);
      const ScalarField& kappa = lspec.kappa.empty() ? prob.kappa : lspec.kappa[l];
      auto row = sys.A.row(i).segment(pou.column_offset(l), local.size());
      for (const Box& piece : clip_box(layout.subdomains[l], support))
        for (const Box& sub : detail::split_at_x(piece, prob.x_splits))
          detail::weak_piece_simpson(local, psi, kappa, prob.source, sub, quad.points_per_axis,
                                     row, sys.f[i]);
      detail::weak_edge_term(local, psi, kappa, exterior[l], support, quad.boundary_points, row);
    }
    const double amp = detail::test_amplitude(psi);
    sys.A.row(i) *= amp;
    sys.f[i] *= amp;
  }
  return sys;
}

// Soft-constraint boundary rows B_mj = basis_j(x_m), g_m = g(x_m). For a
// partitioned basis the entries carry the unity weights, so seams contribute
// the averaged one-sided values.
template <class Basis>
inline BoundarySystem assemble_boundary(const Basis& basis,
                                        const std::vector<BoundarySample>& samples,
                                        const Problem& prob) {
  if (prob.hard_constraint)
    throw std::logic_error("boundary rows are not assembled under a hard constraint");
  const int n = static_cast<int>(samples.size());
  Eigen::MatrixX2d pts(n, 2);
  BoundarySystem sys;
  sys.g.resize(n);
  for (int m = 0; m < n; ++m) {
    pts(m, 0) = samples[m].p.x;
    pts(m, 1) = samples[m].p.y;
    sys.g[m] = prob.boundary(samples[m].p);
  }
  sys.B = basis.eval(pts);
  return sys;
}

// Interface continuity rows. For every interface, one block of value-jump
// rows u_left(x_m) - u_right(x_m) followed by one block of flux-jump rows
// kappa_left du_left/dn - kappa_right du_right/dn, both built from the
// unwrapped one-sided local bases. The right-hand side is zero; the caller
// scales the rows by lambda when stacking.
inline Eigen::MatrixXd assemble_interface(const PoUBasis& pou, int n_per_interface) {
  const PartitionLayout& layout = pou.layout();
  const int rows = 2 * n_per_interface * static_cast<int>(layout.interfaces.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, pou.size());
  int r0 = 0;
  for (const Interface& iface : layout.interfaces) {
    const std::vector<Vec2> samples = sample_interface(iface, n_per_interface);
    Eigen::MatrixX2d pts(n_per_interface, 2);
    for (int k = 0; k < n_per_interface; ++k) {
      pts(k, 0) = samples[k].x;
      pts(k, 1) = samples[k].y;
    }
    const NeuralBasis& left = pou.local(iface.left);
    const NeuralBasis& right = pou.local(iface.right);
    const BasisEval el = left.eval_all(pts, kEvalVal | kEvalGrad);
    const BasisEval er = right.eval_all(pts, kEvalVal | kEvalGrad);

    const int cl = pou.column_offset(iface.left);
    const int cr = pou.column_offset(iface.right);
    M.block(r0, cl, n_per_interface, left.size()) = el.val;
    M.block(r0, cr, n_per_interface, right.size()) -= er.val;
    const int r1 = r0 + n_per_interface;
    M.block(r1, cl, n_per_interface, left.size()) =
        iface.kappa_left * (iface.normal.x * el.gx + iface.normal.y * el.gy);
    M.block(r1, cr, n_per_interface, right.size()) -=
        iface.kappa_right * (iface.normal.x * er.gx + iface.normal.y * er.gy);
    r0 += 2 * n_per_interface;
  }
  return M;
}

// Collocation rows L[phi_j](x_m) = -kappa lap(phi_j) - grad(kappa).grad(phi_j)
// and f_m = f(x_m). Scaled rows are up to the caller (the common interior
// weight cancels against the right-hand side).
inline WeakSystem assemble_sf(const NeuralBasis& basis, const Eigen::MatrixX2d& pts,
                              const Problem& prob) {
  if (!prob.kappa_grad)
    throw std::invalid_argument("collocation assembly needs the diffusion gradient");
  const int n = static_cast<int>(pts.rows());
  const BasisEval e = basis.eval_all(pts, kEvalGrad | kEvalLap);
  WeakSystem sys;
  sys.A.resize(n, basis.size());
  sys.f.resize(n);
  for (int m = 0; m < n; ++m) {
    const Vec2 p{pts(m, 0), pts(m, 1)};
    const double kap = prob.kappa(p);
    const Vec2 kg = prob.kappa_grad(p);
    sys.A.row(m) = -kap * e.lap.row(m) - kg.x * e.gx.row(m) - kg.y * e.gy.row(m);
    sys.f[m] = prob.source(p);
  }
  return sys;
}

// Energy-form blocks: Lx/Ly carry sqrt(area/2N) sqrt(kappa) times the basis
// gradients; linear holds (area/2N) Phi^T f for the normal-equation solve.
struct DrmSystem {
  Eigen::MatrixXd Lx, Ly;
  Eigen::MatrixXd Phi;
  Eigen::VectorXd linear;
  bool homogeneous = false;
};

inline DrmSystem assemble_drm(const NeuralBasis& basis, const Eigen::MatrixX2d& pts,
                              const Problem& prob) {
  const int n = static_cast<int>(pts.rows());
  const double area = prob.domain.area();
  const double scale = std::sqrt(area / (2.0 * n));
  const BasisEval e = basis.eval_all(pts, kEvalVal | kEvalGrad);
  DrmSystem sys;
  sys.Phi = e.val;
  sys.Lx.resize(n, basis.size());
  sys.Ly.resize(n, basis.size());
  Eigen::VectorXd fv(n);
  for (int m = 0; m < n; ++m) {
    const Vec2 p{pts(m, 0), pts(m, 1)};
    const double kap = prob.kappa(p);
    if (kap < 0.0) throw std::domain_error("negative diffusion coefficient in energy assembly");
    const double sk = scale * std::sqrt(kap);
    sys.Lx.row(m) = sk * e.gx.row(m);
    sys.Ly.row(m) = sk * e.gy.row(m);
    fv[m] = prob.source(p);
  }
  sys.homogeneous = fv.cwiseAbs().maxCoeff() == 0.0;
  sys.linear = (area / (2.0 * n)) * (sys.Phi.transpose() * fv);
  return sys;
}

}  // namespace wtn
