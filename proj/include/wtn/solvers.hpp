#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "wtn/assembly.hpp"

namespace wtn {

// Uniform interior points by rejection from the bounding box.
inline Eigen::MatrixX2d sample_interior(const Domain& domain, int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("need a positive interior sample count");
  const Box bb = domain.bounding_box();
  Eigen::MatrixX2d pts(n, 2);
  int k = 0;
  while (k < n) {
    const Vec2 p{rng.uniform(bb.lo.x, bb.hi.x), rng.uniform(bb.lo.y, bb.hi.y)};
    if (!domain.contains(p)) continue;
    pts(k, 0) = p.x;
    pts(k, 1) = p.y;
    ++k;
  }
  return pts;
}

struct LstsqResult {
  Eigen::VectorXd x;
  double residual = 0.0;
  int rank = 0;
};

// Minimum-norm least squares through a full SVD with a relative singular
// value cutoff. Deterministic for identical inputs.
inline LstsqResult lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         double rcond = 1e-10) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rcond);
  LstsqResult out;
  out.x = svd.solve(b);
  out.rank = static_cast<int>(svd.rank());
  out.residual = (A * out.x - b).norm();
  return out;
}

struct SolveConfig {
  uint64_t seed = 0;
  int M = 200;
  int N = 300;
  double gamma = 1.0;
  double sigma = 0.05;
  double cutoff = 10.0;
  double beta = 1.0;
  double lambda = 1.0;
  double beta_sf = 1.0;
  double beta_drm = 1.0;
  double eps_drm = 1e-5;
  int boundary_per_edge = 200;
  int interior_samples = 1000;
  int n_interface = 200;
  int fourier_p = 64;
  double eps_f = 1.0;
  QuadratureConfig quad;
};

inline SolveConfig config_for(const Problem& prob) {
  SolveConfig cfg;
  cfg.M = prob.defaults.M;
  cfg.N = prob.defaults.N;
  cfg.gamma = prob.defaults.gamma;
  cfg.sigma = prob.defaults.sigma;
  cfg.cutoff = prob.defaults.cutoff;
  cfg.beta = prob.defaults.beta;
  cfg.lambda = prob.defaults.lambda;
  cfg.boundary_per_edge = prob.defaults.boundary_per_edge;
  cfg.interior_samples = prob.defaults.interior_samples;
  return cfg;
}

struct Solution {
  std::variant<NeuralBasis, PoUBasis> basis;
  Eigen::VectorXd alpha;
  int rank = 0;
  double ls_residual = 0.0;       // residual of the full stacked system
  double weak_residual = 0.0;     // unweighted weak block only
  double boundary_residual = 0.0; // unweighted boundary block, root mean square
  double interface_value_residual = 0.0; // max |value-jump rows * alpha|
  double interface_flux_residual = 0.0;  // max |flux-jump rows * alpha|

  Eigen::VectorXd values(const Eigen::MatrixX2d& pts) const {
    return std::visit([&](const auto& b) -> Eigen::VectorXd { return b.eval(pts) * alpha; },
                      basis);
  }
};

namespace detail {

inline std::vector<TestFunction> make_tests(const Problem& prob, const SolveConfig& cfg) {
  Rng rng(split_seed(cfg.seed, "test", 0));
  return build_test_set(prob.domain, cfg.N, Vec2{cfg.sigma, cfg.sigma}, cfg.cutoff, rng);
}

// Shared tail of every weak-form solve: optionally stack weighted boundary
// rows under the weak block, then take the minimum-norm least squares fit.
template <class Basis>
Solution finish_weak(Basis&& basis, const WeakSystem& weak, const Problem& prob,
                     const SolveConfig& cfg) {
  Solution sol{std::forward<Basis>(basis), {}, 0, 0, 0, 0, 0, 0};
  const int n_weak = static_cast<int>(weak.A.rows());
  Eigen::MatrixXd S;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd B;
  Eigen::VectorXd g;
  if (!prob.hard_constraint) {
    const auto samples =
        sample_boundary(prob.domain, cfg.boundary_per_edge, BoundaryMode::grid, nullptr);
    const BoundarySystem bnd = std::visit(
        [&](const auto& b) { return assemble_boundary(b, samples, prob); }, sol.basis);
    const double w = weak_boundary_weight(cfg.beta, prob.domain.boundary_length(),
                                          static_cast<int>(samples.size()));
    B = bnd.B;
    g = bnd.g;
    S.resize(n_weak + B.rows(), weak.A.cols());
    S << weak.A, w * B;
    rhs.resize(n_weak + g.size());
    rhs << weak.f, w * g;
  } else {
    S = weak.A;
    rhs = weak.f;
  }
  LstsqResult ls = lstsq(S, rhs);
  sol.alpha = std::move(ls.x);
  sol.rank = ls.rank;
  sol.ls_residual = ls.residual;
  sol.weak_residual = (weak.A * sol.alpha - weak.f).norm();
  if (B.rows() > 0)
    sol.boundary_residual = (B * sol.alpha - g).norm() / std::sqrt(double(B.rows()));
  return sol;
}

}  // namespace detail

// Weak-form solve over the random tanh trial space.
inline Solution solve_wtn(const Problem& prob, const SolveConfig& cfg) {
  NeuralBasis basis = build_transnet(cfg.M, cfg.gamma, prob.domain,
                                     split_seed(cfg.seed, "basis", 0));
  if (prob.hard_constraint) basis = with_bubble(basis, prob.domain);
  const auto tests = detail::make_tests(prob, cfg);
  Rng mc_rng(split_seed(cfg.seed, "mcquad", 0));
  Rng* mc = cfg.quad.mode == QuadMode::monte_carlo ? &mc_rng : nullptr;
  const WeakSystem weak = assemble_weak(basis, tests, prob, cfg.quad, mc);
  return detail::finish_weak(std::move(basis), weak, prob, cfg);
}

// Same weak solve, but the trial features act on a random Fourier lift of the
// coordinates so the basis can express fine oscillations.
inline Solution solve_fwtn(const Problem& prob, const SolveConfig& cfg) {
  const FourierMap map = build_fourier_map(cfg.fourier_p, {1.0, 3.0},
                                           split_seed(cfg.seed, "fourier", 0));
  NeuralBasis basis =
      build_fourier_basis(cfg.M, Eigen::VectorXd::Constant(cfg.M, cfg.gamma), map,
                          cfg.eps_f, split_seed(cfg.seed, "basis", 0));
  if (prob.hard_constraint) basis = with_bubble(basis, prob.domain);
  const auto tests = detail::make_tests(prob, cfg);
  Rng mc_rng(split_seed(cfg.seed, "mcquad", 0));
  Rng* mc = cfg.quad.mode == QuadMode::monte_carlo ? &mc_rng : nullptr;
  const WeakSystem weak = assemble_weak(basis, tests, prob, cfg.quad, mc);
  return detail::finish_weak(std::move(basis), weak, prob, cfg);
}

// Partitioned weak solve: local bases per subdomain, continuity and flux
// penalties across interfaces, shared boundary penalty.
inline Solution solve_pou_wtn(const Problem& prob, const SolveConfig& cfg,
                              const LayoutSpec& lspec) {
  if (prob.hard_constraint)
    throw std::logic_error("partitioned solve expects penalty boundary conditions");
  const PartitionLayout& layout = lspec.layout;
  const int n_sub = static_cast<int>(layout.subdomains.size());
  const int m_per = lspec.m_per > 0 ? lspec.m_per : cfg.M;
  std::vector<NeuralBasis> locals;
  locals.reserve(n_sub);
  for (int l = 0; l < n_sub; ++l) {
    const uint64_t s = split_seed(cfg.seed, "basis", static_cast<uint64_t>(l));
    if (!lspec.gamma_mix.empty()) {
      locals.push_back(build_transnet(m_per, mixed_gammas(m_per, lspec.gamma_mix[l]),
                                      layout.subdomains[l], s));
    } else {
      locals.push_back(build_transnet(m_per, cfg.gamma, layout.subdomains[l], s));
    }
  }
  PoUBasis pou(layout, std::move(locals));

  const auto tests = detail::make_tests(prob, cfg);
  const WeakSystem weak = assemble_weak_pou(pou, tests, prob, lspec, cfg.quad);

  const auto samples =
      sample_boundary(prob.domain, cfg.boundary_per_edge, BoundaryMode::grid, nullptr);
  const BoundarySystem bnd = assemble_boundary(pou, samples, prob);
  const double w = weak_boundary_weight(cfg.beta, prob.domain.boundary_length(),
                                        static_cast<int>(samples.size()));
  const Eigen::MatrixXd jumps = assemble_interface(pou, cfg.n_interface);

  Eigen::MatrixXd S(weak.A.rows() + bnd.B.rows() + jumps.rows(), pou.size());
  S.topRows(weak.A.rows()) = weak.A;
  S.middleRows(weak.A.rows(), bnd.B.rows()) = w * bnd.B;
  if (jumps.rows() > 0) S.bottomRows(jumps.rows()) = cfg.lambda * jumps;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.rows());
  rhs.head(weak.f.size()) = weak.f;
  rhs.segment(weak.f.size(), bnd.g.size()) = w * bnd.g;

  LstsqResult ls = lstsq(S, rhs);
  Solution sol{std::move(pou), std::move(ls.x), ls.rank, ls.residual, 0, 0, 0, 0};
  sol.weak_residual = (weak.A * sol.alpha - weak.f).norm();
  sol.boundary_residual =
      (bnd.B * sol.alpha - bnd.g).norm() / std::sqrt(double(bnd.B.rows()));
  const Eigen::VectorXd jr = jumps * sol.alpha;
  const int per = 2 * cfg.n_interface;
  for (int i = 0; cfg.n_interface > 0 && i < static_cast<int>(layout.interfaces.size()); ++i) {
    const auto value_rows = jr.segment(i * per, cfg.n_interface);
    const auto flux_rows = jr.segment(i * per + cfg.n_interface, cfg.n_interface);
    sol.interface_value_residual =
        std::max(sol.interface_value_residual, value_rows.cwiseAbs().maxCoeff());
    sol.interface_flux_residual =
        std::max(sol.interface_flux_residual, flux_rows.cwiseAbs().maxCoeff());
  }
  return sol;
}

// Strong-form collocation baseline.
inline Solution solve_sf(const Problem& prob, const SolveConfig& cfg) {
  NeuralBasis basis = build_transnet(cfg.M, cfg.gamma, prob.domain,
                                     split_seed(cfg.seed, "basis", 0));
  if (prob.hard_constraint) basis = with_bubble(basis, prob.domain);
  Rng irng(split_seed(cfg.seed, "interior", 0));
  const Eigen::MatrixX2d pts = sample_interior(prob.domain, cfg.interior_samples, irng);
  const WeakSystem rows = assemble_sf(basis, pts, prob);

  Solution sol{std::move(basis), {}, 0, 0, 0, 0, 0, 0};
  Eigen::MatrixXd S;
  Eigen::VectorXd rhs;
  if (!prob.hard_constraint) {
    const auto samples =
        sample_boundary(prob.domain, cfg.boundary_per_edge, BoundaryMode::grid, nullptr);
    const BoundarySystem bnd = std::visit(
        [&](const auto& b) { return assemble_boundary(b, samples, prob); }, sol.basis);
    const double w = sf_boundary_weight(cfg.beta_sf, prob.domain.boundary_length(),
                                        prob.domain.area(), cfg.interior_samples,
                                        static_cast<int>(samples.size()));
    S.resize(rows.A.rows() + bnd.B.rows(), rows.A.cols());
    S << rows.A, w * bnd.B;
    rhs.resize(rows.f.size() + bnd.g.size());
    rhs << rows.f, w * bnd.g;
    LstsqResult ls = lstsq(S, rhs);
    sol.alpha = std::move(ls.x);
    sol.rank = ls.rank;
    sol.ls_residual = ls.residual;
    sol.boundary_residual =
        (bnd.B * sol.alpha - bnd.g).norm() / std::sqrt(double(bnd.B.rows()));
  } else {
    LstsqResult ls = lstsq(rows.A, rows.f);
    sol.alpha = std::move(ls.x);
    sol.rank = ls.rank;
    sol.ls_residual = ls.residual;
  }
  sol.weak_residual = (rows.A * sol.alpha - rows.f).norm();
  return sol;
}

namespace detail {

struct DrmBlocks {
  NeuralBasis basis;
  Eigen::MatrixXd L;
  Eigen::VectorXd r;
  Eigen::VectorXd linear;
  bool homogeneous = false;
  Eigen::MatrixXd B;
  Eigen::VectorXd g;
};

inline DrmBlocks drm_blocks(const Problem& prob, const SolveConfig& cfg) {
  NeuralBasis basis = build_transnet(cfg.M, cfg.gamma, prob.domain,
                                     split_seed(cfg.seed, "basis", 0));
  if (prob.hard_constraint) basis = with_bubble(basis, prob.domain);
  Rng irng(split_seed(cfg.seed, "interior", 0));
  const Eigen::MatrixX2d pts = sample_interior(prob.domain, cfg.interior_samples, irng);
  const DrmSystem drm = assemble_drm(basis, pts, prob);

  const int n_grad = static_cast<int>(drm.Lx.rows());
  DrmBlocks blk{std::move(basis), {}, {}, drm.linear, drm.homogeneous,
                Eigen::MatrixXd(0, 0),  {}};
  blk.B.resize(0, blk.basis.size());
  double w = 0.0;
  if (!prob.hard_constraint) {
    const auto samples =
        sample_boundary(prob.domain, cfg.boundary_per_edge, BoundaryMode::grid, nullptr);
    const BoundarySystem bnd = assemble_boundary(blk.basis, samples, prob);
    w = drm_boundary_weight(cfg.beta_drm, prob.domain.boundary_length(),
                            prob.domain.area(), cfg.interior_samples,
                            static_cast<int>(samples.size()));
    blk.B = bnd.B;
    blk.g = bnd.g;
  }
  blk.L.resize(2 * n_grad + blk.B.rows(), blk.basis.size());
  if (blk.B.rows() > 0)
    blk.L << drm.Lx, drm.Ly, w * blk.B;
  else
    blk.L << drm.Lx, drm.Ly;
  blk.r = Eigen::VectorXd::Zero(blk.L.rows());
  if (blk.B.rows() > 0) blk.r.tail(blk.g.size()) = w * blk.g;
  return blk;
}

using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Shifted normal equations in extended precision: cond(H) ~ cond(L)^2 leaves
// plain double refinement stuck well above the stationarity the energy
// gradient identity demands.
inline VectorXld drm_normal_solve(const DrmBlocks& blk, double eps) {
  const MatrixXld Lx = blk.L.cast<long double>();
  MatrixXld H = Lx.transpose() * Lx;
  H.diagonal().array() += static_cast<long double>(eps);
  const VectorXld b =
      Lx.transpose() * blk.r.cast<long double>() + blk.linear.cast<long double>();
  Eigen::LDLT<MatrixXld> ldlt(H);
  VectorXld alpha = ldlt.solve(b);
  for (int it = 0; it < 4; ++it) {
    const VectorXld res = b - H * alpha;
    if (res.norm() <= 1e-18L * b.norm()) break;
    alpha += ldlt.solve(res);
  }
  return alpha;
}

}  // namespace detail

// Ritz-energy baseline. With a zero source the energy is a plain least
// squares problem in the gradient rows; otherwise the normal equations get a
// small diagonal shift and are solved in extended precision.
inline Solution solve_drm(const Problem& prob, const SolveConfig& cfg) {
  detail::DrmBlocks blk = detail::drm_blocks(prob, cfg);
  const Eigen::MatrixXd& L = blk.L;
  Solution sol{std::move(blk.basis), {}, 0, 0, 0, 0, 0, 0};
  if (blk.homogeneous) {
    LstsqResult ls = lstsq(L, blk.r);
    sol.alpha = std::move(ls.x);
    sol.rank = ls.rank;
    sol.ls_residual = ls.residual;
  } else {
    sol.alpha = detail::drm_normal_solve(blk, cfg.eps_drm).cast<double>();
    sol.rank = static_cast<int>(L.cols());
    sol.ls_residual = (L * sol.alpha - blk.r).norm();
  }
  if (blk.B.rows() > 0)
    sol.boundary_residual =
        (blk.B * sol.alpha - blk.g).norm() / std::sqrt(double(blk.B.rows()));
  sol.weak_residual = sol.ls_residual;
  return sol;
}

// Relative gap in the energy gradient identity grad(E)(alpha) = -2 eps alpha,
// measured at the extended-precision minimizer. Rounding alpha to double
// costs ~ eps_mach * ||L^T L|| * ||alpha||, more than the identity leaves
// room for, so the gap is evaluated before the cast.
inline double drm_stationarity_gap(const Problem& prob, const SolveConfig& cfg) {
  const detail::DrmBlocks blk = detail::drm_blocks(prob, cfg);
  if (blk.homogeneous)
    throw std::logic_error("stationarity gap is defined for the normal-equation branch");
  const detail::VectorXld alpha = detail::drm_normal_solve(blk, cfg.eps_drm);
  const detail::MatrixXld Lx = blk.L.cast<long double>();
  const detail::VectorXld grad =
      2.0L * (Lx.transpose() * (Lx * alpha - blk.r.cast<long double>()) -
              blk.linear.cast<long double>());
  const detail::VectorXld want = -2.0L * static_cast<long double>(cfg.eps_drm) * alpha;
  return static_cast<double>((grad - want).norm() / want.norm());
}

}  // namespace wtn
