#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wtn/geometry.hpp"
#include "wtn/rng.hpp"

namespace wtn {

// Random Fourier lift x -> [cos(2 pi B x); sin(2 pi B x)]. Every lifted point
// has norm sqrt(P), so downstream hyperplane offsets live on [0, sqrt(P)+eps].
struct FourierMap {
  Eigen::MatrixX2d B;  // P x 2 frequency rows

  int P() const { return static_cast<int>(B.rows()); }

  Eigen::MatrixXd lift(const Eigen::Ref<const Eigen::MatrixX2d>& pts) const {
    const Eigen::MatrixXd W = 2.0 * std::numbers::pi * (pts * B.transpose());
    Eigen::MatrixXd Y(pts.rows(), 2 * B.rows());
    Y.leftCols(B.rows()) = W.array().cos();
    Y.rightCols(B.rows()) = W.array().sin();
    return Y;
  }

  // d/dx_k of the lift: [-2 pi B_k sin(2 pi B x); 2 pi B_k cos(2 pi B x)].
  Eigen::MatrixXd lift_deriv(const Eigen::Ref<const Eigen::MatrixX2d>& pts, int k) const {
    const Eigen::MatrixXd W = 2.0 * std::numbers::pi * (pts * B.transpose());
    const Eigen::ArrayXd bk = 2.0 * std::numbers::pi * B.col(k).array();
    Eigen::MatrixXd Y(pts.rows(), 2 * B.rows());
    Y.leftCols(B.rows()) = (-W.array().sin()).rowwise() * bk.transpose();
    Y.rightCols(B.rows()) = W.array().cos().rowwise() * bk.transpose();
    return Y;
  }

  // Sum over axes of the second derivatives: -(2 pi)^2 (b_x^2 + b_y^2) F(x).
  Eigen::MatrixXd lift_laplacian(const Eigen::Ref<const Eigen::MatrixX2d>& pts) const {
    const Eigen::MatrixXd W = 2.0 * std::numbers::pi * (pts * B.transpose());
    const Eigen::ArrayXd s =
        -4.0 * std::numbers::pi * std::numbers::pi * B.rowwise().squaredNorm().array();
    Eigen::MatrixXd Y(pts.rows(), 2 * B.rows());
    Y.leftCols(B.rows()) = W.array().cos().rowwise() * s.transpose();
    Y.rightCols(B.rows()) = W.array().sin().rowwise() * s.transpose();
    return Y;
  }
};

// Frequencies drawn row-wise from zero-mean Gaussians; `sigmas` splits the P
// rows into equal groups with one standard deviation per group.
inline FourierMap build_fourier_map(int P, const std::vector<double>& sigmas,
                                    std::uint64_t seed) {
  if (P < 1) throw std::invalid_argument("fourier map needs P >= 1");
  if (sigmas.empty()) throw std::invalid_argument("fourier map needs at least one sigma");
  for (double s : sigmas)
    if (s <= 0.0) throw std::invalid_argument("fourier sigmas must be positive");
  FourierMap map;
  map.B.resize(P, 2);
  Rng rng(seed);
  const auto g = static_cast<std::size_t>(sigmas.size());
  for (int p = 0; p < P; ++p) {
    const std::size_t group = std::min(g - 1, static_cast<std::size_t>(p) * g /
                                                  static_cast<std::size_t>(P));
    map.B(p, 0) = sigmas[group] * rng.gaussian();
    map.B(p, 1) = sigmas[group] * rng.gaussian();
  }
  return map;
}

// Evaluation bundle; matrices are n_points x n_basis and only the requested
// pieces are filled.
struct BasisEval {
  Eigen::MatrixXd val;
  Eigen::MatrixXd gx;
  Eigen::MatrixXd gy;
  Eigen::MatrixXd lap;
};

enum : unsigned { kEvalVal = 1, kEvalGrad = 2, kEvalLap = 4 };

// Randomized tanh feature basis. Column 0 is the constant function; column j
// (1-based) is tanh(gamma_j (a_j . z + r_j)) where z is either the point
// recentered and rescaled to the unit ball, or its Fourier lift. An optional
// polynomial bubble multiplier turns it into a basis of functions vanishing on
// the boundary of a rectangle.
class NeuralBasis {
public:
  Eigen::MatrixXd directions;  // M x dim unit rows
  Eigen::VectorXd offsets;     // M
  Eigen::VectorXd gammas;      // M, positive
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
  std::optional<FourierMap> fourier;
  std::optional<Box> bubble;

  int size() const { return static_cast<int>(directions.rows()) + 1; }
  int features() const { return static_cast<int>(directions.rows()); }

  BasisEval eval_all(const Eigen::Ref<const Eigen::MatrixX2d>& pts, unsigned what) const {
    const bool want_val = (what & kEvalVal) || bubble.has_value();
    const bool want_grad = (what & kEvalGrad) || ((what & kEvalLap) && bubble.has_value());
    const bool want_lap = what & kEvalLap;
    const int n = static_cast<int>(pts.rows());
    const int M = features();

    Eigen::MatrixXd arg;      // n x M tanh arguments
    Eigen::MatrixXd t0x, t0y; // chain-rule factors a_j . dz/dx_k, Fourier only
    Eigen::MatrixXd t0lap;    // a_j . lap(z), Fourier only
    if (fourier) {
      const Eigen::MatrixXd Y = fourier->lift(pts);
      arg.noalias() = Y * directions.transpose();
      if (want_grad || want_lap) {
        t0x.noalias() = fourier->lift_deriv(pts, 0) * directions.transpose();
        t0y.noalias() = fourier->lift_deriv(pts, 1) * directions.transpose();
      }
      if (want_lap) t0lap.noalias() = fourier->lift_laplacian(pts) * directions.transpose();
    } else {
      Eigen::MatrixX2d z(n, 2);
      z.col(0) = (pts.col(0).array() - center.x) / radius;
      z.col(1) = (pts.col(1).array() - center.y) / radius;
      arg.noalias() = z * directions.transpose();
    }
    arg.array().rowwise() += offsets.transpose().array();
    arg.array().rowwise() *= gammas.transpose().array();

    const Eigen::ArrayXXd V = arg.array().tanh();
    Eigen::ArrayXXd S;  // sech^2 = 1 - tanh^2
    if (want_grad || want_lap) S = 1.0 - V * V;

    BasisEval out;
    auto with_const = [n](auto&& block) {
      Eigen::MatrixXd m(n, block.cols() + 1);
      m.col(0).setZero();
      m.rightCols(block.cols()) = block;
      return m;
    };

    Eigen::MatrixXd val, gx, gy, lap;
    if (want_val) {
      val = with_const(V.matrix());
      val.col(0).setOnes();
    }
    if (want_grad) {
      if (fourier) {
        gx = with_const(((S * t0x.array()).rowwise() * gammas.transpose().array()).matrix());
        gy = with_const(((S * t0y.array()).rowwise() * gammas.transpose().array()).matrix());
      } else {
        const Eigen::ArrayXd cx = gammas.array() * directions.col(0).array() / radius;
        const Eigen::ArrayXd cy = gammas.array() * directions.col(1).array() / radius;
        gx = with_const((S.rowwise() * cx.transpose()).matrix());
        gy = with_const((S.rowwise() * cy.transpose()).matrix());
      }
    }
    if (want_lap) {
      const Eigen::ArrayXXd dV = -2.0 * V * S;  // second derivative of tanh
      if (fourier) {
        const Eigen::ArrayXXd quad =
            (t0x.array().square() + t0y.array().square()).rowwise() *
            gammas.transpose().array().square();
        const Eigen::ArrayXXd lin =
            (S * t0lap.array()).rowwise() * gammas.transpose().array();
        lap = with_const((dV * quad + lin).matrix());
      } else {
        const Eigen::ArrayXd c2 = (gammas.array() / radius).square();
        lap = with_const((dV.rowwise() * c2.transpose()).matrix());
      }
    }

    if (bubble) {
      const Eigen::ArrayXd hx = (pts.col(0).array() - bubble->lo.x) *
                                (bubble->hi.x - pts.col(0).array());
      const Eigen::ArrayXd hy = (pts.col(1).array() - bubble->lo.y) *
                                (bubble->hi.y - pts.col(1).array());
      const Eigen::ArrayXd h = hx * hy;
      const Eigen::ArrayXd dhx = (bubble->lo.x + bubble->hi.x - 2.0 * pts.col(0).array()) * hy;
      const Eigen::ArrayXd dhy = (bubble->lo.y + bubble->hi.y - 2.0 * pts.col(1).array()) * hx;
      const Eigen::ArrayXd lh = -2.0 * hy - 2.0 * hx;
      if (want_lap)
        out.lap = ((lap.array().colwise() * h) + 2.0 * (gx.array().colwise() * dhx) +
                   2.0 * (gy.array().colwise() * dhy) + (val.array().colwise() * lh))
                      .matrix();
      if (want_grad) {
        out.gx = ((gx.array().colwise() * h) + (val.array().colwise() * dhx)).matrix();
        out.gy = ((gy.array().colwise() * h) + (val.array().colwise() * dhy)).matrix();
      }
      if (what & kEvalVal) out.val = (val.array().colwise() * h).matrix();
    } else {
      if (what & kEvalVal) out.val = std::move(val);
      if (want_grad) {
        out.gx = std::move(gx);
        out.gy = std::move(gy);
      }
      if (want_lap) out.lap = std::move(lap);
    }
    return out;
  }

  Eigen::MatrixXd eval(const Eigen::Ref<const Eigen::MatrixX2d>& pts) const {
    return eval_all(pts, kEvalVal).val;
  }

  Eigen::VectorXd eval_one(const Vec2& p) const {
    Eigen::MatrixX2d pt(1, 2);
    pt << p.x, p.y;
    return eval(pt).row(0).transpose();
  }
};

// Plain basis over a ball covering the domain: center at the centroid, radius
// half the bounding-box diagonal. Directions are uniform on the circle,
// offsets uniform on [0, 1] in recentered coordinates.
inline NeuralBasis build_transnet(int M, const Eigen::VectorXd& gammas, const Domain& domain,
                                  std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("basis needs M >= 1");
  if (gammas.size() != M) throw std::invalid_argument("need one gamma per feature");
  if ((gammas.array() <= 0.0).any()) throw std::invalid_argument("gammas must be positive");
  NeuralBasis b;
  b.gammas = gammas;
  b.center = domain.centroid();
  const Box bb = domain.bounding_box();
  b.radius = 0.5 * std::hypot(bb.width(), bb.height());
  b.directions.resize(M, 2);
  b.offsets.resize(M);
  Rng rng(seed);
  for (int j = 0; j < M; ++j) {
    double gx, gy, nrm;
    do {
      gx = rng.gaussian();
      gy = rng.gaussian();
      nrm = std::hypot(gx, gy);
    } while (nrm < 1e-12);
    b.directions(j, 0) = gx / nrm;
    b.directions(j, 1) = gy / nrm;
  }
  for (int j = 0; j < M; ++j) b.offsets[j] = rng.uniform();
  return b;
}

inline NeuralBasis build_transnet(int M, double gamma, const Domain& domain,
                                  std::uint64_t seed) {
  return build_transnet(M, Eigen::VectorXd::Constant(M, gamma), domain, seed);
}

// Basis acting on Fourier-lifted coordinates. Every lifted point sits on the
// sphere of radius sqrt(P), so hyperplane offsets are uniform on
// [0, sqrt(P) + eps_f] and no recentering is applied.
inline NeuralBasis build_fourier_basis(int M, const Eigen::VectorXd& gammas,
                                       const FourierMap& map, double eps_f,
                                       std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("basis needs M >= 1");
  if (gammas.size() != M) throw std::invalid_argument("need one gamma per feature");
  if ((gammas.array() <= 0.0).any()) throw std::invalid_argument("gammas must be positive");
  if (eps_f < 0.0) throw std::invalid_argument("offset slack must be non-negative");
  NeuralBasis b;
  b.gammas = gammas;
  b.fourier = map;
  const int dim = 2 * map.P();
  const double R = std::sqrt(static_cast<double>(map.P())) + eps_f;
  b.directions.resize(M, dim);
  b.offsets.resize(M);
  Rng rng(seed);
  for (int j = 0; j < M; ++j) {
    double nrm = 0.0;
    do {
      for (int k = 0; k < dim; ++k) {
        b.directions(j, k) = rng.gaussian();
      }
      nrm = b.directions.row(j).norm();
    } while (nrm < 1e-12);
    b.directions.row(j) /= nrm;
  }
  for (int j = 0; j < M; ++j) b.offsets[j] = rng.uniform(0.0, R);
  return b;
}

// Multiplies every column (constant included) by the polynomial bubble
// h(x, y) = (x - lo_x)(hi_x - x)(y - lo_y)(hi_y - y), which vanishes on the
// rectangle boundary. Only meaningful for single-rectangle domains.
inline NeuralBasis with_bubble(NeuralBasis basis, const Domain& domain) {
  if (domain.parts().size() != 1)
    throw std::invalid_argument("bubble constraint needs a rectangular domain");
  basis.bubble = domain.parts().front();
  return basis;
}

// Per-subdomain gamma assignment splitting M features into equal thirds.
inline Eigen::VectorXd mixed_gammas(int M, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("need at least one gamma value");
  Eigen::VectorXd g(M);
  const auto k = static_cast<std::size_t>(values.size());
  for (int j = 0; j < M; ++j)
    g[j] = values[std::min(k - 1, static_cast<std::size_t>(j) * k /
                                      static_cast<std::size_t>(M))];
  return g;
}

// Partition-of-unity glue: one local basis per subdomain, global columns in
// subdomain-major order, evaluation weighted by the layout's chi.
class PoUBasis {
public:
  PoUBasis(const PartitionLayout& layout, std::vector<NeuralBasis> locals)
      : layout_(layout), locals_(std::move(locals)) {
    if (locals_.size() != layout_.subdomains.size())
      throw std::invalid_argument("need exactly one local basis per subdomain");
    offsets_.resize(locals_.size());
    int c = 0;
    for (std::size_t l = 0; l < locals_.size(); ++l) {
      offsets_[l] = c;
      c += locals_[l].size();
    }
    cols_ = c;
  }

  const PartitionLayout& layout() const { return layout_; }
  const NeuralBasis& local(int l) const { return locals_.at(static_cast<std::size_t>(l)); }
  int size() const { return cols_; }
  int column_offset(int l) const { return offsets_.at(static_cast<std::size_t>(l)); }

  // Global values chi_l(p) * phi_j^l(p); zero outside each subdomain closure.
  Eigen::MatrixXd eval(const Eigen::Ref<const Eigen::MatrixX2d>& pts) const {
    const int n = static_cast<int>(pts.rows());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, cols_);
    for (std::size_t l = 0; l < locals_.size(); ++l) {
      std::vector<int> rows;
      std::vector<double> weight;
      for (int i = 0; i < n; ++i) {
        const double chi = layout_.chi(static_cast<int>(l), {pts(i, 0), pts(i, 1)});
        if (chi > 0.0) {
          rows.push_back(i);
          weight.push_back(chi);
        }
      }
      if (rows.empty()) continue;
      Eigen::MatrixX2d sub(static_cast<int>(rows.size()), 2);
      for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<int>(k)) = pts.row(rows[k]);
      const Eigen::MatrixXd vals = locals_[l].eval(sub);
      for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(rows[k]).segment(offsets_[l], locals_[l].size()) = weight[k] * vals.row(static_cast<int>(k));
    }
    return out;
  }

private:
  PartitionLayout layout_;
  std::vector<NeuralBasis> locals_;
  std::vector<int> offsets_;
  int cols_ = 0;
};

}  // namespace wtn
