#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wtn/geometry.hpp"
#include "wtn/rng.hpp"
#include "wtn/test_space.hpp"

namespace wtn {

enum class QuadMode { simpson, monte_carlo };

struct QuadratureConfig {
  QuadMode mode = QuadMode::simpson;
  int points_per_axis = 33;   // composite Simpson nodes per axis, odd
  int boundary_points = 33;   // nodes per clipped edge segment, odd
  int mc_samples = 1089;      // draws per test function in Monte Carlo mode
};

struct Quadrature1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Composite Simpson nodes and weights on [a, b]; n must be odd and >= 3.
inline Quadrature1D simpson_nodes(double a, double b, int n) {
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson rule needs an odd n >= 3");
  if (!(b > a)) throw std::invalid_argument("simpson rule needs b > a");
  Quadrature1D q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    q.nodes[i] = a + h * i;
    double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    q.weights[i] = w * h / 3.0;
  }
  return q;
}

struct QuadratureRule {
  Eigen::MatrixX2d points;
  Eigen::VectorXd weights;
};

// Tensor-product Simpson rule over a box, x varying fastest.
inline QuadratureRule simpson_box(const Box& box, int n_per_axis) {
  const Quadrature1D qx = simpson_nodes(box.lo.x, box.hi.x, n_per_axis);
  const Quadrature1D qy = simpson_nodes(box.lo.y, box.hi.y, n_per_axis);
  QuadratureRule rule;
  const int n = n_per_axis * n_per_axis;
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  int k = 0;
  for (int j = 0; j < n_per_axis; ++j) {
    for (int i = 0; i < n_per_axis; ++i, ++k) {
      rule.points(k, 0) = qx.nodes[i];
      rule.points(k, 1) = qy.nodes[j];
      rule.weights[k] = qx.weights[i] * qy.weights[j];
    }
  }
  return rule;
}

// Integral of f over (domain intersect box), Simpson rule on each clip piece.
template <class F>
double integrate_clipped(const Domain& domain, const Box& box, int n_per_axis, F&& f) {
  double total = 0.0;
  for (const Box& piece : clip_box(domain, box)) {
    const QuadratureRule rule = simpson_box(piece, n_per_axis);
    for (int k = 0; k < rule.weights.size(); ++k)
      total += rule.weights[k] * f(Vec2{rule.points(k, 0), rule.points(k, 1)});
  }
  return total;
}

// Line integral of f along an edge with composite Simpson.
template <class F>
double edge_integral(const Edge& edge, int n, F&& f) {
  const double len = edge.length();
  const Quadrature1D q = simpson_nodes(0.0, len, n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += q.weights[i] * f(edge.point_at(q.nodes[i] / len));
  return total;
}

// Plain Monte Carlo: |domain| * mean(f) over uniform draws. Draws are taken
// exactly (rectangle chosen by area, then uniform inside), no rejection.
template <class F>
double mc_integrate_uniform(const Domain& domain, int n, Rng& rng, F&& f) {
  if (n < 1) throw std::invalid_argument("monte carlo needs at least one sample");
  const auto& parts = domain.parts();
  std::vector<double> cum;
  cum.reserve(parts.size());
  double total_area = 0.0;
  for (const Box& b : parts) {
    total_area += b.area();
    cum.push_back(total_area);
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    std::size_t pick = 0;
    if (parts.size() > 1) {
      const double u = rng.uniform(0.0, total_area);
      while (pick + 1 < parts.size() && u > cum[pick]) ++pick;
    }
    const Box& b = parts[pick];
    Vec2 p{rng.uniform(b.lo.x, b.hi.x), rng.uniform(b.lo.y, b.hi.y)};
    acc += f(p);
  }
  return total_area * acc / n;
}

// Importance-sampled integral of g * psi over the domain: draws x ~ psi and
// averages g(x) * 1_domain(x). Unbiased for int_domain g(x) psi(x) dx.
template <class F>
double mc_integrate_importance(const TestFunction& psi, const Domain& domain, int n, Rng& rng,
                               F&& g) {
  if (n < 1) throw std::invalid_argument("monte carlo needs at least one sample");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec2 p{psi.mu.x + psi.sigma.x * rng.gaussian(), psi.mu.y + psi.sigma.y * rng.gaussian()};
    if (domain.contains(p)) acc += g(p);
  }
  return acc / n;
}

// Draws shared by a whole row of importance-sampled integrals.
inline Eigen::MatrixX2d importance_draws(const TestFunction& psi, int n, Rng& rng) {
  Eigen::MatrixX2d pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = psi.mu.x + psi.sigma.x * rng.gaussian();
    pts(i, 1) = psi.mu.y + psi.sigma.y * rng.gaussian();
  }
  return pts;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace wtn
