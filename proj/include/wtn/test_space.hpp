#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wtn/geometry.hpp"
#include "wtn/rng.hpp"

namespace wtn {

// Normalized anisotropic Gaussian used as a weak-form test function:
//   psi(x) = (2*pi)^(-1) * (sx*sy)^(-1) * exp(-|x-mu|^2_sigma / 2).
// It integrates to 1 over the plane, and everything outside the box
// mu +- cutoff*sigma is treated as numerically zero.
struct TestFunction {
  Vec2 mu;
  Vec2 sigma;
  double cutoff = 10.0;

  double value(const Vec2& p) const {
    const double dx = (p.x - mu.x) / sigma.x;
    const double dy = (p.y - mu.y) / sigma.y;
    return norm_const() * std::exp(-0.5 * (dx * dx + dy * dy));
  }

  Vec2 grad(const Vec2& p) const {
    const double v = value(p);
    return {-(p.x - mu.x) / (sigma.x * sigma.x) * v,
            -(p.y - mu.y) / (sigma.y * sigma.y) * v};
  }

  Box support_box() const {
    return {{mu.x - cutoff * sigma.x, mu.y - cutoff * sigma.y},
            {mu.x + cutoff * sigma.x, mu.y + cutoff * sigma.y}};
  }

  double norm_const() const {
    return 1.0 / (2.0 * std::numbers::pi * sigma.x * sigma.y);
  }
};

// N test functions with means drawn uniformly over the domain (rejection
// sampling over the bounding box) and a shared width vector.
inline std::vector<TestFunction> build_test_set(const Domain& domain, int n, Vec2 sigma,
                                                double cutoff, Rng& rng) {
  if (n < 1) throw std::invalid_argument("need at least one test function");
  if (sigma.x <= 0.0 || sigma.y <= 0.0 || cutoff <= 0.0)
    throw std::invalid_argument("test function widths must be positive");
  const Box bb = domain.bounding_box();
  std::vector<TestFunction> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Vec2 p{rng.uniform(bb.lo.x, bb.hi.x), rng.uniform(bb.lo.y, bb.hi.y)};
    if (!domain.contains(p)) continue;
    out.push_back({p, sigma, cutoff});
  }
  return out;
}

inline std::vector<TestFunction> build_test_set(const Domain& domain, int n, double sigma,
                                                double cutoff, Rng& rng) {
  return build_test_set(domain, n, Vec2{sigma, sigma}, cutoff, rng);
}

}  // namespace wtn
