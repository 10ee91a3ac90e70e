#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wtn/geometry.hpp"

namespace wtn {

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;

// ---------------------------------------------------------------------------
// Reference solutions on uniform grids (CSV ingestion + bilinear lookup).
// ---------------------------------------------------------------------------

struct ReferenceGrid {
  int nx = 0;
  int ny = 0;
  Box bounds;
  std::vector<double> u;  // row-major, x fastest

  double hx() const { return bounds.width() / (nx - 1); }
  double hy() const { return bounds.height() / (ny - 1); }

  // Bilinear interpolation. Points may sit on the boundary (or a hair outside
  // from roundoff); anything clearly outside the grid is an error.
  double at(const Vec2& p) const {
    const double tol_x = 1e-9 * std::max(1.0, bounds.width());
    const double tol_y = 1e-9 * std::max(1.0, bounds.height());
    if (p.x < bounds.lo.x - tol_x || p.x > bounds.hi.x + tol_x || p.y < bounds.lo.y - tol_y ||
        p.y > bounds.hi.y + tol_y)
      throw std::out_of_range("reference grid lookup outside the grid bounds");
    const double gx = (p.x - bounds.lo.x) / hx();
    const double gy = (p.y - bounds.lo.y) / hy();
    const int i = std::min(std::max(static_cast<int>(std::floor(gx)), 0), nx - 2);
    const int j = std::min(std::max(static_cast<int>(std::floor(gy)), 0), ny - 2);
    const double tx = std::min(std::max(gx - i, 0.0), 1.0);
    const double ty = std::min(std::max(gy - j, 0.0), 1.0);
    const double* row0 = u.data() + static_cast<std::size_t>(j) * nx + i;
    const double* row1 = row0 + nx;
    return (1 - ty) * ((1 - tx) * row0[0] + tx * row0[1]) +
           ty * ((1 - tx) * row1[0] + tx * row1[1]);
  }
};

namespace detail {

inline void grid_fail(const std::string& name, int line, const std::string& what) {
  throw std::runtime_error("reference grid " + name + ":" + std::to_string(line) + ": " + what);
}

inline bool uniform_step(double got, double expect, double span) {
  return std::abs(got - expect) <= 1e-9 * std::max({1.0, std::abs(expect), span});
}

}  // namespace detail

inline ReferenceGrid parse_reference_csv(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) detail::grid_fail(name, 1, "empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,u") detail::grid_fail(name, lineno, "expected header 'x,y,u', got '" + line + "'");

  std::vector<double> xs, ys, us;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double x, y, u;
    char c1, c2;
    std::istringstream row(line);
    if (!(row >> x >> c1 >> y >> c2 >> u) || c1 != ',' || c2 != ',')
      detail::grid_fail(name, lineno, "malformed row '" + line + "'");
    xs.push_back(x);
    ys.push_back(y);
    us.push_back(u);
  }
  const std::size_t total = xs.size();
  if (total < 4) detail::grid_fail(name, lineno, "need at least a 2x2 grid");

  std::size_t nx = 1;
  while (nx < total && ys[nx] == ys[0]) ++nx;
  if (nx < 2 || total % nx != 0)
    detail::grid_fail(name, lineno, "rows do not form a rectangular x-fastest grid");
  const std::size_t ny = total / nx;
  if (ny < 2) detail::grid_fail(name, lineno, "need at least two grid rows");

  const double span_x = xs[nx - 1] - xs[0];
  const double span_y = ys[total - nx] - ys[0];
  if (span_x <= 0 || span_y <= 0) detail::grid_fail(name, lineno, "grid axes must be increasing");
  const double dx = span_x / (nx - 1);
  const double dy = span_y / (ny - 1);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = j * nx + i;
      if (!detail::uniform_step(xs[k], xs[0] + dx * i, span_x))
        detail::grid_fail(name, static_cast<int>(k) + 2, "non-uniform x spacing");
      if (!detail::uniform_step(ys[k], ys[0] + dy * j, span_y))
        detail::grid_fail(name, static_cast<int>(k) + 2, "non-uniform y spacing");
    }
  }

  ReferenceGrid g;
  g.nx = static_cast<int>(nx);
  g.ny = static_cast<int>(ny);
  g.bounds = Box{{xs[0], ys[0]}, {xs[0] + span_x, ys[0] + span_y}};
  g.u = std::move(us);
  return g;
}

inline ReferenceGrid load_reference_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference grid file " + path);
  return parse_reference_csv(in, path);
}

// ---------------------------------------------------------------------------
// Problem catalog.
// ---------------------------------------------------------------------------

struct SolverDefaults {
  int M = 200;
  int N = 300;
  double gamma = 1.0;
  double sigma = 0.05;
  int cutoff = 10;  // support-box half-width in sigmas
  double beta = 1.0;
  double lambda = 1.0;
  int boundary_per_edge = 200;
  int interior_samples = 1000;  // collocation/energy sample count
  std::string layout;           // default partition name, empty when single-domain
};

// A named partition plus the per-subdomain fields that go with it. kappa is
// the one-sided diffusion field per subdomain (empty: use the global field);
// gamma_mix lists the shape-parameter values mixed within each subdomain
// (empty: every subdomain uses the configured scalar).
struct LayoutSpec {
  PartitionLayout layout;
  int m_per = 0;  // default local basis count, 0 = split the problem default evenly
  std::vector<ScalarField> kappa;
  std::vector<std::vector<double>> gamma_mix;
};

struct Problem {
  Problem(std::string id_, Domain domain_) : id(std::move(id_)), domain(std::move(domain_)) {}

  std::string id;
  Domain domain;
  ScalarField kappa;
  VectorField kappa_grad;
  ScalarField source;
  ScalarField boundary;
  ScalarField exact;  // empty for problems referenced by an external grid
  bool hard_constraint = false;
  // Vertical lines x = const where kappa or the source jumps. Quadrature
  // boxes are split here so composite rules keep their full order.
  std::vector<double> x_splits;
  SolverDefaults defaults;
  std::map<std::string, LayoutSpec> layouts;

  bool has_exact() const { return static_cast<bool>(exact); }
};

namespace detail {

inline constexpr double kPi = std::numbers::pi;

inline double lshape_exact_value(const Vec2& p) {
  const double r2 = p.x * p.x + p.y * p.y;
  if (r2 == 0.0) return 0.0;
  // Angle from the +y axis toward +x; the +0.0 keeps points with x = -0.0 on
  // the theta = pi branch so the solution vanishes on the lower re-entrant leg.
  const double theta = std::atan2(p.x + 0.0, p.y);
  return std::cbrt(r2) * std::sin((2.0 * theta + kPi) / 3.0);
}

inline Problem make_poisson_smooth() {
  Problem p("poisson_smooth", Domain::rectangle({0.0, 0.0}, {1.0, 1.0}));
  p.kappa = [](Vec2) { return 1.0; };
  p.kappa_grad = [](Vec2) { return Vec2{0.0, 0.0}; };
  p.exact = [](Vec2 q) { return std::sin(kPi * q.x) * std::sin(kPi * q.y); };
  p.source = [](Vec2 q) { return 2.0 * kPi * kPi * std::sin(kPi * q.x) * std::sin(kPi * q.y); };
  p.boundary = [](Vec2) { return 0.0; };
  p.hard_constraint = true;
  p.defaults = {200, 200, 1.0, 0.03, 10, 1.0, 1.0, 200, 1000, ""};
  return p;
}

inline Problem make_darcy_weak_only() {
  Problem p("darcy_weak_only", Domain::rectangle({0.0, 0.0}, {1.0, 1.0}));
  p.kappa = [](Vec2 q) { return 1.0 + q.x * q.x + q.y * q.y; };
  p.kappa_grad = [](Vec2 q) { return Vec2{2.0 * q.x, 2.0 * q.y}; };
  p.exact = [](Vec2 q) {
    return q.x <= 0.5 ? q.x * q.x : -q.x * q.x + 2.0 * q.x - 0.5;
  };
  // -div(kappa grad u) for the piecewise parabolic solution above.
  p.source = [](Vec2 q) {
    return q.x <= 0.5 ? -(6.0 * q.x * q.x + 2.0 * q.y * q.y + 2.0)
                      : 6.0 * q.x * q.x + 2.0 * q.y * q.y - 4.0 * q.x + 2.0;
  };
  p.boundary = p.exact;
  p.x_splits = {0.5};
  p.defaults = {200, 300, 1.0, 0.05, 10, 1.0, 1.0, 200, 1000, ""};
  return p;
}

inline Problem make_darcy_multiscale() {
  Problem p("darcy_multiscale", Domain::rectangle({0.0, 0.0}, {1.0, 1.0}));
  const double eps = 0.125;
  const double w = 2.0 * kPi / eps;
  p.kappa = [w](Vec2 q) { return 2.0 + std::sin(w * q.x) * std::cos(w * q.y); };
  p.kappa_grad = [w](Vec2 q) {
    return Vec2{w * std::cos(w * q.x) * std::cos(w * q.y),
                -w * std::sin(w * q.x) * std::sin(w * q.y)};
  };
  p.source = [](Vec2 q) { return std::sin(q.x) + std::cos(q.y); };
  p.boundary = [](Vec2) { return 0.0; };
  p.defaults = {2000, 2000, 1.0, 0.05, 10, 1.0, 1.0, 200, 2000, ""};
  return p;
}

inline Problem make_darcy_channel() {
  Problem p("darcy_channel", Domain::rectangle({0.0, 0.0}, {1.0, 1.0}));
  p.kappa = [](Vec2 q) { return (q.x >= 0.5 && q.x <= 0.7) ? 100.0 : 1.0; };
  p.kappa_grad = [](Vec2) { return Vec2{0.0, 0.0}; };  // piecewise constant
  p.source = [](Vec2 q) { return std::sin(q.x) + std::cos(q.y); };
  p.boundary = [](Vec2) { return 0.0; };
  p.x_splits = {0.5, 0.7};
  p.defaults = {600, 600, 1.0, 0.05, 10, 1.0, 1.0, 200, 1000, "channel3"};

  LayoutSpec strips;
  strips.layout.subdomains = {Domain::rectangle({0.0, 0.0}, {0.5, 1.0}),
                              Domain::rectangle({0.5, 0.0}, {0.7, 1.0}),
                              Domain::rectangle({0.7, 0.0}, {1.0, 1.0})};
  strips.layout.interfaces = {
      {{0.5, 0.0}, {0.5, 1.0}, {1.0, 0.0}, 0, 1, 1.0, 100.0},
      {{0.7, 0.0}, {0.7, 1.0}, {1.0, 0.0}, 1, 2, 100.0, 1.0},
  };
  strips.m_per = 200;
  strips.kappa = {[](Vec2) { return 1.0; }, [](Vec2) { return 100.0; },
                  [](Vec2) { return 1.0; }};
  p.layouts["channel3"] = std::move(strips);
  return p;
}

inline Problem make_poisson_sharp() {
  Problem p("poisson_sharp", Domain::rectangle({-1.0, -1.0}, {1.0, 1.0}));
  p.kappa = [](Vec2) { return 1.0; };
  p.kappa_grad = [](Vec2) { return Vec2{0.0, 0.0}; };
  p.exact = [](Vec2 q) {
    return (0.1 * std::sin(2.0 * kPi * q.x) + std::tanh(10.0 * q.x)) * std::sin(2.0 * kPi * q.y);
  };
  // f = -lap(u) = (4 pi^2 X - X'') sin(2 pi y) with X the x-factor above.
  p.source = [](Vec2 q) {
    const double t = std::tanh(10.0 * q.x);
    const double X = 0.1 * std::sin(2.0 * kPi * q.x) + t;
    const double Xpp = -0.4 * kPi * kPi * std::sin(2.0 * kPi * q.x) - 200.0 * t * (1.0 - t * t);
    return (4.0 * kPi * kPi * X - Xpp) * std::sin(2.0 * kPi * q.y);
  };
  p.boundary = p.exact;
  p.defaults = {1600, 1800, 5.0, 0.05, 10, 1.0, 1.0, 400, 2000, ""};

  LayoutSpec quads;
  quads.layout.subdomains = {Domain::rectangle({-1.0, -1.0}, {0.0, 0.0}),
                             Domain::rectangle({0.0, -1.0}, {1.0, 0.0}),
                             Domain::rectangle({-1.0, 0.0}, {0.0, 1.0}),
                             Domain::rectangle({0.0, 0.0}, {1.0, 1.0})};
  quads.layout.interfaces = {
      {{0.0, -1.0}, {0.0, 0.0}, {1.0, 0.0}, 0, 1},
      {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, 2, 3},
      {{-1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}, 0, 2},
      {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 1, 3},
  };
  quads.m_per = 400;
  p.layouts["quad4"] = std::move(quads);
  return p;
}

inline Problem make_lshape_singular() {
  const Box left{{-1.0, 0.0}, {0.0, 1.0}};
  const Box top{{0.0, 0.0}, {1.0, 1.0}};
  const Box bottom{{0.0, -1.0}, {1.0, 0.0}};
  Problem p("lshape_singular", Domain::rect_union({left, top, bottom}));
  p.kappa = [](Vec2) { return 1.0; };
  p.kappa_grad = [](Vec2) { return Vec2{0.0, 0.0}; };
  p.source = [](Vec2) { return 0.0; };
  p.exact = [](Vec2 q) { return lshape_exact_value(q); };
  p.boundary = p.exact;
  p.defaults = {1200, 1800, 1.0, 0.05, 10, 1.0, 1.0, 400, 2000, ""};

  // The angular branch must vanish on both legs of the re-entrant corner.
  for (int k = 1; k <= 8; ++k) {
    const double s = k / 8.0;
    if (std::abs(lshape_exact_value({-s, 0.0})) > 1e-14 ||
        std::abs(lshape_exact_value({0.0, -s})) > 1e-14 ||
        std::abs(lshape_exact_value({-0.0, -s})) > 1e-14)
      throw std::logic_error("wrong angular branch in the corner-singular solution");
  }

  LayoutSpec squares;
  squares.layout.subdomains = {Domain::rectangle(left.lo, left.hi),
                               Domain::rectangle(top.lo, top.hi),
                               Domain::rectangle(bottom.lo, bottom.hi)};
  squares.layout.interfaces = {
      {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, 0, 1},
      {{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, 1, 2},
  };
  squares.m_per = 400;
  p.layouts["lshape3"] = std::move(squares);

  // Three 0.2 x 0.2 squares hugging the corner plus the three L-shaped
  // remainders of the unit squares.
  LayoutSpec six;
  six.layout.subdomains = {
      Domain::rectangle({-0.2, 0.0}, {0.0, 0.2}),
      Domain::rectangle({0.0, 0.0}, {0.2, 0.2}),
      Domain::rectangle({0.0, -0.2}, {0.2, 0.0}),
      Domain::rect_union({Box{{-1.0, 0.0}, {-0.2, 1.0}}, Box{{-0.2, 0.2}, {0.0, 1.0}}}),
      Domain::rect_union({Box{{0.2, 0.0}, {1.0, 1.0}}, Box{{0.0, 0.2}, {0.2, 1.0}}}),
      Domain::rect_union({Box{{0.0, -1.0}, {1.0, -0.2}}, Box{{0.2, -0.2}, {1.0, 0.0}}}),
  };
  six.layout.interfaces = {
      {{0.0, 0.0}, {0.0, 0.2}, {1.0, 0.0}, 0, 1},      // between the two upper corner squares
      {{0.0, 0.0}, {0.2, 0.0}, {0.0, -1.0}, 1, 2},     // upper-right / lower-right corner squares
      {{-0.2, 0.2}, {0.0, 0.2}, {0.0, 1.0}, 0, 3},     // left corner square to its remainder
      {{-0.2, 0.0}, {-0.2, 0.2}, {-1.0, 0.0}, 0, 3},
      {{0.0, 0.2}, {0.2, 0.2}, {0.0, 1.0}, 1, 4},      // top corner square to its remainder
      {{0.2, 0.0}, {0.2, 0.2}, {1.0, 0.0}, 1, 4},
      {{0.0, -0.2}, {0.2, -0.2}, {0.0, -1.0}, 2, 5},   // bottom corner square to its remainder
      {{0.2, -0.2}, {0.2, 0.0}, {1.0, 0.0}, 2, 5},
      {{0.0, 0.2}, {0.0, 1.0}, {1.0, 0.0}, 3, 4},      // remainder/remainder seams
      {{0.2, 0.0}, {1.0, 0.0}, {0.0, -1.0}, 4, 5},
  };
  six.m_per = 200;
  p.layouts["lshape6"] = six;

  six.gamma_mix = {{1.0, 5.0, 10.0}, {1.0, 5.0, 10.0}, {1.0, 5.0, 10.0}, {1.0}, {1.0}, {1.0}};
  p.layouts["lshape6_mixed"] = std::move(six);
  return p;
}

inline const std::map<std::string, Problem>& catalog() {
  static const std::map<std::string, Problem> entries = [] {
    std::map<std::string, Problem> m;
    for (Problem p : {make_poisson_smooth(), make_darcy_weak_only(), make_darcy_multiscale(),
                      make_darcy_channel(), make_poisson_sharp(), make_lshape_singular()}) {
      for (auto& [name, spec] : p.layouts) spec.layout.validate(p.domain);
      m.emplace(p.id, std::move(p));
    }
    return m;
  }();
  return entries;
}

}  // namespace detail

inline const Problem& get_problem(const std::string& id) {
  const auto& m = detail::catalog();
  const auto it = m.find(id);
  if (it == m.end()) {
    std::string known;
    for (const auto& [name, entry] : m) known += (known.empty() ? "" : ", ") + name;
    throw std::invalid_argument("unknown problem '" + id + "' (known: " + known + ")");
  }
  return it->second;
}

inline std::vector<std::string> problem_ids() {
  std::vector<std::string> ids;
  for (const auto& [name, entry] : detail::catalog()) ids.push_back(name);
  return ids;
}

inline const LayoutSpec& get_layout(const Problem& p, const std::string& name) {
  const auto it = p.layouts.find(name);
  if (it == p.layouts.end())
    throw std::invalid_argument("problem " + p.id + " has no partition named '" + name + "'");
  return it->second;
}

// Vectorized field evaluation over point rows.
inline Eigen::VectorXd eval_field(const ScalarField& f, const Eigen::MatrixX2d& pts) {
  Eigen::VectorXd out(pts.rows());
  for (int i = 0; i < pts.rows(); ++i) out[i] = f({pts(i, 0), pts(i, 1)});
  return out;
}

inline Eigen::VectorXd eval_exact(const Problem& p, const Eigen::MatrixX2d& pts) {
  if (!p.has_exact())
    throw std::logic_error("problem " + p.id + " is referenced by an external grid only");
  return eval_field(p.exact, pts);
}

}  // namespace wtn
