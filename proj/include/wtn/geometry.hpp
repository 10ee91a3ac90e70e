#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wtn/rng.hpp"

namespace wtn {

inline constexpr double kGeomEps = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

// Axis-aligned box. All domains in this library are finite unions of these.
struct Box {
  Vec2 lo;
  Vec2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)}; }

  bool contains(const Vec2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }

  std::optional<Box> intersect(const Box& o) const {
    Box r{{std::max(lo.x, o.lo.x), std::max(lo.y, o.lo.y)},
          {std::min(hi.x, o.hi.x), std::min(hi.y, o.hi.y)}};
    if (r.width() <= 0.0 || r.height() <= 0.0) return std::nullopt;
    return r;
  }
};

// Maximal straight piece of a domain boundary. Edges run in the positive axis
// direction (a.x < b.x or a.y < b.y) and carry the outward unit normal.
struct Edge {
  Vec2 a;
  Vec2 b;
  Vec2 normal;
  int id = 0;

  double length() const { return (b - a).norm(); }
  Vec2 point_at(double t) const { return a + (b - a) * t; }
  bool vertical() const { return normal.y == 0.0; }
};

namespace detail {

// One-dimensional interval bookkeeping used to carve union boundaries.
struct Interval {
  double lo, hi;
};

inline void subtract_interval(std::vector<Interval>& pieces, double lo, double hi) {
  std::vector<Interval> out;
  out.reserve(pieces.size() + 1);
  for (const Interval& p : pieces) {
    if (hi <= p.lo + kGeomEps || lo >= p.hi - kGeomEps) {
      out.push_back(p);
      continue;
    }
    if (lo > p.lo + kGeomEps) out.push_back({p.lo, lo});
    if (hi < p.hi - kGeomEps) out.push_back({hi, p.hi});
  }
  pieces = std::move(out);
}

struct RawSide {
  bool vertical;    // side lies on a line x = c (true) or y = c (false)
  double c;         // line coordinate
  double t0, t1;    // span along the line
  double nsign;     // outward normal sign along the off-axis direction
};

// Sort group: bottom-facing, right-facing, top-facing, left-facing. Keeps the
// conventional bottom/right/top/left order for a plain rectangle.
inline int side_rank(const RawSide& s) {
  if (!s.vertical && s.nsign < 0) return 0;
  if (s.vertical && s.nsign > 0) return 1;
  if (!s.vertical && s.nsign > 0) return 2;
  return 3;
}

inline std::vector<Edge> merge_sides(std::vector<RawSide> sides) {
  std::sort(sides.begin(), sides.end(), [](const RawSide& a, const RawSide& b) {
    if (side_rank(a) != side_rank(b)) return side_rank(a) < side_rank(b);
    if (std::abs(a.c - b.c) > kGeomEps) return a.c < b.c;
    return a.t0 < b.t0;
  });
  std::vector<Edge> edges;
  for (const RawSide& s : sides) {
    bool merged = false;
    if (!edges.empty()) {
      Edge& last = edges.back();
      RawSide ls{last.vertical(), last.vertical() ? last.a.x : last.a.y,
                 last.vertical() ? last.a.y : last.a.x,
                 last.vertical() ? last.b.y : last.b.x,
                 last.vertical() ? last.normal.x : last.normal.y};
      if (side_rank(ls) == side_rank(s) && std::abs(ls.c - s.c) <= kGeomEps &&
          s.t0 <= ls.t1 + kGeomEps) {
        const double t1 = std::max(ls.t1, s.t1);
        if (s.vertical) {
          last.b = {s.c, t1};
        } else {
          last.b = {t1, s.c};
        }
        merged = true;
      }
    }
    if (!merged) {
      Edge e;
      if (s.vertical) {
        e.a = {s.c, s.t0};
        e.b = {s.c, s.t1};
        e.normal = {s.nsign, 0.0};
      } else {
        e.a = {s.t0, s.c};
        e.b = {s.t1, s.c};
        e.normal = {0.0, s.nsign};
      }
      edges.push_back(e);
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i].id = static_cast<int>(i);
  return edges;
}

// Sides of `rect` minus the parts covered by the closures of `blockers` that
// sit flush against the side from outside.
inline std::vector<RawSide> exposed_sides(const Box& rect, const std::vector<Box>& blockers) {
  std::vector<RawSide> out;
  struct Spec {
    bool vertical;
    double c;
    double t0, t1;
    double nsign;
  };
  const Spec specs[4] = {
      {false, rect.lo.y, rect.lo.x, rect.hi.x, -1.0},  // bottom
      {true, rect.hi.x, rect.lo.y, rect.hi.y, +1.0},   // right
      {false, rect.hi.y, rect.lo.x, rect.hi.x, +1.0},  // top
      {true, rect.lo.x, rect.lo.y, rect.hi.y, -1.0},   // left
  };
  for (const Spec& sp : specs) {
    std::vector<Interval> pieces{{sp.t0, sp.t1}};
    for (const Box& q : blockers) {
      // q blocks this side only if it touches the side line from the outward side.
      const double qc = sp.vertical ? (sp.nsign > 0 ? q.lo.x : q.hi.x)
                                    : (sp.nsign > 0 ? q.lo.y : q.hi.y);
      if (std::abs(qc - sp.c) > kGeomEps) continue;
      const double qlo = sp.vertical ? q.lo.y : q.lo.x;
      const double qhi = sp.vertical ? q.hi.y : q.hi.x;
      subtract_interval(pieces, qlo, qhi);
    }
    for (const Interval& iv : pieces) {
      if (iv.hi - iv.lo > kGeomEps) out.push_back({sp.vertical, sp.c, iv.lo, iv.hi, sp.nsign});
    }
  }
  return out;
}

}  // namespace detail

// Finite union of interior-disjoint axis-aligned rectangles. Covers every
// computational domain used here: unit squares, the L-shape, partition
// subdomains with rectangular carve-outs.
class Domain {
public:
  static Domain rectangle(Vec2 lo, Vec2 hi) { return Domain({Box{lo, hi}}); }

  static Domain rect_union(std::vector<Box> parts) { return Domain(std::move(parts)); }

  const std::vector<Box>& parts() const { return parts_; }

  bool contains(const Vec2& p) const {
    for (const Box& b : parts_)
      if (b.contains(p)) return true;
    return false;
  }

  double area() const {
    double a = 0.0;
    for (const Box& b : parts_) a += b.area();
    return a;
  }

  Box bounding_box() const {
    Box bb = parts_.front();
    for (const Box& b : parts_) {
      bb.lo.x = std::min(bb.lo.x, b.lo.x);
      bb.lo.y = std::min(bb.lo.y, b.lo.y);
      bb.hi.x = std::max(bb.hi.x, b.hi.x);
      bb.hi.y = std::max(bb.hi.y, b.hi.y);
    }
    return bb;
  }

  Vec2 centroid() const {
    double a = 0.0;
    Vec2 c{0.0, 0.0};
    for (const Box& b : parts_) {
      a += b.area();
      c = c + b.center() * b.area();
    }
    return c * (1.0 / a);
  }

  const std::vector<Edge>& edges() const { return edges_; }

  double boundary_length() const {
    double len = 0.0;
    for (const Edge& e : edges_) len += e.length();
    return len;
  }

private:
  explicit Domain(std::vector<Box> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw std::invalid_argument("domain needs at least one rectangle");
    for (const Box& b : parts_) {
      if (b.width() <= 0.0 || b.height() <= 0.0)
        throw std::invalid_argument("domain rectangle has non-positive extent");
    }
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      for (std::size_t j = i + 1; j < parts_.size(); ++j) {
        auto ov = parts_[i].intersect(parts_[j]);
        if (ov && ov->width() > kGeomEps && ov->height() > kGeomEps)
          throw std::invalid_argument("domain rectangles overlap");
      }
    }
    std::vector<detail::RawSide> sides;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      std::vector<Box> others;
      for (std::size_t j = 0; j < parts_.size(); ++j)
        if (j != i) others.push_back(parts_[j]);
      auto exposed = detail::exposed_sides(parts_[i], others);
      sides.insert(sides.end(), exposed.begin(), exposed.end());
    }
    edges_ = detail::merge_sides(std::move(sides));
  }

  std::vector<Box> parts_;
  std::vector<Edge> edges_;
};

// Intersects a box with the domain. The pieces are interior-disjoint, lie in
// both inputs, and their areas sum to |box intersect domain|.
inline std::vector<Box> clip_box(const Domain& domain, const Box& box) {
  std::vector<Box> pieces;
  for (const Box& part : domain.parts()) {
    if (auto p = part.intersect(box)) pieces.push_back(*p);
  }
  return pieces;
}

// Restriction of an edge to a box; empty if the overlap has zero length.
inline std::optional<Edge> clip_segment(const Edge& e, const Box& box) {
  Edge r = e;
  if (e.vertical()) {
    const double c = e.a.x;
    if (c < box.lo.x || c > box.hi.x) return std::nullopt;
    const double t0 = std::max(e.a.y, box.lo.y);
    const double t1 = std::min(e.b.y, box.hi.y);
    if (t1 - t0 <= 0.0) return std::nullopt;
    r.a = {c, t0};
    r.b = {c, t1};
  } else {
    const double c = e.a.y;
    if (c < box.lo.y || c > box.hi.y) return std::nullopt;
    const double t0 = std::max(e.a.x, box.lo.x);
    const double t1 = std::min(e.b.x, box.hi.x);
    if (t1 - t0 <= 0.0) return std::nullopt;
    r.a = {t0, c};
    r.b = {t1, c};
  }
  return r;
}

struct BoundarySample {
  Vec2 p;
  Vec2 normal;
  int edge_id = 0;
};

enum class BoundaryMode { grid, random };

// n_per_edge samples on every boundary edge. Grid mode spaces them uniformly
// including both endpoints (deterministic); random mode draws i.i.d. uniform
// positions along each edge.
inline std::vector<BoundarySample> sample_boundary(const Domain& domain, int n_per_edge,
                                                   BoundaryMode mode, Rng* rng = nullptr) {
  if (n_per_edge < 1) throw std::invalid_argument("need at least one boundary sample per edge");
  if (mode == BoundaryMode::random && rng == nullptr)
    throw std::invalid_argument("random boundary sampling needs an rng");
  std::vector<BoundarySample> out;
  out.reserve(domain.edges().size() * static_cast<std::size_t>(n_per_edge));
  for (const Edge& e : domain.edges()) {
    for (int k = 0; k < n_per_edge; ++k) {
      double t;
      if (mode == BoundaryMode::grid) {
        t = (n_per_edge == 1) ? 0.5 : static_cast<double>(k) / (n_per_edge - 1);
      } else {
        t = rng->uniform();
      }
      out.push_back({e.point_at(t), e.normal, e.id});
    }
  }
  return out;
}

// Axis-aligned segment shared by two subdomains. The normal is the unit vector
// pointing from the `left` subdomain into the `right` one. kappa_left/right
// hold the one-sided diffusion values used by flux-continuity rows.
struct Interface {
  Vec2 a;
  Vec2 b;
  Vec2 normal;
  int left = 0;
  int right = 0;
  double kappa_left = 1.0;
  double kappa_right = 1.0;

  double length() const { return (b - a).norm(); }
  Vec2 point_at(double t) const { return a + (b - a) * t; }
};

inline std::vector<Vec2> sample_interface(const Interface& iface, int n) {
  if (n < 2) throw std::invalid_argument("need at least two interface samples");
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) pts.push_back(iface.point_at(static_cast<double>(k) / (n - 1)));
  return pts;
}

// Non-overlapping cover of the domain by subdomains plus the interior
// interfaces gluing them together.
struct PartitionLayout {
  std::vector<Domain> subdomains;
  std::vector<Interface> interfaces;

  int containing_count(const Vec2& p) const {
    int c = 0;
    for (const Domain& d : subdomains)
      if (d.contains(p)) ++c;
    return c;
  }

  // Number of *other* subdomain closures meeting subdomain l at p.
  int count_neighbors(int l, const Vec2& p) const {
    if (!subdomains.at(static_cast<std::size_t>(l)).contains(p))
      throw std::invalid_argument("point is not in the closure of the subdomain");
    return containing_count(p) - 1;
  }

  // Partition-of-unity weight: 1 inside subdomain l, 1/(1+neighbors) on its
  // boundary, 0 elsewhere. Summing over l gives exactly 1 at every point of
  // the domain closure.
  double chi(int l, const Vec2& p) const {
    if (!subdomains.at(static_cast<std::size_t>(l)).contains(p)) return 0.0;
    return 1.0 / static_cast<double>(containing_count(p));
  }

  void validate(const Domain& domain) const {
    if (subdomains.empty()) throw std::invalid_argument("layout has no subdomains");
    double a = 0.0;
    for (const Domain& d : subdomains) a += d.area();
    if (std::abs(a - domain.area()) > 1e-9 * domain.area())
      throw std::invalid_argument("subdomain areas do not tile the domain");
    for (const Interface& f : interfaces) {
      const bool vertical = f.a.x == f.b.x;
      const bool horizontal = f.a.y == f.b.y;
      if (vertical == horizontal) throw std::invalid_argument("interface is not axis-aligned");
      if (f.length() <= 0.0) throw std::invalid_argument("interface has zero length");
      const double nn = f.normal.norm();
      if (std::abs(nn - 1.0) > 1e-12 || (f.normal.x != 0.0 && f.normal.y != 0.0))
        throw std::invalid_argument("interface normal must be a unit axis vector");
      const Vec2 mid = f.point_at(0.5);
      const Vec2 just_left = mid - f.normal * kGeomEps * 1e3;
      const Vec2 just_right = mid + f.normal * kGeomEps * 1e3;
      if (!subdomains.at(static_cast<std::size_t>(f.left)).contains(just_left) ||
          !subdomains.at(static_cast<std::size_t>(f.right)).contains(just_right))
        throw std::invalid_argument("interface sides do not match its subdomains");
    }
  }
};

// Portions of subdomain l's boundary that lie on the outer domain boundary,
// i.e. its edges minus everything flush against another subdomain.
inline std::vector<Edge> exterior_edges(const PartitionLayout& layout, int l) {
  const Domain& sub = layout.subdomains.at(static_cast<std::size_t>(l));
  std::vector<Box> blockers;
  for (std::size_t q = 0; q < layout.subdomains.size(); ++q) {
    if (static_cast<int>(q) == l) continue;
    const auto& ps = layout.subdomains[q].parts();
    blockers.insert(blockers.end(), ps.begin(), ps.end());
  }
  if (blockers.empty()) return sub.edges();
  std::vector<detail::RawSide> sides;
  for (const Edge& e : sub.edges()) {
    detail::RawSide s{e.vertical(), e.vertical() ? e.a.x : e.a.y,
                      e.vertical() ? e.a.y : e.a.x, e.vertical() ? e.b.y : e.b.x,
                      e.vertical() ? e.normal.x : e.normal.y};
    std::vector<detail::Interval> pieces{{s.t0, s.t1}};
    for (const Box& q : blockers) {
      const double qc = s.vertical ? (s.nsign > 0 ? q.lo.x : q.hi.x)
                                   : (s.nsign > 0 ? q.lo.y : q.hi.y);
      if (std::abs(qc - s.c) > kGeomEps) continue;
      detail::subtract_interval(pieces, s.vertical ? q.lo.y : q.lo.x,
                                s.vertical ? q.hi.y : q.hi.x);
    }
    for (const detail::Interval& iv : pieces) {
      if (iv.hi - iv.lo > kGeomEps)
        sides.push_back({s.vertical, s.c, iv.lo, iv.hi, s.nsign});
    }
  }
  return detail::merge_sides(std::move(sides));
}

}  // namespace wtn
