#pragma once

// Planar primitives for the slider label model. Convention: y axis points up
// and a label's origin is its bottom-left corner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "pfl/error.hpp"

namespace pfl {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

struct Dims {
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

struct Rect {
  Point origin;
  double w = 0.0;
  double h = 0.0;

  double x0() const { return origin.x; }
  double y0() const { return origin.y; }
  double x1() const { return origin.x + w; }
  double y1() const { return origin.y + h; }
  double area() const { return w * h; }
  Point center() const { return {origin.x + 0.5 * w, origin.y + 0.5 * h}; }
  double diagonal() const { return std::hypot(w, h); }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline Rect make_rect(Point origin, Dims dims) { return {origin, dims.w, dims.h}; }

inline double clip(double x, double lo, double hi) {
  if (lo > hi) {
    throw Error(ErrorCode::InvalidBounds,
                "clip: lower bound " + std::to_string(lo) + " exceeds upper bound " +
                    std::to_string(hi));
  }
  return std::min(std::max(x, lo), hi);
}

// Wraps an angle into [0, 2pi).
inline double wrap_angle(double phi) {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// The locus of admissible label origins: every origin on this rectangle's
// circumference keeps the anchor on the label boundary.
inline Rect slider_rect(Point anchor, Dims dims) {
  return {{anchor.x - dims.w, anchor.y - dims.h}, dims.w, dims.h};
}

// Positive outside the rectangle, negative inside, zero on the boundary.
inline double signed_boundary_distance(const Rect& r, Point p) {
  const double dx = std::max(r.x0() - p.x, p.x - r.x1());
  const double dy = std::max(r.y0() - p.y, p.y - r.y1());
  if (dx > 0.0 || dy > 0.0) return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  return std::max(dx, dy);
}

// Point on the slider-rectangle circumference at angle phi (from +x,
// counterclockwise) around the slider-rectangle center. The first-quadrant
// formula is evaluated on the reflected angle and reflected back.
inline Point slider_origin(Point anchor, Dims dims, double phi) {
  const double a = wrap_angle(phi);
  const double half_pi = 0.5 * std::numbers::pi;
  double local = a;
  double sx = 1.0;
  double sy = 1.0;
  if (a < half_pi) {
    local = a;
  } else if (a < std::numbers::pi) {
    local = std::numbers::pi - a;
    sx = -1.0;
  } else if (a < 3.0 * half_pi) {
    local = a - std::numbers::pi;
    sx = -1.0;
    sy = -1.0;
  } else {
    local = kTwoPi - a;
    sy = -1.0;
  }

  double rx = 0.0;
  double ry = 0.0;
  if (local < std::atan2(dims.h, dims.w)) {
    rx = 0.5 * dims.w;
    ry = 0.5 * dims.w * std::tan(local);
  } else {
    rx = 0.5 * dims.h / std::tan(local);
    ry = 0.5 * dims.h;
  }
  const Point center{anchor.x - 0.5 * dims.w, anchor.y - 0.5 * dims.h};
  return {center.x + sx * rx, center.y + sy * ry};
}

inline constexpr double kCircumferenceTolerance = 1e-6;

// Inverse of slider_origin.
inline double angle_of_origin(Point anchor, Dims dims, Point origin) {
  const Rect sigma = slider_rect(anchor, dims);
  const double off = std::abs(signed_boundary_distance(sigma, origin));
  if (off > kCircumferenceTolerance) {
    throw Error(ErrorCode::OffManifold,
                "origin is " + std::to_string(off) + " px off the slider circumference");
  }
  const Point c = sigma.center();
  return wrap_angle(std::atan2(origin.y - c.y, origin.x - c.x));
}

// Nearest point of the rectangle circumference to p.
inline Point project_to_boundary(const Rect& r, Point p) {
  const Point q{std::clamp(p.x, r.x0(), r.x1()), std::clamp(p.y, r.y0(), r.y1())};
  if (q.x != p.x || q.y != p.y) return q;  // outside: the clamp is on the boundary
  const double d_left = p.x - r.x0();
  const double d_right = r.x1() - p.x;
  const double d_bottom = p.y - r.y0();
  const double d_top = r.y1() - p.y;
  const double m = std::min({d_left, d_right, d_bottom, d_top});
  if (m == d_left) return {r.x0(), p.y};
  if (m == d_right) return {r.x1(), p.y};
  if (m == d_bottom) return {p.x, r.y0()};
  return {p.x, r.y1()};
}

// Initial label origin: clipped into the drawing region, then projected onto
// the slider circumference when both clips leave it strictly inside.
inline Point initial_origin(Point anchor, Dims dims, const Rect& region) {
  if (dims.w > region.w || dims.h > region.h) {
    throw Error(ErrorCode::InfeasibleLabel, "label larger than the drawing region");
  }
  const Point o{clip(anchor.x, region.x0(), region.x1() - dims.w),
                clip(anchor.y, region.y0(), region.y1() - dims.h)};
  const Rect sigma = slider_rect(anchor, dims);
  if (signed_boundary_distance(sigma, o) < 0.0) return project_to_boundary(sigma, o);
  return o;
}

inline Point initial_origin(Point anchor, Dims dims, Dims drawing) {
  return initial_origin(anchor, dims, Rect{{0.0, 0.0}, drawing.w, drawing.h});
}

// Shared edges and corners have zero measure and do not count.
inline double overlap_area(const Rect& a, const Rect& b) {
  const double ix = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double iy = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return ix * iy;
}

// Distance from an anchor strictly inside the label to the nearest point of
// escape on the label boundary; zero otherwise.
inline double penetration_distance(const Rect& label, Point anchor) {
  const double d = std::min({anchor.x - label.x0(), label.x1() - anchor.x,
                             anchor.y - label.y0(), label.y1() - anchor.y});
  return d > 0.0 ? d : 0.0;
}

inline bool strictly_inside(const Rect& r, Point p) { return penetration_distance(r, p) > 0.0; }

// ---------------------------------------------------------------------------
// Ray sensing

enum class HitType { Bound = 0, Label = 1, Anchor = 2 };

struct RayReading {
  double distance = 0.0;  // normalized by the drawing diagonal, signed
  HitType hit_type = HitType::Bound;
  double count = 0.0;  // pierced labels / |L|
  double mass = 0.0;   // pierced label area / total label area
};

// What a ray can see. labels[self] is the casting label; anchors[self] is its
// own anchor, which sits on its boundary and is not an obstacle.
struct SceneView {
  Rect region;
  std::span<const Rect> labels;
  std::span<const Point> anchors;
  std::size_t self = 0;
  double anchor_radius = 2.0;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = kInf;
  double hi = -kInf;
  bool empty() const { return lo > hi; }
};

// Parameter interval where origin + t*dir lies in the closed (or open) box.
inline Interval slab(const Rect& r, Point origin, Point dir, bool open) {
  Interval out{-kInf, kInf};
  const double lo[2] = {r.x0(), r.y0()};
  const double hi[2] = {r.x1(), r.y1()};
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      const bool in = open ? (o[axis] > lo[axis] && o[axis] < hi[axis])
                           : (o[axis] >= lo[axis] && o[axis] <= hi[axis]);
      if (!in) return Interval{};
      continue;
    }
    double t1 = (lo[axis] - o[axis]) / d[axis];
    double t2 = (hi[axis] - o[axis]) / d[axis];
    if (t1 > t2) std::swap(t1, t2);
    out.lo = std::max(out.lo, t1);
    out.hi = std::min(out.hi, t2);
  }
  return out;
}

// Distance along a unit ray from inside a box to its boundary.
inline double exit_distance(const Rect& r, Point origin, Point dir) {
  double t = kInf;
  if (dir.x > 0.0) t = std::min(t, (r.x1() - origin.x) / dir.x);
  if (dir.x < 0.0) t = std::min(t, (r.x0() - origin.x) / dir.x);
  if (dir.y > 0.0) t = std::min(t, (r.y1() - origin.y) / dir.y);
  if (dir.y < 0.0) t = std::min(t, (r.y0() - origin.y) / dir.y);
  return t;
}

// First t >= 0 at which the ray touches the closed disc, or +inf.
inline double disc_contact(Point center, double radius, Point origin, Point dir) {
  const Point rel = origin - center;
  const double b = rel.x * dir.x + rel.y * dir.y;
  const double c = rel.x * rel.x + rel.y * rel.y - radius * radius;
  if (c <= 0.0) return 0.0;
  const double disc = b * b - c;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kInf;
}

}  // namespace detail

inline Point ray_direction(int direction_index, int n_rays) {
  const double theta = kTwoPi * static_cast<double>(direction_index) / static_cast<double>(n_rays);
  return {std::cos(theta), std::sin(theta)};
}

// Raw (pixel) result of one ray, before normalization.
struct RayContact {
  double t_hit = 0.0;    // along the ray from the label center
  double t_self = 0.0;   // where the casting label's own boundary is crossed
  HitType hit_type = HitType::Bound;
  int pierced = 0;
  double pierced_area = 0.0;
};

// Casts one ray from the center of labels[self]. The hit is the first point
// of contact with a foreign label, a foreign anchor disc, or the outside of
// the drawing region; the reading starts at the casting label's boundary, so
// contacts inside the casting label yield negative distances.
inline RayContact cast_ray_raw(const SceneView& scene, Point dir) {
  const Rect& self = scene.labels[scene.self];
  const Point c = self.center();
  RayContact out;
  out.t_self = detail::exit_distance(self, c, dir);

  const bool center_in_region = c.x >= scene.region.x0() && c.x <= scene.region.x1() &&
                                c.y >= scene.region.y0() && c.y <= scene.region.y1();
  const double t_bound = center_in_region ? detail::exit_distance(scene.region, c, dir) : 0.0;

  double best = t_bound;
  HitType best_type = HitType::Bound;
  for (std::size_t i = 0; i < scene.labels.size(); ++i) {
    if (i == scene.self) continue;
    const Rect& r = scene.labels[i];
    const detail::Interval closed = detail::slab(r, c, dir, false);
    if (!closed.empty() && closed.hi >= 0.0) {
      const double t = std::max(closed.lo, 0.0);
      if (t < best || (t == best && best_type == HitType::Bound)) {
        best = t;
        best_type = HitType::Label;
      }
    }
    const detail::Interval open = detail::slab(r, c, dir, true);
    if (!open.empty() && std::max(open.lo, 0.0) < std::min(open.hi, t_bound)) {
      ++out.pierced;
      out.pierced_area += r.area();
    }
  }
  for (std::size_t i = 0; i < scene.anchors.size(); ++i) {
    if (i == scene.self) continue;
    const double t = detail::disc_contact(scene.anchors[i], scene.anchor_radius, c, dir);
    if (t < best) {
      best = t;
      best_type = HitType::Anchor;
    }
  }
  out.t_hit = best;
  out.hit_type = best_type;
  return out;
}

inline RayReading cast_ray(const SceneView& scene, int direction_index, int n_rays) {
  const RayContact raw = cast_ray_raw(scene, ray_direction(direction_index, n_rays));
  double total_area = 0.0;
  for (const Rect& r : scene.labels) total_area += r.area();
  RayReading out;
  out.distance = (raw.t_hit - raw.t_self) / scene.region.diagonal();
  out.hit_type = raw.hit_type;
  out.count = static_cast<double>(raw.pierced) / static_cast<double>(scene.labels.size());
  out.mass = total_area > 0.0 ? raw.pierced_area / total_area : 0.0;
  return out;
}

}  // namespace pfl
