#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfl/error.hpp"
#include "pfl/geometry.hpp"

namespace pfl {

struct Anchor {
  Point point;
  Dims label;
  std::string text;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

// A labeling problem: a drawing region and the anchors to annotate.
struct Instance {
  Rect drawing{{0.0, 0.0}, 600.0, 400.0};
  std::vector<Anchor> anchors;

  std::size_t size() const { return anchors.size(); }

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline void validate(const Instance& inst) {
  if (!(inst.drawing.w > 0.0) || !(inst.drawing.h > 0.0)) {
    throw Error(ErrorCode::InvalidInstance, "drawing region must have positive size");
  }
  for (std::size_t i = 0; i < inst.anchors.size(); ++i) {
    const Anchor& a = inst.anchors[i];
    const Point p = a.point;
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < inst.drawing.x0() ||
        p.x > inst.drawing.x1() || p.y < inst.drawing.y0() || p.y > inst.drawing.y1()) {
      throw Error(ErrorCode::InvalidInstance,
                  "anchor " + std::to_string(i) + " lies outside the drawing region");
    }
    if (!(a.label.w > 0.0) || !(a.label.h > 0.0)) {
      throw Error(ErrorCode::InvalidInstance,
                  "anchor " + std::to_string(i) + " has a non-positive label size");
    }
    if (a.label.w > inst.drawing.w || a.label.h > inst.drawing.h) {
      throw Error(ErrorCode::InfeasibleLabel,
                  "label of anchor " + std::to_string(i) + " is larger than the drawing region");
    }
  }
}

// Ratio of total label area to drawing area.
inline double occupancy(const Instance& inst) {
  double area = 0.0;
  for (const Anchor& a : inst.anchors) area += a.label.w * a.label.h;
  return area / inst.drawing.area();
}

struct Leader {
  Point from;  // anchor
  Point to;    // closest point of the label boundary

  friend bool operator==(const Leader&, const Leader&) = default;
};

struct Placement {
  bool placed = false;
  Point origin;
  std::optional<Leader> leader;

  friend bool operator==(const Placement&, const Placement&) = default;
};

// Result of any labeling method, one entry per anchor in instance order.
struct Layout {
  std::vector<Placement> labels;

  std::size_t placed_count() const {
    std::size_t n = 0;
    for (const Placement& p : labels) n += p.placed ? 1 : 0;
    return n;
  }

  friend bool operator==(const Layout&, const Layout&) = default;
};

}  // namespace pfl
