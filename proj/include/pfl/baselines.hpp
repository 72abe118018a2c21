#pragma once

// Greedy particle-style labeling: each anchor takes the first admissible
// candidate from the fixed 4/8-position models, then the slider model and,
// in AD mode, spiral-sampled distant positions with a leader line.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "pfl/error.hpp"
#include "pfl/geometry.hpp"
#include "pfl/inference.hpp"
#include "pfl/instance.hpp"

namespace pfl {

enum class CandidateKind { Fixed4, Fixed8, Slider, Distant };

struct Candidate {
  Point origin;
  int rank = 1;
  CandidateKind kind = CandidateKind::Fixed4;
  std::optional<Leader> leader;
};

enum class PblMode { A, AD };

struct BaselineConfig {
  int slider_samples = 64;
  double spiral_step = std::numbers::pi / 8.0;
  double spiral_radius_factor = 4.0;  // max radius = factor * max(w, h)
  // Reject candidates covering anchors that come later in the input order.
  // Off, only anchors processed so far are avoided and placements depend on
  // the prefix alone.
  bool avoid_future_anchors = true;
};

inline void validate(const BaselineConfig& c) {
  if (c.slider_samples < 8) throw Error(ErrorCode::InvalidConfig, "slider model needs at least 8 samples");
  if (!(c.spiral_step > 0.0)) throw Error(ErrorCode::InvalidConfig, "spiral step must be positive");
  if (!(c.spiral_radius_factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "spiral radius must be positive");
}

// Ranks 1-4: upper-right, upper-left, lower-right, lower-left. Ranks 5-8:
// right, top, left, bottom (centered).
inline std::vector<Candidate> fixed_candidates(Point anchor, Dims dims, int mode) {
  if (mode != 4 && mode != 8) throw Error(ErrorCode::InvalidConfig, "fixed model must be 4 or 8");
  if (!(dims.w > 0.0 && dims.h > 0.0)) throw Error(ErrorCode::InvalidInstance, "label size must be positive");
  const double w = dims.w;
  const double h = dims.h;
  const Point a = anchor;
  std::vector<Candidate> out = {
      {{a.x, a.y}, 1, CandidateKind::Fixed4, {}},
      {{a.x - w, a.y}, 2, CandidateKind::Fixed4, {}},
      {{a.x, a.y - h}, 3, CandidateKind::Fixed4, {}},
      {{a.x - w, a.y - h}, 4, CandidateKind::Fixed4, {}},
  };
  if (mode == 8) {
    out.push_back({{a.x, a.y - h / 2}, 5, CandidateKind::Fixed8, {}});
    out.push_back({{a.x - w / 2, a.y}, 6, CandidateKind::Fixed8, {}});
    out.push_back({{a.x - w, a.y - h / 2}, 7, CandidateKind::Fixed8, {}});
    out.push_back({{a.x - w / 2, a.y - h}, 8, CandidateKind::Fixed8, {}});
  }
  return out;
}

// `n` equally spaced slider angles starting at the rank-1 corner, visited in
// order of angular distance from it (counter-clockwise first on ties).
inline std::vector<Candidate> slider_candidates(Point anchor, Dims dims, int n) {
  if (n < 8) throw Error(ErrorCode::InvalidConfig, "slider model needs at least 8 samples");
  const double start = std::atan2(dims.h, dims.w);
  std::vector<Candidate> out;
  out.reserve(std::size_t(n));
  auto push = [&](int j) {
    const double phi = start + kTwoPi * double(j) / double(n);
    out.push_back({slider_origin(anchor, dims, phi), int(out.size()) + 1, CandidateKind::Slider, {}});
  };
  push(0);
  for (int d = 1; 2 * d <= n; ++d) {
    push(d);
    if (n - d != d) push(n - d);
  }
  return out;
}

// Closest point of the rectangle boundary to p (p outside or on it).
inline Point nearest_boundary_point(const Rect& r, Point p) {
  if (!strictly_inside(r, p)) return {clip(p.x, r.x0(), r.x1()), clip(p.y, r.y0(), r.y1())};
  return project_to_boundary(r, p);
}

// Label centers on the spiral r = c * theta with c = h / (2 pi), sampled at
// theta = k * step for k = 1 .. floor(theta_max / step).
inline std::vector<Candidate> spiral_candidates(Point anchor, Dims dims, double max_radius,
                                                double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "spiral step must be positive");
  const double c = dims.h / kTwoPi;
  const double theta_max = max_radius / c;
  const auto count = static_cast<long>(std::floor(theta_max / step));
  std::vector<Candidate> out;
  out.reserve(std::size_t(std::max(count, 0L)));
  for (long k = 1; k <= count; ++k) {
    const double theta = double(k) * step;
    const double r = c * theta;
    const Point center{anchor.x + r * std::cos(theta), anchor.y + r * std::sin(theta)};
    const Point origin{center.x - dims.w / 2, center.y - dims.h / 2};
    const Rect rect = make_rect(origin, dims);
    out.push_back({origin, int(k), CandidateKind::Distant,
                   Leader{anchor, nearest_boundary_point(rect, anchor)}});
  }
  return out;
}

inline bool contains(const Rect& outer, const Rect& inner) {
  return inner.x0() >= outer.x0() && inner.x1() <= outer.x1() && inner.y0() >= outer.y0() &&
         inner.y1() <= outer.y1();
}

inline Layout pbl_solve(const Instance& inst, PblMode mode, const BaselineConfig& config = {}) {
  validate(inst);
  validate(config);
  const std::size_t n = inst.size();
  Layout layout;
  layout.labels.resize(n);
  std::vector<Rect> placed;
  placed.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Anchor& a = inst.anchors[i];
    const std::size_t anchor_limit = config.avoid_future_anchors ? n : i + 1;
    auto admissible = [&](const Candidate& c) {
      const Rect r = make_rect(c.origin, a.label);
      if (!contains(inst.drawing, r)) return false;
      for (const Rect& p : placed) {
        if (overlap_area(r, p) > 0.0) return false;
      }
      for (std::size_t j = 0; j < anchor_limit; ++j) {
        if (strictly_inside(r, inst.anchors[j].point)) return false;
      }
      return true;
    };

    std::optional<Candidate> chosen;
    for (const Candidate& c : fixed_candidates(a.point, a.label, 8)) {
      if (admissible(c)) {
        chosen = c;
        break;
      }
    }
    if (!chosen) {
      for (const Candidate& c : slider_candidates(a.point, a.label, config.slider_samples)) {
        if (admissible(c)) {
          chosen = c;
          break;
        }
      }
    }
    if (!chosen && mode == PblMode::AD) {
      const double radius = config.spiral_radius_factor * std::max(a.label.w, a.label.h);
      for (const Candidate& c : spiral_candidates(a.point, a.label, radius, config.spiral_step)) {
        if (admissible(c)) {
          chosen = c;
          break;
        }
      }
    }
    if (chosen) {
      layout.labels[i] = {true, chosen->origin, chosen->leader};
      placed.push_back(make_rect(chosen->origin, a.label));
    } else {
      layout.labels[i] = {false, a.point, std::nullopt};  // would-be rank-1 position
    }
  }
  return layout;
}

}  // namespace pfl
