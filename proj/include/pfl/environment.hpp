#pragma once

// Multi-agent slider-labeling environment: one agent per label, all agents
// act synchronously, rewards penalize label-label overlap.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pfl/error.hpp"
#include "pfl/geometry.hpp"
#include "pfl/instance.hpp"

namespace pfl {

enum class PlacementMode {
  Absolute,  // the action selects the angle on the slider circumference
  Delta,     // the action rotates the current angle
};

enum class OverlapNorm {
  OwnArea,   // divide by the agent's own label area
  Constant,  // divide by EnvConfig::overlap_constant
};

struct EnvConfig {
  Dims drawing{600.0, 400.0};
  int min_agents = 1;
  int max_agents = 2;
  double label_w_min = 0.10;  // fraction of drawing width
  double label_w_max = 0.15;
  double label_h = 0.05;      // fraction of drawing height
  int horizon = 100;
  double reward_weight = 0.5;  // w in total = (1-w) global + w local
  OverlapNorm overlap_norm = OverlapNorm::OwnArea;
  double overlap_constant = 1.0;  // px^2, used with OverlapNorm::Constant
  PlacementMode placement = PlacementMode::Absolute;
  double delta_scale = 1.0;  // Delta mode: rotation = delta_scale * pi * action
  double penetration_penalty = 0.0;
  // Multi-agent training instances are resampled until every label overlaps
  // another one at reset.
  bool require_initial_conflict = false;
  // Inference stops at the first conflict-free state; training runs to the
  // horizon.
  bool stop_when_conflict_free = true;
};

inline void validate(const EnvConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(c.drawing.w > 0.0 && c.drawing.h > 0.0)) fail("drawing size must be positive");
  if (c.min_agents < 1 || c.max_agents < c.min_agents) fail("invalid agent count range");
  if (!(c.label_w_min > 0.0 && c.label_w_min <= c.label_w_max && c.label_w_max <= 1.0))
    fail("invalid label width range");
  if (!(c.label_h > 0.0 && c.label_h <= 1.0)) fail("invalid label height fraction");
  if (c.horizon < 1) fail("horizon must be positive");
  if (!(c.reward_weight >= 0.0 && c.reward_weight <= 1.0)) fail("reward weight must lie in [0,1]");
  if (c.overlap_norm == OverlapNorm::Constant && !(c.overlap_constant > 0.0))
    fail("overlap constant must be positive");
}

struct EnvState {
  std::shared_ptr<const Instance> instance;
  std::vector<Point> origins;
  std::vector<double> angles;  // current slider angle of each origin
  std::vector<Point> previous_origins;
  std::vector<double> travelled;  // cumulative displacement in px
  int step = 0;
  int horizon = 100;
  bool done = false;

  std::size_t size() const { return origins.size(); }
  Rect label(std::size_t i) const { return make_rect(origins[i], instance->anchors[i].label); }
  std::vector<Rect> labels() const {
    std::vector<Rect> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = label(i);
    return out;
  }
  std::vector<Point> anchor_points() const {
    std::vector<Point> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = instance->anchors[i].point;
    return out;
  }
};

struct RewardTriple {
  std::vector<double> local;
  double global = 0.0;
  std::vector<double> total;
};

struct StepResult {
  RewardTriple reward;
  bool done = false;
};

// Per-agent conflict bookkeeping shared by rewards and observations.
struct ConflictInfo {
  std::vector<double> overlap_area;      // px^2, summed over other labels
  std::vector<int> overlap_count;        // labels overlapping this one
  std::vector<double> penetration;       // px, summed over anchors inside this label
  std::vector<int> penetration_count;    // anchors strictly inside this label
  bool conflict_free = true;
};

inline ConflictInfo analyze_conflicts(const EnvState& s) {
  const std::size_t n = s.size();
  ConflictInfo info;
  info.overlap_area.assign(n, 0.0);
  info.overlap_count.assign(n, 0);
  info.penetration.assign(n, 0.0);
  info.penetration_count.assign(n, 0);
  const std::vector<Rect> rects = s.labels();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = overlap_area(rects[i], rects[j]);
      if (a > 0.0) {
        info.overlap_area[i] += a;
        info.overlap_area[j] += a;
        ++info.overlap_count[i];
        ++info.overlap_count[j];
        info.conflict_free = false;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double p = penetration_distance(rects[i], s.instance->anchors[j].point);
      if (p > 0.0) {
        // The own anchor sits on the boundary; only rounding can put it inside.
        info.penetration[i] += p;
        if (j != i) {
          ++info.penetration_count[i];
          info.conflict_free = false;
        }
      }
    }
  }
  return info;
}

inline double overlap_normalizer(const EnvState& s, std::size_t agent, const EnvConfig& config) {
  if (config.overlap_norm == OverlapNorm::Constant) return config.overlap_constant;
  const Dims d = s.instance->anchors[agent].label;
  return d.w * d.h;
}

inline double overlap_value(const EnvState& s, std::size_t agent,
                            const EnvConfig& config = EnvConfig{}) {
  if (agent >= s.size()) throw Error(ErrorCode::Arity, "agent index out of range");
  const Rect me = s.label(agent);
  double sum = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j != agent) sum += overlap_area(me, s.label(j));
  }
  return sum / overlap_normalizer(s, agent, config);
}

// No label-label overlap and no label containing a foreign anchor.
inline bool is_conflict_free(const EnvState& s) {
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Rect a = s.label(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (j > i && overlap_area(a, s.label(j)) > 0.0) return false;
      if (strictly_inside(a, s.instance->anchors[j].point)) return false;
    }
  }
  return true;
}

inline EnvState reset(std::shared_ptr<const Instance> instance, int horizon) {
  validate(*instance);
  if (horizon < 1) throw Error(ErrorCode::InvalidConfig, "horizon must be positive");
  EnvState s;
  const std::size_t n = instance->size();
  s.origins.resize(n);
  s.angles.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Anchor& a = instance->anchors[i];
    s.origins[i] = initial_origin(a.point, a.label, instance->drawing);
    s.angles[i] = angle_of_origin(a.point, a.label, s.origins[i]);
  }
  s.previous_origins = s.origins;
  s.travelled.assign(n, 0.0);
  s.horizon = horizon;
  s.instance = std::move(instance);
  return s;
}

inline EnvState reset(const Instance& instance, int horizon) {
  return reset(std::make_shared<const Instance>(instance), horizon);
}

// Maps a normalized action in [-1, 1] to an angle in [0, 2pi].
inline double action_to_angle(double action) { return std::numbers::pi * (action + 1.0); }

inline RewardTriple compute_rewards(const EnvState& s, const EnvConfig& config) {
  const std::size_t n = s.size();
  RewardTriple r;
  r.local.assign(n, 0.0);
  r.total.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    r.local[i] = -overlap_value(s, i, config);
    if (config.penetration_penalty > 0.0) {
      const Rect me = s.label(i);
      double pen = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) pen += penetration_distance(me, s.instance->anchors[j].point);
      }
      r.local[i] -= config.penetration_penalty * pen / me.diagonal();
    }
  }
  for (double v : r.local) r.global += v;
  const double w = config.reward_weight;
  for (std::size_t i = 0; i < n; ++i) r.total[i] = (1.0 - w) * r.global + w * r.local[i];
  return r;
}

// Applies every agent's action at once, then scores the new state.
inline StepResult step(EnvState& s, std::span<const double> actions, const EnvConfig& config) {
  if (actions.size() != s.size()) {
    throw Error(ErrorCode::Arity, "expected " + std::to_string(s.size()) + " actions, got " +
                                      std::to_string(actions.size()));
  }
  if (s.done || s.step >= s.horizon) {
    throw Error(ErrorCode::EpisodeFinished, "episode already finished");
  }
  s.previous_origins = s.origins;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = clip(actions[i], -1.0, 1.0);
    const double phi = config.placement == PlacementMode::Absolute
                           ? action_to_angle(a)
                           : s.angles[i] + config.delta_scale * std::numbers::pi * a;
    const Anchor& anchor = s.instance->anchors[i];
    s.origins[i] = slider_origin(anchor.point, anchor.label, phi);
    s.angles[i] = wrap_angle(phi);
    s.travelled[i] += distance(s.origins[i], s.previous_origins[i]);
  }
  ++s.step;
  StepResult out;
  out.reward = compute_rewards(s, config);
  const bool solved = config.stop_when_conflict_free && is_conflict_free(s);
  s.done = s.step >= s.horizon || solved;
  out.done = s.done;
  return out;
}

// Random training instance; deterministic for a given generator state.
template <class Rng>
Instance generate_instance(const EnvConfig& config, Rng& rng) {
  validate(config);
  std::uniform_int_distribution<int> count_dist(config.min_agents, config.max_agents);
  std::uniform_real_distribution<double> ux(0.0, config.drawing.w);
  std::uniform_real_distribution<double> uy(0.0, config.drawing.h);
  std::uniform_real_distribution<double> uw(config.label_w_min * config.drawing.w,
                                            config.label_w_max * config.drawing.w);
  const double label_h = config.label_h * config.drawing.h;

  const int n = count_dist(rng);
  Instance inst;
  inst.drawing = Rect{{0.0, 0.0}, config.drawing.w, config.drawing.h};
  for (int attempt = 0;; ++attempt) {
    inst.anchors.clear();
    for (int i = 0; i < n; ++i) {
      Anchor a;
      a.point.x = ux(rng);
      a.point.y = uy(rng);
      a.label = {uw(rng), label_h};
      inst.anchors.push_back(a);
    }
    if (!config.require_initial_conflict || n < 2) break;
    const EnvState s0 = reset(inst, 1);
    const ConflictInfo info = analyze_conflicts(s0);
    bool all_overlap = true;
    for (int c : info.overlap_count) all_overlap = all_overlap && c > 0;
    if (all_overlap) break;
    if (attempt > 100000) {
      throw Error(ErrorCode::InvalidConfig, "could not sample a conflicting instance");
    }
  }
  return inst;
}

}  // namespace pfl
