#pragma once

// Fixed-shape per-agent observation: a ray-sensor mapping block followed by
// self-aware scalars. Entry ranges (documented, checked by the fuzz suite):
//   d   ray distance / drawing diagonal      [-0.5 * label diag / drawing diag, ~1.42]
//   t   hit type {bound, label, anchor} / 2  {0, 0.5, 1}
//   c   pierced labels / |L|                 [0, 1]
//   m   pierced label area / total area      [0, 1]
//   O   overlap area / own label area        [0, |L| - 1]
//   Oc  overlapping labels / |L|             [0, 1]
//   D   step displacement / drawing diagonal [0, 1], and
//       travelled distance / (diagonal * T)  [0, 1]
//   Ape penetration sum / drawing diagonal   [0, |L| * h / 2 / diag]
//   Apc penetrated anchors / |L|             [0, 1]
//   Apr anchor offset from label center / label size   [-0.5, 0.5]^2
//   Ad  anchor-origin distance / drawing diagonal      [0, 1]
//   T   step / horizon                       [0, 1]

#include <array>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "pfl/environment.hpp"
#include "pfl/error.hpp"
#include "pfl/geometry.hpp"

namespace pfl {

enum class MappingKind { Rays, OriginSize, None };
enum class DisplacementMode { Both, PerStep, Cumulative };
enum class AprMode { Offset, Distance };

struct ObsConfig {
  int n_rays = 32;
  MappingKind mapping = MappingKind::Rays;
  bool ch_distance = true;
  bool ch_type = false;
  bool ch_count = true;
  bool ch_mass = true;
  bool s_overlap = true;
  bool s_displacement = false;
  bool s_penetration = true;
  bool s_port = true;
  bool s_anchor_distance = true;
  bool s_time = true;
  bool conflict_counts = true;
  DisplacementMode displacement = DisplacementMode::Both;
  AprMode apr = AprMode::Offset;
  double anchor_radius = 2.0;

  int channels() const {
    if (mapping == MappingKind::OriginSize) return 4;
    if (mapping == MappingKind::None) return 0;
    return int(ch_distance) + int(ch_type) + int(ch_count) + int(ch_mass);
  }
  // Rows of the mapping block: one per ray, or a single row for origin/size.
  int mapping_rows() const {
    if (mapping == MappingKind::Rays) return n_rays;
    return mapping == MappingKind::OriginSize ? 1 : 0;
  }
  int mapping_size() const { return mapping_rows() * channels(); }
  int self_size() const {
    int n = 0;
    if (s_overlap) n += conflict_counts ? 2 : 1;
    if (s_displacement) n += displacement == DisplacementMode::Both ? 2 : 1;
    if (s_penetration) n += conflict_counts ? 2 : 1;
    if (s_port) n += apr == AprMode::Offset ? 2 : 1;
    if (s_anchor_distance) n += 1;
    if (s_time) n += 1;
    return n;
  }
  int size() const { return mapping_size() + self_size(); }

  friend bool operator==(const ObsConfig&, const ObsConfig&) = default;
};

inline void validate(const ObsConfig& c) {
  if (c.mapping == MappingKind::Rays) {
    if (c.n_rays < 1) throw Error(ErrorCode::InvalidConfig, "n_rays must be positive");
    if (c.channels() == 0) throw Error(ErrorCode::InvalidConfig, "no ray channel enabled");
  }
  if (c.size() == 0) throw Error(ErrorCode::InvalidConfig, "observation has no entries");
}

struct Observation {
  int rows = 0;
  int channels = 0;
  std::vector<double> mapping;  // rows x channels, row-major
  std::vector<double> self_aware;

  double at(int row, int channel) const { return mapping[std::size_t(row * channels + channel)]; }

  std::vector<double> flatten() const {
    std::vector<double> out(mapping);
    out.insert(out.end(), self_aware.begin(), self_aware.end());
    return out;
  }
};

inline SceneView scene_view(const EnvState& s, std::span<const Rect> labels,
                            std::span<const Point> anchors, std::size_t agent,
                            const ObsConfig& config) {
  return SceneView{s.instance->drawing, labels, anchors, agent, config.anchor_radius};
}

namespace detail {

inline std::vector<double> mapping_block(const EnvState& s, std::span<const Rect> labels,
                                         std::span<const Point> anchors, std::size_t agent,
                                         const ObsConfig& config) {
  std::vector<double> out;
  out.reserve(std::size_t(config.mapping_size()));
  const Rect& region = s.instance->drawing;
  if (config.mapping == MappingKind::OriginSize) {
    const Rect& me = labels[agent];
    out = {(me.x0() - region.x0()) / region.w, (me.y0() - region.y0()) / region.h,
           me.w / region.w, me.h / region.h};
    return out;
  }
  if (config.mapping == MappingKind::None) return out;

  const SceneView view = scene_view(s, labels, anchors, agent, config);
  for (int k = 0; k < config.n_rays; ++k) {
    const RayReading r = cast_ray(view, k, config.n_rays);
    if (config.ch_distance) out.push_back(r.distance);
    if (config.ch_type) out.push_back(0.5 * static_cast<double>(static_cast<int>(r.hit_type)));
    if (config.ch_count) out.push_back(r.count);
    if (config.ch_mass) out.push_back(r.mass);
  }
  return out;
}

inline std::vector<double> self_block(const EnvState& s, const ConflictInfo& info,
                                      std::size_t agent, const ObsConfig& config) {
  std::vector<double> out;
  out.reserve(std::size_t(config.self_size()));
  const double diag = s.instance->drawing.diagonal();
  const double n_labels = static_cast<double>(s.size());
  const Anchor& anchor = s.instance->anchors[agent];
  const Rect me = s.label(agent);

  if (config.s_overlap) {
    out.push_back(info.overlap_area[agent] / me.area());
    if (config.conflict_counts) out.push_back(info.overlap_count[agent] / n_labels);
  }
  if (config.s_displacement) {
    const double horizon = static_cast<double>(s.horizon);
    if (config.displacement != DisplacementMode::Cumulative) {
      out.push_back(distance(s.origins[agent], s.previous_origins[agent]) / diag);
    }
    if (config.displacement != DisplacementMode::PerStep) {
      out.push_back(s.travelled[agent] / (diag * horizon));
    }
  }
  if (config.s_penetration) {
    out.push_back(info.penetration[agent] / diag);
    if (config.conflict_counts) out.push_back(info.penetration_count[agent] / n_labels);
  }
  if (config.s_port) {
    const Point c = me.center();
    if (config.apr == AprMode::Offset) {
      out.push_back((anchor.point.x - c.x) / me.w);
      out.push_back((anchor.point.y - c.y) / me.h);
    } else {
      out.push_back(distance(anchor.point, c) / diag);
    }
  }
  if (config.s_anchor_distance) out.push_back(distance(anchor.point, s.origins[agent]) / diag);
  if (config.s_time) out.push_back(static_cast<double>(s.step) / static_cast<double>(s.horizon));
  return out;
}

}  // namespace detail

inline Observation mapping_vector(const EnvState& s, std::size_t agent, const ObsConfig& config) {
  const std::vector<Rect> labels = s.labels();
  const std::vector<Point> anchors = s.anchor_points();
  Observation o;
  o.rows = config.mapping_rows();
  o.channels = config.channels();
  o.mapping = detail::mapping_block(s, labels, anchors, agent, config);
  return o;
}

inline std::vector<double> self_aware_vector(const EnvState& s, std::size_t agent,
                                             const ObsConfig& config) {
  return detail::self_block(s, analyze_conflicts(s), agent, config);
}

inline Observation observe(const EnvState& s, std::size_t agent, const ObsConfig& config) {
  if (agent >= s.size()) throw Error(ErrorCode::Arity, "agent index out of range");
  Observation o = mapping_vector(s, agent, config);
  o.self_aware = self_aware_vector(s, agent, config);
  return o;
}

// Observations of every agent, sharing one conflict analysis.
inline std::vector<Observation> observe_all(const EnvState& s, const ObsConfig& config) {
  const std::vector<Rect> labels = s.labels();
  const std::vector<Point> anchors = s.anchor_points();
  const ConflictInfo info = analyze_conflicts(s);
  std::vector<Observation> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    Observation& o = out[i];
    o.rows = config.mapping_rows();
    o.channels = config.channels();
    o.mapping = detail::mapping_block(s, labels, anchors, i, config);
    o.self_aware = detail::self_block(s, info, i, config);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modality-set notation, e.g. "M032[d cm]S[O ApeAprAdT]". The ray count is
// optional (default 32); "M[OrSi]" replaces rays with the label's origin and
// size; "M[]" drops the mapping block.

inline ObsConfig parse_obs_notation(std::string_view text) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "bad modality notation '" + std::string(text) + "': " + why);
  };
  ObsConfig c;
  c.ch_distance = c.ch_type = c.ch_count = c.ch_mass = false;
  c.s_overlap = c.s_displacement = c.s_penetration = c.s_port = c.s_anchor_distance = c.s_time =
      false;

  std::size_t pos = 0;
  auto expect = [&](char ch) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size() || text[pos] != ch) fail(std::string("expected '") + ch + "'");
    ++pos;
  };
  auto group = [&]() {
    expect('[');
    const std::size_t close = text.find(']', pos);
    if (close == std::string_view::npos) fail("missing ']'");
    std::string body;
    for (char ch : text.substr(pos, close - pos)) {
      if (ch != ' ') body.push_back(ch);
    }
    pos = close + 1;
    return body;
  };

  expect('M');
  std::size_t digits = pos;
  while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) ++digits;
  if (digits > pos) {
    c.n_rays = std::stoi(std::string(text.substr(pos, digits - pos)));
    pos = digits;
  }
  const std::string m = group();
  if (m == "OrSi") {
    c.mapping = MappingKind::OriginSize;
  } else if (m.empty()) {
    c.mapping = MappingKind::None;
  } else {
    for (char ch : m) {
      switch (ch) {
        case 'd': c.ch_distance = true; break;
        case 't': c.ch_type = true; break;
        case 'c': c.ch_count = true; break;
        case 'm': c.ch_mass = true; break;
        default: fail(std::string("unknown ray channel '") + ch + "'");
      }
    }
  }

  expect('S');
  const std::string s = group();
  std::size_t i = 0;
  while (i < s.size()) {
    auto take = [&](std::string_view tok) {
      if (s.compare(i, tok.size(), tok) == 0) {
        i += tok.size();
        return true;
      }
      return false;
    };
    if (take("Ape")) c.s_penetration = true;
    else if (take("Apr")) c.s_port = true;
    else if (take("Ad")) c.s_anchor_distance = true;
    else if (take("O")) c.s_overlap = true;
    else if (take("D")) c.s_displacement = true;
    else if (take("T")) c.s_time = true;
    else fail("unknown self-aware modality at '" + s.substr(i) + "'");
  }
  while (pos < text.size() && text[pos] == ' ') ++pos;
  if (pos != text.size()) fail("trailing characters");
  validate(c);
  return c;
}

inline std::string obs_notation(const ObsConfig& c) {
  std::string out = "M";
  if (c.mapping == MappingKind::Rays) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%03d", c.n_rays);
    out += buf;
    out += '[';
    out += c.ch_distance ? "d" : "";
    out += c.ch_type ? "t" : "";
    out += c.ch_count ? "c" : "";
    out += c.ch_mass ? "m" : "";
    out += ']';
  } else if (c.mapping == MappingKind::OriginSize) {
    out += "[OrSi]";
  } else {
    out += "[]";
  }
  out += "S[";
  out += c.s_overlap ? "O" : "";
  out += c.s_displacement ? "D" : "";
  out += c.s_penetration ? "Ape" : "";
  out += c.s_port ? "Apr" : "";
  out += c.s_anchor_distance ? "Ad" : "";
  out += c.s_time ? "T" : "";
  out += ']';
  return out;
}

// The observation-ablation grid, numbered from 1.
inline const std::array<std::string_view, 30>& observation_grid() {
  static const std::array<std::string_view, 30> grid = {
      "M008[d cm]S[O ApeAprAdT]", "M016[d cm]S[O ApeAprAdT]", "M032[d cm]S[O ApeAprAdT]",
      "M064[d cm]S[O ApeAprAdT]", "M128[d cm]S[O ApeAprAdT]", "M[d cm]S[O ApeAprAdT]",
      "M[OrSi]S[O ApeAprAdT]",    "M[d cm]S[ApeAprAdT]",      "M[d cm]S[O AprAdT]",
      "M[d cm]S[O ApeAdT]",       "M[d cm]S[O ApeAprT]",      "M[d cm]S[O ApeAprAd]",
      "M[cm]S[O ApeAprAdT]",      "M[d m]S[O ApeAprAdT]",     "M[d c]S[O ApeAprAdT]",
      "M[dtcm]S[ODApeAprAdT]",    "M[OrSi]S[ODApeAprAdT]",    "M[dtcm]S[DApeAprAdT]",
      "M[dtcm]S[O ApeAprAdT]",    "M[dtcm]S[ODAprAdT]",       "M[dtcm]S[ODApeAdT]",
      "M[dtcm]S[ODApeAprT]",      "M[dtcm]S[ODApeAprAd]",     "M[tcm]S[ODApeAprAdT]",
      "M[dcm]S[ODApeAprAdT]",     "M[dtm]S[ODApeAprAdT]",     "M[dtc]S[ODApeAprAdT]",
      "M[dtcm]S[O]",              "M[OrSi]S[O]",              "M[]S[O]",
  };
  return grid;
}

}  // namespace pfl
