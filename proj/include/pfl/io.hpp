#pragma once

// File formats: instances and layouts as JSON, checkpoints as a JSON header
// followed by a little-endian float32 weight payload.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfl/environment.hpp"
#include "pfl/error.hpp"
#include "pfl/instance.hpp"
#include "pfl/observation.hpp"
#include "pfl/policynet.hpp"

namespace pfl {

using json = nlohmann::json;

namespace detail {

// Reads `key` into `out` when present; wrong types become config errors.
template <class T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                           std::string_view section) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(section) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || k == it.key();
    if (!ok) {
      throw Error(ErrorCode::InvalidConfig,
                  "unknown key '" + it.key() + "' in " + std::string(section) + " config");
    }
  }
}

template <class E>
E enum_from(const json& j, const char* key, E current,
            std::initializer_list<std::pair<std::string_view, E>> names) {
  auto it = j.find(key);
  if (it == j.end()) return current;
  if (!it->is_string()) throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be a string");
  const std::string s = it->get<std::string>();
  for (const auto& [n, v] : names) {
    if (n == s) return v;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown value '" + s + "' for " + key);
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<std::string_view, E>> names) {
  for (const auto& [n, v] : names) {
    if (v == value) return std::string(n);
  }
  return "?";
}

inline const std::initializer_list<std::pair<std::string_view, PlacementMode>> kPlacementNames = {
    {"absolute", PlacementMode::Absolute}, {"delta", PlacementMode::Delta}};
inline const std::initializer_list<std::pair<std::string_view, OverlapNorm>> kNormNames = {
    {"own-area", OverlapNorm::OwnArea}, {"constant", OverlapNorm::Constant}};
inline const std::initializer_list<std::pair<std::string_view, DisplacementMode>> kDispNames = {
    {"both", DisplacementMode::Both},
    {"per-step", DisplacementMode::PerStep},
    {"cumulative", DisplacementMode::Cumulative}};
inline const std::initializer_list<std::pair<std::string_view, AprMode>> kAprNames = {
    {"offset", AprMode::Offset}, {"distance", AprMode::Distance}};
inline const std::initializer_list<std::pair<std::string_view, nn::Activation>> kActNames = {
    {"tanh", nn::Activation::Tanh}, {"relu", nn::Activation::Relu}};

}  // namespace detail

// ---------------------------------------------------------------------------
// Configs

inline json to_json(const EnvConfig& c) {
  return {{"drawing", {c.drawing.w, c.drawing.h}},
          {"min_agents", c.min_agents},
          {"max_agents", c.max_agents},
          {"label_w_min", c.label_w_min},
          {"label_w_max", c.label_w_max},
          {"label_h", c.label_h},
          {"horizon", c.horizon},
          {"reward_weight", c.reward_weight},
          {"overlap_norm", detail::enum_name(c.overlap_norm, detail::kNormNames)},
          {"overlap_constant", c.overlap_constant},
          {"placement", detail::enum_name(c.placement, detail::kPlacementNames)},
          {"delta_scale", c.delta_scale},
          {"penetration_penalty", c.penetration_penalty},
          {"require_initial_conflict", c.require_initial_conflict},
          {"stop_when_conflict_free", c.stop_when_conflict_free}};
}

inline void merge(EnvConfig& c, const json& j) {
  detail::reject_unknown(j,
                         {"drawing", "min_agents", "max_agents", "label_w_min", "label_w_max",
                          "label_h", "horizon", "reward_weight", "overlap_norm", "overlap_constant",
                          "placement", "delta_scale", "penetration_penalty",
                          "require_initial_conflict", "stop_when_conflict_free"},
                         "env");
  if (auto it = j.find("drawing"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) throw Error(ErrorCode::InvalidConfig, "drawing must be [w, h]");
    c.drawing = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  detail::read_opt(j, "min_agents", c.min_agents);
  detail::read_opt(j, "max_agents", c.max_agents);
  detail::read_opt(j, "label_w_min", c.label_w_min);
  detail::read_opt(j, "label_w_max", c.label_w_max);
  detail::read_opt(j, "label_h", c.label_h);
  detail::read_opt(j, "horizon", c.horizon);
  detail::read_opt(j, "reward_weight", c.reward_weight);
  c.overlap_norm = detail::enum_from(j, "overlap_norm", c.overlap_norm, detail::kNormNames);
  detail::read_opt(j, "overlap_constant", c.overlap_constant);
  c.placement = detail::enum_from(j, "placement", c.placement, detail::kPlacementNames);
  detail::read_opt(j, "delta_scale", c.delta_scale);
  detail::read_opt(j, "penetration_penalty", c.penetration_penalty);
  detail::read_opt(j, "require_initial_conflict", c.require_initial_conflict);
  detail::read_opt(j, "stop_when_conflict_free", c.stop_when_conflict_free);
  validate(c);
}

// Observation configs are written both as notation and as explicit fields;
// the fields win on read.
inline json to_json(const ObsConfig& c) {
  return {{"notation", obs_notation(c)},
          {"n_rays", c.n_rays},
          {"mapping", c.mapping == MappingKind::Rays       ? "rays"
                      : c.mapping == MappingKind::OriginSize ? "origin-size"
                                                             : "none"},
          {"channels", {c.ch_distance, c.ch_type, c.ch_count, c.ch_mass}},
          {"self", {c.s_overlap, c.s_displacement, c.s_penetration, c.s_port, c.s_anchor_distance,
                    c.s_time}},
          {"conflict_counts", c.conflict_counts},
          {"displacement", detail::enum_name(c.displacement, detail::kDispNames)},
          {"apr", detail::enum_name(c.apr, detail::kAprNames)},
          {"anchor_radius", c.anchor_radius}};
}

inline void merge(ObsConfig& c, const json& j) {
  detail::reject_unknown(j,
                         {"notation", "n_rays", "mapping", "channels", "self", "conflict_counts",
                          "displacement", "apr", "anchor_radius"},
                         "obs");
  if (auto it = j.find("notation"); it != j.end()) {
    const ObsConfig parsed = parse_obs_notation(it->get<std::string>());
    c.n_rays = parsed.n_rays;
    c.mapping = parsed.mapping;
    c.ch_distance = parsed.ch_distance;
    c.ch_type = parsed.ch_type;
    c.ch_count = parsed.ch_count;
    c.ch_mass = parsed.ch_mass;
    c.s_overlap = parsed.s_overlap;
    c.s_displacement = parsed.s_displacement;
    c.s_penetration = parsed.s_penetration;
    c.s_port = parsed.s_port;
    c.s_anchor_distance = parsed.s_anchor_distance;
    c.s_time = parsed.s_time;
  }
  detail::read_opt(j, "n_rays", c.n_rays);
  c.mapping = detail::enum_from(j, "mapping", c.mapping,
                                {{"rays", MappingKind::Rays},
                                 {"origin-size", MappingKind::OriginSize},
                                 {"none", MappingKind::None}});
  if (auto it = j.find("channels"); it != j.end()) {
    if (!it->is_array() || it->size() != 4) throw Error(ErrorCode::InvalidConfig, "channels must hold 4 flags");
    c.ch_distance = (*it)[0];
    c.ch_type = (*it)[1];
    c.ch_count = (*it)[2];
    c.ch_mass = (*it)[3];
  }
  if (auto it = j.find("self"); it != j.end()) {
    if (!it->is_array() || it->size() != 6) throw Error(ErrorCode::InvalidConfig, "self must hold 6 flags");
    c.s_overlap = (*it)[0];
    c.s_displacement = (*it)[1];
    c.s_penetration = (*it)[2];
    c.s_port = (*it)[3];
    c.s_anchor_distance = (*it)[4];
    c.s_time = (*it)[5];
  }
  detail::read_opt(j, "conflict_counts", c.conflict_counts);
  c.displacement = detail::enum_from(j, "displacement", c.displacement, detail::kDispNames);
  c.apr = detail::enum_from(j, "apr", c.apr, detail::kAprNames);
  detail::read_opt(j, "anchor_radius", c.anchor_radius);
  validate(c);
}

inline json to_json(const NetConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"filters", c.filters},
          {"kernel", c.kernel},
          {"self_width", c.self_width},
          {"shared_width", c.shared_width},
          {"branch_width", c.branch_width},
          {"mapping_width", c.mapping_width},
          {"merged_width", c.merged_width},
          {"activation", detail::enum_name(c.activation, detail::kActNames)}};
}

inline void merge(NetConfig& c, const json& j) {
  detail::reject_unknown(j,
                         {"variant", "filters", "kernel", "self_width", "shared_width",
                          "branch_width", "mapping_width", "merged_width", "activation"},
                         "net");
  if (auto it = j.find("variant"); it != j.end()) c.variant = parse_variant(it->get<std::string>());
  detail::read_opt(j, "filters", c.filters);
  detail::read_opt(j, "kernel", c.kernel);
  detail::read_opt(j, "self_width", c.self_width);
  detail::read_opt(j, "shared_width", c.shared_width);
  detail::read_opt(j, "branch_width", c.branch_width);
  detail::read_opt(j, "mapping_width", c.mapping_width);
  detail::read_opt(j, "merged_width", c.merged_width);
  c.activation = detail::enum_from(j, "activation", c.activation, detail::kActNames);
  validate(c);
}

// ---------------------------------------------------------------------------
// Plain files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(data.data(), std::streamsize(data.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string(what) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Instances

inline json to_json(const Instance& inst) {
  json anchors = json::array();
  for (const Anchor& a : inst.anchors) {
    anchors.push_back({{"x", a.point.x}, {"y", a.point.y}, {"text", a.text}, {"w", a.label.w},
                       {"h", a.label.h}});
  }
  return {{"version", 1},
          {"drawing", {{"x", inst.drawing.origin.x},
                       {"y", inst.drawing.origin.y},
                       {"w", inst.drawing.w},
                       {"h", inst.drawing.h}}},
          {"anchors", anchors}};
}

inline Instance instance_from_json(const json& j) {
  Instance inst;
  try {
    if (j.value("version", 0) != 1) throw Error(ErrorCode::Format, "unsupported instance version");
    const json& d = j.at("drawing");
    inst.drawing = Rect{{d.value("x", 0.0), d.value("y", 0.0)}, d.at("w").get<double>(),
                        d.at("h").get<double>()};
    for (const json& a : j.at("anchors")) {
      Anchor anchor;
      anchor.point = {a.at("x").get<double>(), a.at("y").get<double>()};
      anchor.label = {a.at("w").get<double>(), a.at("h").get<double>()};
      anchor.text = a.value("text", std::string());
      inst.anchors.push_back(anchor);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed instance: ") + e.what());
  }
  validate(inst);
  return inst;
}

inline std::string dump_instance(const Instance& inst) { return to_json(inst).dump(1) + "\n"; }

inline void save_instance(const std::filesystem::path& path, const Instance& inst) {
  write_file(path, dump_instance(inst));
}

inline Instance load_instance(const std::filesystem::path& path) {
  return instance_from_json(parse_json(read_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Layouts

inline json to_json(const Layout& layout) {
  json labels = json::array();
  for (const Placement& p : layout.labels) {
    json e = {{"placed", p.placed}, {"x", p.origin.x}, {"y", p.origin.y}};
    if (p.leader) e["leader"] = {p.leader->from.x, p.leader->from.y, p.leader->to.x, p.leader->to.y};
    labels.push_back(e);
  }
  return {{"labels", labels}};
}

inline Layout layout_from_json(const json& j) {
  Layout layout;
  try {
    for (const json& e : j.at("labels")) {
      Placement p;
      p.placed = e.at("placed").get<bool>();
      p.origin = {e.at("x").get<double>(), e.at("y").get<double>()};
      if (auto it = e.find("leader"); it != e.end()) {
        p.leader = Leader{{(*it)[0].get<double>(), (*it)[1].get<double>()},
                          {(*it)[2].get<double>(), (*it)[3].get<double>()}};
      }
      layout.labels.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed layout: ") + e.what());
  }
  return layout;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr char kCheckpointMagic[8] = {'P', 'F', 'L', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetConfig net;
  ObsConfig obs;
  EnvConfig env;
  nn::Manifest manifest;
  std::vector<float> params;
  std::int64_t iteration = 0;
  std::vector<std::uint64_t> seeds;  // seed lineage, oldest first
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xffu));
}
inline std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(std::uint8_t(in[pos + std::size_t(i)])) << (8 * i);
  return v;
}

inline json to_json(const nn::Manifest& m) {
  json out = json::array();
  for (const nn::TensorSpec& t : m.tensors) {
    out.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", t.offset}});
  }
  return out;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  if (c.params.size() != c.manifest.total) {
    throw Error(ErrorCode::Shape, "payload length does not match the manifest");
  }
  const json header = {{"net", to_json(c.net)},
                       {"obs", to_json(c.obs)},
                       {"env", to_json(c.env)},
                       {"manifest", detail::to_json(c.manifest)},
                       {"param_count", c.manifest.total},
                       {"iteration", c.iteration},
                       {"seeds", c.seeds}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, std::uint32_t(text.size()));
  out += text;
  detail::put_u64(out, c.params.size());
  for (float f : c.params) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

// Parses a checkpoint; with `expected` set, the stored observation layout
// must match it.
inline Checkpoint parse_checkpoint(std::string_view data, const ObsConfig* expected = nullptr) {
  auto need = [&](std::size_t pos, std::size_t n) {
    if (pos + n > data.size()) throw Error(ErrorCode::Format, "checkpoint is truncated");
  };
  need(0, 16);
  if (std::memcmp(data.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw Error(ErrorCode::Format, "not a checkpoint (bad magic)");
  }
  const auto version = std::uint32_t(detail::get_le(data, 8, 4));
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::Format, "checkpoint version " + std::to_string(version) +
                                       " is not supported (expected " +
                                       std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = std::size_t(detail::get_le(data, 12, 4));
  need(16, header_len + 8);
  const json header = parse_json(data.substr(16, header_len), "checkpoint header");
  Checkpoint c;
  try {
    merge(c.net, header.at("net"));
    merge(c.obs, header.at("obs"));
    merge(c.env, header.at("env"));
    c.iteration = header.at("iteration").get<std::int64_t>();
    c.seeds = header.at("seeds").get<std::vector<std::uint64_t>>();
    for (const json& t : header.at("manifest")) {
      c.manifest.tensors.push_back({t.at("name").get<std::string>(), t.at("shape")[0].get<int>(),
                                    t.at("shape")[1].get<int>(), t.at("offset").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed checkpoint header: ") + e.what());
  }
  std::size_t expect_offset = 0;
  for (const nn::TensorSpec& t : c.manifest.tensors) {
    if (t.offset != expect_offset) throw Error(ErrorCode::Format, "manifest offsets are not contiguous");
    expect_offset += t.size();
  }
  c.manifest.total = expect_offset;

  const std::size_t pos = 16 + header_len;
  const std::size_t count = std::size_t(detail::get_le(data, pos, 8));
  if (count != c.manifest.total) {
    throw Error(ErrorCode::Format, "payload holds " + std::to_string(count) +
                                       " values, manifest describes " +
                                       std::to_string(c.manifest.total));
  }
  if (data.size() != pos + 8 + 4 * count) {
    throw Error(ErrorCode::Format, "checkpoint payload length mismatch");
  }
  c.params.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    c.params[i] = std::bit_cast<float>(std::uint32_t(detail::get_le(data, pos + 8 + 4 * i, 4)));
  }

  // The manifest must be the one this build derives from the stored configs.
  const PolicyValueNet<float> net(c.net, c.obs);
  if (!(net.manifest() == c.manifest)) {
    throw Error(ErrorCode::Shape, "checkpoint manifest does not match its network config");
  }
  if (expected != nullptr && ObsShape::of(*expected) != ObsShape::of(c.obs)) {
    throw Error(ErrorCode::Shape, "checkpoint expects " + std::to_string(c.obs.size()) +
                                      "-entry observations (" + obs_notation(c.obs) +
                                      "), evaluator produces " + std::to_string(expected->size()) +
                                      " (" + obs_notation(*expected) + ")");
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file(path, serialize_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const ObsConfig* expected = nullptr) {
  return parse_checkpoint(read_file(path), expected);
}

// Line-delimited records.
inline void append_jsonl(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

}  // namespace pfl
