#pragma once

// Benchmark datasets, completeness, and the evaluation harness.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pfl/baselines.hpp"
#include "pfl/error.hpp"
#include "pfl/inference.hpp"
#include "pfl/instance.hpp"
#include "pfl/io.hpp"
#include "pfl/trainer.hpp"

namespace pfl {

enum class DatasetPart { Compact, Volume };

inline std::string_view to_string(DatasetPart p) { return p == DatasetPart::Compact ? "compact" : "volume"; }

struct PartSpec {
  DatasetPart part = DatasetPart::Compact;
  Dims drawing{600.0, 400.0};
  int count_min = 5;
  int count_max = 50;
  int count_step = 5;

  std::vector<int> counts() const {
    std::vector<int> out;
    for (int c = count_min; c <= count_max; c += count_step) out.push_back(c);
    return out;
  }
};

inline PartSpec compact_part() { return {DatasetPart::Compact, {600.0, 400.0}, 5, 50, 5}; }
inline PartSpec volume_part() { return {DatasetPart::Volume, {2400.0, 1600.0}, 100, 600, 50}; }

struct DatasetSpec {
  std::vector<PartSpec> parts{compact_part(), volume_part()};
  int instances_per_count = 10;
  int text_min = 3;
  int text_max = 7;
  double font_size = 16.0;
  std::uint64_t seed = 1;
};

// Monospace text metrics: 0.6 em per character plus 4 px padding.
inline Dims label_dims(std::string_view text, double font_size) {
  return {0.6 * font_size * double(text.size()) + 4.0, font_size + 4.0};
}

struct NamedInstance {
  std::string name;  // {part}_{count}_{index}
  DatasetPart part = DatasetPart::Compact;
  int count = 0;
  int index = 0;
  Instance instance;
};

// Anchors drawn in sequence from one generator; the first k anchors of a
// larger draw equal a draw of k anchors.
template <class Rng>
Instance random_text_instance(Dims drawing, int count, const DatasetSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, drawing.w);
  std::uniform_real_distribution<double> uy(0.0, drawing.h);
  std::uniform_int_distribution<int> len(spec.text_min, spec.text_max);
  std::uniform_int_distribution<int> letter(0, 25);
  Instance inst;
  inst.drawing = Rect{{0.0, 0.0}, drawing.w, drawing.h};
  for (int i = 0; i < count; ++i) {
    Anchor a;
    a.point.x = ux(rng);
    a.point.y = uy(rng);
    const int n = len(rng);
    for (int k = 0; k < n; ++k) a.text.push_back(char('A' + letter(rng)));
    a.label = label_dims(a.text, spec.font_size);
    inst.anchors.push_back(std::move(a));
  }
  return inst;
}

inline std::vector<NamedInstance> generate_dataset(const DatasetSpec& spec) {
  if (spec.instances_per_count < 1 || spec.text_min < 1 || spec.text_max < spec.text_min) {
    throw Error(ErrorCode::InvalidConfig, "invalid dataset spec");
  }
  std::vector<NamedInstance> out;
  for (const PartSpec& part : spec.parts) {
    for (int count : part.counts()) {
      for (int index = 0; index < spec.instances_per_count; ++index) {
        std::seed_seq seq{std::uint32_t(spec.seed), std::uint32_t(spec.seed >> 32),
                          std::uint32_t(part.part), std::uint32_t(count), std::uint32_t(index)};
        std::mt19937_64 rng(seq);
        NamedInstance ni;
        ni.part = part.part;
        ni.count = count;
        ni.index = index;
        ni.name = std::string(to_string(part.part)) + "_" + std::to_string(count) + "_" +
                  std::to_string(index);
        ni.instance = random_text_instance(part.drawing, count, spec, rng);
        out.push_back(std::move(ni));
      }
    }
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& dir, const std::vector<NamedInstance>& data) {
  std::filesystem::create_directories(dir);
  for (const NamedInstance& ni : data) save_instance(dir / (ni.name + ".json"), ni.instance);
}

// Loads every `{part}_{count}_{index}.json` file of a directory, sorted by
// part, count and index.
inline std::vector<NamedInstance> load_dataset(const std::filesystem::path& dir,
                                               std::optional<DatasetPart> only = std::nullopt) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "no dataset directory '" + dir.string() + "'");
  std::vector<NamedInstance> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const std::string stem = entry.path().stem().string();
    const auto a = stem.find('_');
    const auto b = stem.rfind('_');
    if (a == std::string::npos || a == b) continue;
    const std::string part = stem.substr(0, a);
    if (part != "compact" && part != "volume") continue;
    NamedInstance ni;
    ni.part = part == "compact" ? DatasetPart::Compact : DatasetPart::Volume;
    if (only && ni.part != *only) continue;
    try {
      ni.count = std::stoi(stem.substr(a + 1, b - a - 1));
      ni.index = std::stoi(stem.substr(b + 1));
    } catch (const std::exception&) {
      continue;
    }
    ni.name = stem;
    ni.instance = load_instance(entry.path());
    out.push_back(std::move(ni));
  }
  std::sort(out.begin(), out.end(), [](const NamedInstance& x, const NamedInstance& y) {
    return std::tie(x.part, x.count, x.index) < std::tie(y.part, y.count, y.index);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Audit: an independent check of a layout, written against raw coordinates.

struct AuditReport {
  int overlaps = 0;      // pairs of placed labels sharing positive area
  int penetrations = 0;  // (placed label, anchor) pairs with the anchor strictly inside
  int outside = 0;       // placed labels leaving the drawing
  int detached = 0;      // adjacent labels whose anchor is not on the boundary

  bool ok() const { return overlaps == 0 && penetrations == 0 && outside == 0 && detached == 0; }
};

inline AuditReport audit(const Instance& inst, const Layout& layout, double tol = 1e-6) {
  if (layout.labels.size() != inst.size()) throw Error(ErrorCode::Arity, "layout size does not match instance");
  AuditReport r;
  struct Box {
    double x0, y0, x1, y1;
  };
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Placement& p = layout.labels[i];
    if (!p.placed) continue;
    const Dims d = inst.anchors[i].label;
    const Box b{p.origin.x, p.origin.y, p.origin.x + d.w, p.origin.y + d.h};
    const Rect& D = inst.drawing;
    if (b.x0 < D.origin.x - tol || b.y0 < D.origin.y - tol || b.x1 > D.origin.x + D.w + tol ||
        b.y1 > D.origin.y + D.h + tol) {
      ++r.outside;
    }
    for (const Anchor& a : inst.anchors) {
      if (a.point.x > b.x0 && a.point.x < b.x1 && a.point.y > b.y0 && a.point.y < b.y1) {
        // Rounding can put the own port a hair inside; it must be on the boundary.
        const double depth = std::min({a.point.x - b.x0, b.x1 - a.point.x, a.point.y - b.y0,
                                       b.y1 - a.point.y});
        if (depth > tol) ++r.penetrations;
      }
    }
    if (!p.leader) {
      const Point a = inst.anchors[i].point;
      const bool on_x = a.x >= b.x0 - tol && a.x <= b.x1 + tol;
      const bool on_y = a.y >= b.y0 - tol && a.y <= b.y1 + tol;
      const bool on_edge = std::abs(a.x - b.x0) <= tol || std::abs(a.x - b.x1) <= tol ||
                           std::abs(a.y - b.y0) <= tol || std::abs(a.y - b.y1) <= tol;
      if (!(on_x && on_y && on_edge)) ++r.detached;
    }
    boxes.push_back(b);
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      const double w = std::min(boxes[i].x1, boxes[j].x1) - std::max(boxes[i].x0, boxes[j].x0);
      const double h = std::min(boxes[i].y1, boxes[j].y1) - std::max(boxes[i].y0, boxes[j].y0);
      if (w > tol && h > tol) ++r.overlaps;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Records and metrics

enum class Method { Marl, MarlRandom, PblA, PblAD };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Marl: return "marl";
    case Method::MarlRandom: return "marl-random";
    case Method::PblA: return "pbl-a";
    case Method::PblAD: return "pbl-ad";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::Marl, Method::MarlRandom, Method::PblA, Method::PblAD}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::Usage, "unknown method '" + std::string(s) +
                                    "' (expected marl, marl-random, pbl-a or pbl-ad)");
}

inline bool is_deterministic(Method m) { return m == Method::PblA || m == Method::PblAD; }

struct EvalRecord {
  std::string method;
  std::string instance;
  int anchors = 0;
  bool complete = false;
  int placed = 0;
  int steps = 0;
  double seconds = 0.0;
  int run = 0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline json to_json(const EvalRecord& r) {
  return {{"method", r.method}, {"instance", r.instance}, {"anchors", r.anchors},
          {"complete", r.complete}, {"placed", r.placed}, {"steps", r.steps},
          {"seconds", r.seconds}, {"run", r.run}};
}

inline EvalRecord record_from_json(const json& j) {
  try {
    return {j.at("method").get<std::string>(), j.at("instance").get<std::string>(),
            j.at("anchors").get<int>(),        j.at("complete").get<bool>(),
            j.at("placed").get<int>(),         j.at("steps").get<int>(),
            j.at("seconds").get<double>(),     j.at("run").get<int>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed record: ") + e.what());
  }
}

using RecordFilter = std::function<bool(const EvalRecord&)>;

// Percentage of complete records among those passing the filter.
inline double completeness(const std::vector<EvalRecord>& records, const RecordFilter& filter = {}) {
  std::size_t total = 0;
  std::size_t complete = 0;
  for (const EvalRecord& r : records) {
    if (filter && !filter(r)) continue;
    ++total;
    complete += r.complete ? 1 : 0;
  }
  if (total == 0) throw Error(ErrorCode::UndefinedMetric, "completeness of an empty record set");
  return 100.0 * double(complete) / double(total);
}

struct Quartiles {
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::UndefinedMetric, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

inline Quartiles describe(const std::vector<double>& v) {
  Quartiles q;
  if (v.empty()) return q;
  for (double x : v) q.mean += x;
  q.mean /= double(v.size());
  q.q1 = quantile(v, 0.25);
  q.median = quantile(v, 0.5);
  q.q3 = quantile(v, 0.75);
  return q;
}

inline json to_json(const Quartiles& q) {
  return {{"mean", q.mean}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}};
}

struct CountStats {
  int anchors = 0;
  std::size_t records = 0;
  Quartiles completeness;  // per-run completeness percentages
  Quartiles seconds;
  Quartiles steps;
  std::optional<double> complete_only_seconds;
};

struct MethodStats {
  std::string method;
  std::vector<CountStats> by_count;
};

inline MethodStats method_stats(const std::string& method, const std::vector<EvalRecord>& records) {
  std::map<int, std::vector<const EvalRecord*>> groups;
  for (const EvalRecord& r : records) {
    if (r.method == method) groups[r.anchors].push_back(&r);
  }
  MethodStats out;
  out.method = method;
  for (const auto& [anchors, recs] : groups) {
    CountStats c;
    c.anchors = anchors;
    c.records = recs.size();
    std::map<int, std::pair<int, int>> per_run;  // run -> (complete, total)
    std::vector<double> secs, steps;
    double complete_secs = 0.0;
    int complete_n = 0;
    for (const EvalRecord* r : recs) {
      auto& pr = per_run[r->run];
      pr.first += r->complete ? 1 : 0;
      pr.second += 1;
      secs.push_back(r->seconds);
      steps.push_back(double(r->steps));
      if (r->complete) {
        complete_secs += r->seconds;
        ++complete_n;
      }
    }
    std::vector<double> comp;
    for (const auto& [run, pr] : per_run) comp.push_back(100.0 * pr.first / pr.second);
    c.completeness = describe(comp);
    c.seconds = describe(secs);
    c.steps = describe(steps);
    if (complete_n > 0) c.complete_only_seconds = complete_secs / complete_n;
    out.by_count.push_back(c);
  }
  return out;
}

inline json to_json(const MethodStats& m) {
  json rows = json::array();
  for (const CountStats& c : m.by_count) {
    json row = {{"anchors", c.anchors},
                {"records", c.records},
                {"completeness", to_json(c.completeness)},
                {"seconds", to_json(c.seconds)},
                {"steps", to_json(c.steps)}};
    row["complete_only_seconds"] = c.complete_only_seconds ? json(*c.complete_only_seconds) : json();
    rows.push_back(row);
  }
  return {{"method", m.method}, {"by_count", rows}};
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
  int runs = 10;
  int horizon = 500;
  std::uint64_t seed = 1;
  int workers = 1;
  BaselineConfig baseline;
  NetConfig random_net;  // architecture of the untrained policy
  ObsConfig random_obs;
  EnvConfig random_env;
};

inline std::uint64_t run_seed(std::uint64_t seed, int run, std::size_t instance) {
  return episode_seed(seed, std::uint64_t(run), std::uint64_t(instance));
}

// Evaluates one method on every instance. Records come back ordered by run
// then instance, independent of the worker count.
inline std::vector<EvalRecord> evaluate(Method method, const std::vector<NamedInstance>& data,
                                        const EvalOptions& opt, const Checkpoint* checkpoint = nullptr) {
  if (opt.runs < 1) throw Error(ErrorCode::InvalidConfig, "runs must be at least 1");
  if (method == Method::Marl && checkpoint == nullptr) {
    throw Error(ErrorCode::Io, "method marl needs a checkpoint");
  }
  const int runs = is_deterministic(method) ? 1 : opt.runs;
  std::vector<EvalRecord> records(std::size_t(runs) * data.size());

  std::optional<PolicyValueNet<float>> net;
  std::vector<std::vector<float>> params(static_cast<std::size_t>(runs));
  ObsConfig obs = opt.random_obs;
  EnvConfig env = opt.random_env;
  if (method == Method::Marl) {
    net.emplace(checkpoint->net, checkpoint->obs);
    obs = checkpoint->obs;
    env = checkpoint->env;
    for (auto& p : params) p = checkpoint->params;
  } else if (method == Method::MarlRandom) {
    net.emplace(opt.random_net, obs);
    for (int run = 0; run < runs; ++run) {
      std::mt19937_64 init_rng(run_seed(opt.seed ^ 0xa11ce5eedULL, run, 0));
      params[std::size_t(run)] = net->init_params(init_rng);
    }
  }

  parallel_for(records.size(), opt.workers, [&](std::size_t k) {
    const int run = int(k / data.size());
    const std::size_t i = k % data.size();
    const NamedInstance& ni = data[i];
    EvalRecord r;
    r.method = std::string(to_string(method));
    r.instance = ni.name;
    r.anchors = int(ni.instance.size());
    r.run = run;
    if (method == Method::PblA || method == Method::PblAD) {
      const auto t0 = std::chrono::steady_clock::now();
      const Layout layout =
          pbl_solve(ni.instance, method == Method::PblA ? PblMode::A : PblMode::AD, opt.baseline);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.placed = int(layout.placed_count());
      r.complete = r.placed == r.anchors;
    } else {
      const InferResult res = infer(*net, params[std::size_t(run)], env, obs, ni.instance,
                                    opt.horizon, run_seed(opt.seed, run, i));
      r.seconds = res.seconds;
      r.steps = res.steps;
      r.complete = res.complete;
      r.placed = r.anchors;
    }
    records[k] = r;
  });
  return records;
}

}  // namespace pfl
