// pfl: dataset generation, training, evaluation, comparison, rendering and
// ablation grids for multi-agent label placement.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfl/baselines.hpp"
#include "pfl/benchmark.hpp"
#include "pfl/config.hpp"
#include "pfl/inference.hpp"
#include "pfl/io.hpp"
#include "pfl/svg.hpp"
#include "pfl/trainer.hpp"

namespace {

using namespace pfl;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, const std::string& out_help) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--config", c.config, "JSON config file overriding defaults")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, out_help);
  app->add_flag("--quiet", c.quiet, "Suppress progress output");
}

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (const char* w = std::getenv("PFL_WORKERS")) {
    const int n = std::atoi(w);
    if (n < 1) throw Error(ErrorCode::Usage, "PFL_WORKERS must be a positive integer");
    rc.train.workers = n;
    rc.eval.workers = n;
  }
  if (c.seed) {
    rc.train.seed = *c.seed;
    rc.dataset.seed = *c.seed;
    rc.eval.seed = *c.seed;
  }
  return rc;
}

std::optional<DatasetPart> parse_part(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "compact") return DatasetPart::Compact;
  if (s == "volume") return DatasetPart::Volume;
  throw Error(ErrorCode::Usage, "unknown dataset part '" + s + "'");
}

void log_line(bool quiet, const std::string& s) {
  if (!quiet) std::cout << s << std::endl;
}

// ---------------------------------------------------------------------------

struct GenData {
  Common common;
  std::string part = "all";
};

int run_gen_data(const GenData& g) {
  RunConfig rc = resolve(g.common);
  const auto only = parse_part(g.part);
  if (only) {
    rc.dataset.parts = {*only == DatasetPart::Compact ? compact_part() : volume_part()};
  }
  const std::string dir = g.common.out.empty() ? "data" : g.common.out;
  const auto data = generate_dataset(rc.dataset);
  write_dataset(dir, data);
  std::size_t anchors = 0;
  for (const auto& ni : data) anchors += ni.instance.size();
  log_line(g.common.quiet, "wrote " + std::to_string(data.size()) + " instances (" +
                               std::to_string(anchors) + " anchors) to " + dir);
  return 0;
}

struct Train {
  Common common;
  std::optional<int> iterations;
  std::optional<int> checkpoint_every;
  std::string resume;
};

int run_train(const Train& t) {
  RunConfig rc = resolve(t.common);
  if (t.iterations) rc.train.iterations = *t.iterations;
  if (t.checkpoint_every) rc.train.checkpoint_every = *t.checkpoint_every;
  rc.train.out_dir = t.common.out.empty() ? "runs/train" : t.common.out;
  std::optional<Checkpoint> init;
  if (!t.resume.empty()) {
    init = load_checkpoint(t.resume);
    rc.env = init->env;
    rc.obs = init->obs;
    rc.net = init->net;
  }
  const PolicyValueNet<float> net(rc.net, rc.obs);
  log_line(t.common.quiet, "network " + std::string(to_string(rc.net.variant)) + ", " +
                               std::to_string(net.param_count()) + " parameters, observation " +
                               obs_notation(rc.obs) + " (" + std::to_string(rc.obs.size()) + ")");
  const bool quiet = t.common.quiet;
  train(rc.env, rc.obs, rc.net, rc.train,
        [quiet](const IterationMetrics& m, std::span<const float>) {
          if (quiet) return;
          std::ostringstream s;
          s << "iter " << m.iteration << "  reward " << m.reward_mean << "  solved "
            << m.solve_rate << "  length " << m.episode_length_mean << "  " << m.wall_time << "s";
          std::cout << s.str() << std::endl;
        },
        init ? &*init : nullptr);
  log_line(t.common.quiet, "checkpoint written to " + (rc.train.out_dir / "final.ckpt").string());
  return 0;
}

struct Eval {
  Common common;
  std::string method = "pbl-a";
  std::string data = "data";
  std::string checkpoint;
  std::string part = "compact";
  std::optional<int> runs;
  std::optional<int> horizon;
};

std::vector<EvalRecord> evaluate_method(Method m, const std::vector<NamedInstance>& data,
                                        const RunConfig& rc, const std::string& ckpt_path) {
  std::optional<Checkpoint> ckpt;
  EvalOptions opt = rc.eval;
  opt.baseline = rc.baseline;
  opt.random_net = rc.net;
  opt.random_obs = rc.obs;
  opt.random_env = rc.env;
  if (m == Method::Marl) {
    if (ckpt_path.empty()) throw Error(ErrorCode::Usage, "method marl needs --checkpoint");
    ckpt = load_checkpoint(ckpt_path);
  }
  return evaluate(m, data, opt, ckpt ? &*ckpt : nullptr);
}

int run_eval(const Eval& e) {
  RunConfig rc = resolve(e.common);
  if (e.runs) rc.eval.runs = *e.runs;
  if (e.horizon) rc.eval.horizon = *e.horizon;
  const Method m = parse_method(e.method);
  const auto data = load_dataset(e.data, parse_part(e.part));
  if (data.empty()) throw Error(ErrorCode::Io, "no instances found in '" + e.data + "'");
  const auto records = evaluate_method(m, data, rc, e.checkpoint);
  std::ostringstream out;
  for (const EvalRecord& r : records) append_jsonl(out, to_json(r));
  const std::string path = e.common.out.empty() ? "eval.jsonl" : e.common.out;
  write_file(path, out.str());
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s: %zu records, completeness %.1f%%", e.method.c_str(),
                records.size(), completeness(records));
  log_line(e.common.quiet, buf);
  return 0;
}

struct Compare {
  Common common;
  std::vector<std::string> methods;
  std::string data = "data";
  std::string checkpoint;
  std::string part = "compact";
  std::string records;
  std::optional<int> runs;
  std::optional<int> horizon;
};

int run_compare(const Compare& c) {
  RunConfig rc = resolve(c.common);
  if (c.runs) rc.eval.runs = *c.runs;
  if (c.horizon) rc.eval.horizon = *c.horizon;
  std::vector<std::string> methods = c.methods;
  if (methods.empty()) {
    methods = {"pbl-a", "pbl-ad", "marl-random"};
    if (!c.checkpoint.empty()) methods.insert(methods.begin(), "marl");
  }
  const auto data = load_dataset(c.data, parse_part(c.part));
  if (data.empty()) throw Error(ErrorCode::Io, "no instances found in '" + c.data + "'");
  json summary = {{"horizon", rc.eval.horizon}, {"runs", rc.eval.runs}, {"methods", json::array()}};
  std::ostringstream rec;
  for (const std::string& name : methods) {
    const Method m = parse_method(name);
    const auto records = evaluate_method(m, data, rc, c.checkpoint);
    for (const EvalRecord& r : records) append_jsonl(rec, to_json(r));
    json stats = to_json(method_stats(name, records));
    stats["completeness"] = completeness(records);
    summary["methods"].push_back(stats);
    if (!c.common.quiet) {
      std::cout << name << "\n  anchors  complete%  median-steps  mean-seconds\n";
      for (const json& row : stats["by_count"]) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "  %7d  %9.1f  %12.1f  %12.5f", row["anchors"].get<int>(),
                      row["completeness"]["mean"].get<double>(),
                      row["steps"]["median"].get<double>(), row["seconds"]["mean"].get<double>());
        std::cout << buf << "\n";
      }
      std::cout << std::flush;
    }
  }
  write_file(c.common.out.empty() ? "compare.json" : c.common.out, summary.dump(2) + "\n");
  if (!c.records.empty()) write_file(c.records, rec.str());
  return 0;
}

struct Render {
  Common common;
  std::string instance;
  std::string method = "pbl-a";
  std::string checkpoint;
  std::string layout;
  std::optional<int> horizon;
};

int run_render(const Render& r) {
  RunConfig rc = resolve(r.common);
  const Instance inst = load_instance(r.instance);
  Layout layout;
  const int horizon = r.horizon.value_or(rc.eval.horizon);
  if (!r.layout.empty()) {
    layout = layout_from_json(parse_json(read_file(r.layout), r.layout));
  } else {
    switch (parse_method(r.method)) {
      case Method::PblA: layout = pbl_solve(inst, PblMode::A, rc.baseline); break;
      case Method::PblAD: layout = pbl_solve(inst, PblMode::AD, rc.baseline); break;
      case Method::Marl: {
        if (r.checkpoint.empty()) throw Error(ErrorCode::Usage, "method marl needs --checkpoint");
        layout = infer(load_checkpoint(r.checkpoint), inst, horizon, rc.eval.seed).layout;
        break;
      }
      case Method::MarlRandom:
        layout = random_policy_solve(rc.net, rc.obs, rc.env, inst, horizon, rc.eval.seed ^ 0xa11ce5eedULL,
                                     rc.eval.seed)
                     .layout;
        break;
    }
  }
  const std::string path = r.common.out.empty() ? "layout.svg" : r.common.out;
  render_svg(inst, layout, path);
  log_line(r.common.quiet, "placed " + std::to_string(layout.placed_count()) + "/" +
                               std::to_string(inst.size()) + " labels, wrote " + path);
  return 0;
}

struct Ablate {
  Common common;
  std::string grid = "obs";
  std::string sets;
  int iterations = 0;
  int eval_instances = 200;
};

std::vector<int> parse_sets(const std::string& s, int max) {
  std::vector<int> out;
  if (s.empty()) {
    for (int i = 1; i <= max; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    try {
      v = std::stoi(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Usage, "bad set index '" + item + "'");
    }
    if (v < 1 || v > max) throw Error(ErrorCode::Usage, "set index " + item + " out of range 1.." + std::to_string(max));
    out.push_back(v);
  }
  return out;
}

double two_agent_solve_rate(const Checkpoint& ck, int n, std::uint64_t seed) {
  EnvConfig ec = ck.env;
  ec.min_agents = ec.max_agents = 2;
  ec.require_initial_conflict = true;
  std::mt19937_64 rng(seed);
  const PolicyValueNet<float> net(ck.net, ck.obs);
  int solved = 0;
  for (int i = 0; i < n; ++i) {
    const Instance inst = generate_instance(ec, rng);
    solved += infer(net, ck.params, ck.env, ck.obs, inst, ec.horizon, seed + std::uint64_t(i)).complete;
  }
  return 100.0 * solved / std::max(n, 1);
}

int run_ablate(const Ablate& a) {
  RunConfig rc = resolve(a.common);
  const bool arch = a.grid == "arch";
  if (!arch && a.grid != "obs") throw Error(ErrorCode::Usage, "grid must be arch or obs");
  const int max = arch ? int(kAllVariants.size()) : int(observation_grid().size());
  std::ostringstream rows;
  for (int set : parse_sets(a.sets, max)) {
    RunConfig cfg = rc;
    json row = {{"grid", a.grid}, {"set", set}};
    if (arch) {
      cfg.net.variant = kAllVariants[std::size_t(set - 1)];
      row["variant"] = std::string(to_string(cfg.net.variant));
    } else {
      cfg.obs = parse_obs_notation(observation_grid()[std::size_t(set - 1)]);
      row["notation"] = std::string(observation_grid()[std::size_t(set - 1)]);
      row["matches_default"] = cfg.obs == ObsConfig{};
    }
    row["obs"] = obs_notation(cfg.obs);
    row["obs_size"] = cfg.obs.size();
    row["param_count"] = PolicyValueNet<float>(cfg.net, cfg.obs).param_count();
    if (a.iterations > 0) {
      cfg.train.iterations = a.iterations;
      if (!a.common.out.empty()) {
        cfg.train.out_dir = std::filesystem::path(a.common.out).parent_path() /
                            (a.grid + "_set" + std::to_string(set));
      }
      const TrainResult res = train(cfg.env, cfg.obs, cfg.net, cfg.train);
      row["final_reward"] = res.metrics.back().reward_mean;
      row["two_agent_solve_rate"] = two_agent_solve_rate(res.checkpoint, a.eval_instances, cfg.eval.seed);
    }
    append_jsonl(rows, row);
    log_line(a.common.quiet, row.dump());
  }
  if (!a.common.out.empty()) write_file(a.common.out, rows.str());
  return 0;
}

int fail(ErrorCode code, const std::string& message) {
  const json line = {{"code", std::string(to_string(code))}, {"message", message}};
  std::cerr << "error: " << line.dump() << std::endl;
  return code == ErrorCode::Usage ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent label placement toolkit"};
  app.require_subcommand(1);

  GenData gen;
  auto* g = app.add_subcommand("gen-data", "Generate the benchmark dataset");
  add_common(g, gen.common, "Output directory (default: data)");
  g->add_option("--part", gen.part, "compact, volume or all")->check(CLI::IsMember({"compact", "volume", "all"}));

  Train tr;
  auto* t = app.add_subcommand("train", "Train the shared policy with PPO");
  add_common(t, tr.common, "Output directory for metrics and checkpoints (default: runs/train)");
  t->add_option("--iterations", tr.iterations, "Training iterations");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint period in iterations");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  Eval ev;
  auto* e = app.add_subcommand("eval", "Evaluate one method on a dataset");
  add_common(e, ev.common, "Record file (default: eval.jsonl)");
  e->add_option("--method", ev.method, "marl, marl-random, pbl-a or pbl-ad");
  e->add_option("--data", ev.data, "Dataset directory");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint for method marl");
  e->add_option("--part", ev.part, "compact, volume or all");
  e->add_option("--runs", ev.runs, "Runs per instance for stochastic methods");
  e->add_option("--horizon", ev.horizon, "Inference horizon");

  Compare cmp;
  auto* c = app.add_subcommand("compare", "Per-anchor-count comparison of several methods");
  add_common(c, cmp.common, "Summary file (default: compare.json)");
  c->add_option("--methods", cmp.methods, "Methods to compare")->delimiter(',');
  c->add_option("--data", cmp.data, "Dataset directory");
  c->add_option("--checkpoint", cmp.checkpoint, "Checkpoint for method marl");
  c->add_option("--part", cmp.part, "compact, volume or all");
  c->add_option("--records", cmp.records, "Also write raw records here");
  c->add_option("--runs", cmp.runs, "Runs per instance for stochastic methods");
  c->add_option("--horizon", cmp.horizon, "Inference horizon");

  Render rn;
  auto* r = app.add_subcommand("render", "Render a layout as SVG");
  add_common(r, rn.common, "SVG file (default: layout.svg)");
  r->add_option("--instance", rn.instance, "Instance file")->required()->check(CLI::ExistingFile);
  r->add_option("--method", rn.method, "Method producing the layout");
  r->add_option("--checkpoint", rn.checkpoint, "Checkpoint for method marl");
  r->add_option("--layout", rn.layout, "Render this layout file instead of solving");
  r->add_option("--horizon", rn.horizon, "Inference horizon");

  Ablate ab;
  auto* a = app.add_subcommand("ablate", "Architecture and observation ablation grids");
  add_common(a, ab.common, "Row file (JSON lines)");
  a->add_option("--grid", ab.grid, "arch (network variants) or obs (observation sets)");
  a->add_option("--sets", ab.sets, "Comma-separated 1-based set indices (default: all)");
  a->add_option("--iterations", ab.iterations, "Train each set for this many iterations (0: describe only)");
  a->add_option("--eval-instances", ab.eval_instances, "2-agent instances for the solve rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    return fail(ErrorCode::Usage, err.what());
  }

  try {
    if (*g) return run_gen_data(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*c) return run_compare(cmp);
    if (*r) return run_render(rn);
    if (*a) return run_ablate(ab);
  } catch (const Error& err) {
    return fail(err.code(), err.what());
  } catch (const std::exception& err) {
    return fail(ErrorCode::Io, err.what());
  }
  return 0;
}
