#pragma once

// The structured config file read by every CLI command. Every section is
// optional and only the keys present override the defaults:
//   {"env": {...}, "obs": {...}, "net": {...}, "train": {...},
//    "baseline": {...}, "dataset": {...}, "eval": {...}}

#include <filesystem>
#include <string>

#include "pfl/benchmark.hpp"
#include "pfl/io.hpp"
#include "pfl/trainer.hpp"

namespace pfl {

struct RunConfig {
  EnvConfig env;
  ObsConfig obs;
  NetConfig net;
  TrainConfig train;
  BaselineConfig baseline;
  DatasetSpec dataset;
  EvalOptions eval;

  // Training instances: 1-2 agents, conflicting pairs, run to the horizon.
  RunConfig() {
    env.require_initial_conflict = true;
    env.stop_when_conflict_free = false;
  }
};

inline json to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"epsilon", c.epsilon},
          {"lr", c.lr},
          {"minibatch", c.minibatch},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"workers", c.workers},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"normalize_advantages", c.normalize_advantages},
          {"envs_per_group", c.envs_per_group},
          {"grad_chunk", c.grad_chunk},
          {"checkpoint_every", c.checkpoint_every}};
}

inline void merge(TrainConfig& c, const json& j) {
  detail::reject_unknown(j,
                         {"gamma", "lambda", "epsilon", "lr", "minibatch", "epochs", "batch_size",
                          "workers", "iterations", "seed", "value_coef", "entropy_coef",
                          "max_grad_norm", "normalize_advantages", "envs_per_group", "grad_chunk",
                          "checkpoint_every"},
                         "train");
  detail::read_opt(j, "gamma", c.gamma);
  detail::read_opt(j, "lambda", c.lambda);
  detail::read_opt(j, "epsilon", c.epsilon);
  detail::read_opt(j, "lr", c.lr);
  detail::read_opt(j, "minibatch", c.minibatch);
  detail::read_opt(j, "epochs", c.epochs);
  detail::read_opt(j, "batch_size", c.batch_size);
  detail::read_opt(j, "workers", c.workers);
  detail::read_opt(j, "iterations", c.iterations);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "value_coef", c.value_coef);
  detail::read_opt(j, "entropy_coef", c.entropy_coef);
  detail::read_opt(j, "max_grad_norm", c.max_grad_norm);
  detail::read_opt(j, "normalize_advantages", c.normalize_advantages);
  detail::read_opt(j, "envs_per_group", c.envs_per_group);
  detail::read_opt(j, "grad_chunk", c.grad_chunk);
  detail::read_opt(j, "checkpoint_every", c.checkpoint_every);
  validate(c);
}

inline void merge(BaselineConfig& c, const json& j) {
  detail::reject_unknown(j, {"slider_samples", "spiral_step", "spiral_radius_factor", "avoid_future_anchors"},
                         "baseline");
  detail::read_opt(j, "slider_samples", c.slider_samples);
  detail::read_opt(j, "spiral_step", c.spiral_step);
  detail::read_opt(j, "spiral_radius_factor", c.spiral_radius_factor);
  detail::read_opt(j, "avoid_future_anchors", c.avoid_future_anchors);
  validate(c);
}

inline void merge(DatasetSpec& c, const json& j) {
  detail::reject_unknown(j, {"instances_per_count", "text_min", "text_max", "font_size", "seed"},
                         "dataset");
  detail::read_opt(j, "instances_per_count", c.instances_per_count);
  detail::read_opt(j, "text_min", c.text_min);
  detail::read_opt(j, "text_max", c.text_max);
  detail::read_opt(j, "font_size", c.font_size);
  detail::read_opt(j, "seed", c.seed);
}

inline void merge(EvalOptions& c, const json& j) {
  detail::reject_unknown(j, {"runs", "horizon", "seed", "workers"}, "eval");
  detail::read_opt(j, "runs", c.runs);
  detail::read_opt(j, "horizon", c.horizon);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "workers", c.workers);
  if (c.runs < 1 || c.horizon < 1 || c.workers < 1) {
    throw Error(ErrorCode::InvalidConfig, "eval runs, horizon and workers must be positive");
  }
}

inline void merge(RunConfig& c, const json& j) {
  detail::reject_unknown(j, {"env", "obs", "net", "train", "baseline", "dataset", "eval"}, "top-level");
  if (j.contains("env")) merge(c.env, j["env"]);
  if (j.contains("obs")) merge(c.obs, j["obs"]);
  if (j.contains("net")) merge(c.net, j["net"]);
  if (j.contains("train")) merge(c.train, j["train"]);
  if (j.contains("baseline")) merge(c.baseline, j["baseline"]);
  if (j.contains("dataset")) merge(c.dataset, j["dataset"]);
  if (j.contains("eval")) merge(c.eval, j["eval"]);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  merge(c, parse_json(read_file(path), path.string()));
  return c;
}

}  // namespace pfl
