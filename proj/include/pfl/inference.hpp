#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pfl/environment.hpp"
#include "pfl/io.hpp"
#include "pfl/observation.hpp"
#include "pfl/policynet.hpp"

namespace pfl {

struct InferResult {
  Layout layout;
  bool complete = false;
  int steps = 0;
  double seconds = 0.0;
};

// Runs the shared policy on every agent until the state is conflict-free or
// the horizon is reached. All anchors are reported as placed: the outcome is
// either a complete labeling or a complete one with conflicts.
inline InferResult infer(const PolicyValueNet<float>& net, std::span<const float> params,
                         const EnvConfig& env_config, const ObsConfig& obs, const Instance& instance,
                         int horizon, std::uint64_t seed) {
  if (ObsShape::of(obs) != net.shape()) {
    throw Error(ErrorCode::Shape, "observation config does not match the network");
  }
  EnvConfig env = env_config;
  env.stop_when_conflict_free = true;
  env.horizon = horizon;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  EnvState s = reset(instance, horizon);
  InferResult r;
  r.complete = is_conflict_free(s);
  NetCache<float> cache;
  std::vector<double> actions(s.size());
  while (!r.complete && s.step < horizon) {
    const std::vector<Observation> o = observe_all(s, obs);
    net.pack(o, cache.mapping, cache.self_aware);
    net.forward(params, cache);
    for (std::size_t i = 0; i < s.size(); ++i) {
      actions[i] = sample_action(net.output(cache, int(i)), rng).clipped;
    }
    step(s, actions, env);
    r.complete = is_conflict_free(s);
  }
  r.steps = s.step;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.layout.labels.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) r.layout.labels[i] = {true, s.origins[i], std::nullopt};
  return r;
}

inline InferResult infer(const Checkpoint& ckpt, const Instance& instance, int horizon,
                         std::uint64_t seed) {
  const PolicyValueNet<float> net(ckpt.net, ckpt.obs);
  return infer(net, ckpt.params, ckpt.env, ckpt.obs, instance, horizon, seed);
}

// Same procedure with freshly initialized, untrained parameters.
inline InferResult random_policy_solve(const NetConfig& net_config, const ObsConfig& obs,
                                       const EnvConfig& env, const Instance& instance, int horizon,
                                       std::uint64_t init_seed, std::uint64_t seed) {
  const PolicyValueNet<float> net(net_config, obs);
  std::mt19937_64 init_rng(init_seed);
  const std::vector<float> params = net.init_params(init_rng);
  return infer(net, params, env, obs, instance, horizon, seed);
}

}  // namespace pfl
