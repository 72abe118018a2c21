#pragma once

// PPO with GAE and a single parameter vector shared by every agent.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <exception>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "pfl/environment.hpp"
#include "pfl/error.hpp"
#include "pfl/io.hpp"
#include "pfl/observation.hpp"
#include "pfl/policynet.hpp"

namespace pfl {

struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double epsilon = 0.2;
  double lr = 3e-4;
  int minibatch = 256;
  int epochs = 4;
  int batch_size = 8192;  // transitions per iteration (whole episodes)
  int workers = 1;
  int iterations = 100;
  std::uint64_t seed = 1;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  bool normalize_advantages = true;
  int envs_per_group = 16;  // episodes stepped in lockstep for batched inference
  int grad_chunk = 64;      // samples per independent gradient partial
  int checkpoint_every = 0;
  std::filesystem::path out_dir;  // empty: no files
};

inline void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) fail("gamma must lie in [0,1]");
  if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) fail("lambda must lie in [0,1]");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) fail("epsilon must lie in (0,1)");
  if (!(c.lr >= 0.0)) fail("learning rate must be non-negative");
  if (c.minibatch < 1 || c.epochs < 1 || c.batch_size < 1) fail("batch sizes must be positive");
  if (c.workers < 1) fail("workers must be positive");
  if (c.iterations < 0) fail("iterations must be non-negative");
  if (c.envs_per_group < 1 || c.grad_chunk < 1) fail("group sizes must be positive");
}

struct Transition {
  Observation obs;
  double action_raw = 0.0;
  double action = 0.0;  // clipped, as applied
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  int agent = 0;
  std::int64_t episode = 0;
  double advantage = 0.0;
  double target = 0.0;
};

struct EpisodeSummary {
  int agents = 0;
  double reward = 0.0;  // mean over agents of the summed total reward
  int solved_at = -1;   // first step with a conflict-free state, -1 if never
  int steps = 0;
};

struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<EpisodeSummary> episodes;
};

// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(std::size_t(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Seed of one episode, independent of scheduling.
inline std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t iteration, std::uint64_t episode) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(iteration),
                    std::uint32_t(iteration >> 32), std::uint32_t(episode),
                    std::uint32_t(episode >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t(words[0]) << 32) | words[1];
}

namespace detail {

struct LiveEpisode {
  std::mt19937_64 rng;
  EnvState state;
  std::vector<std::vector<Transition>> per_agent;
  EpisodeSummary summary;
};

// Steps a group of episodes in lockstep so every step is one batched forward.
template <class T>
void run_group(const PolicyValueNet<T>& net, std::span<const T> params, const EnvConfig& env,
               const ObsConfig& obs, std::uint64_t seed, std::uint64_t iteration,
               std::int64_t first_episode, int count, std::vector<RolloutBatch>& out) {
  std::vector<LiveEpisode> eps(static_cast<std::size_t>(count));
  for (int e = 0; e < count; ++e) {
    LiveEpisode& ep = eps[std::size_t(e)];
    ep.rng.seed(episode_seed(seed, iteration, std::uint64_t(first_episode + e)));
    ep.state = reset(generate_instance(env, ep.rng), env.horizon);
    ep.per_agent.resize(ep.state.size());
    ep.summary.agents = int(ep.state.size());
    if (is_conflict_free(ep.state)) ep.summary.solved_at = 0;
  }
  NetCache<T> cache;
  std::vector<Observation> batch;
  std::vector<std::pair<int, int>> owner;
  for (;;) {
    batch.clear();
    owner.clear();
    for (int e = 0; e < count; ++e) {
      const LiveEpisode& ep = eps[std::size_t(e)];
      if (ep.state.done) continue;
      std::vector<Observation> o = observe_all(ep.state, obs);
      for (std::size_t a = 0; a < o.size(); ++a) {
        batch.push_back(std::move(o[a]));
        owner.emplace_back(e, int(a));
      }
    }
    if (batch.empty()) break;
    net.pack(batch, cache.mapping, cache.self_aware);
    net.forward(params, cache);

    std::size_t k = 0;
    while (k < owner.size()) {
      const int e = owner[k].first;
      LiveEpisode& ep = eps[std::size_t(e)];
      const std::size_t n = ep.state.size();
      std::vector<double> actions(n);
      std::vector<Transition> pending(n);
      for (std::size_t a = 0; a < n; ++a, ++k) {
        const PolicyOutput out = net.output(cache, int(k));
        const ActionSample s = sample_action(out, ep.rng);
        Transition& tr = pending[a];
        tr.obs = std::move(batch[k]);
        tr.action_raw = s.raw;
        tr.action = s.clipped;
        tr.log_prob_old = log_prob(out, s.raw);
        tr.value = out.value;
        tr.agent = int(a);
        tr.episode = first_episode + e;
        actions[a] = s.clipped;
      }
      const StepResult r = step(ep.state, actions, env);
      for (std::size_t a = 0; a < n; ++a) {
        pending[a].reward = r.reward.total[a];
        pending[a].done = r.done;
        ep.summary.reward += r.reward.total[a] / double(n);
        ep.per_agent[a].push_back(std::move(pending[a]));
      }
      ep.summary.steps = ep.state.step;
      if (ep.summary.solved_at < 0 && is_conflict_free(ep.state)) {
        ep.summary.solved_at = ep.state.step;
      }
    }
  }
  for (int e = 0; e < count; ++e) {
    LiveEpisode& ep = eps[std::size_t(e)];
    RolloutBatch& b = out[std::size_t(e)];
    for (auto& traj : ep.per_agent) {
      for (auto& tr : traj) b.transitions.push_back(std::move(tr));
    }
    b.episodes.push_back(ep.summary);
  }
}

}  // namespace detail

// Collects whole episodes, in episode order, until at least `transitions`
// transitions are pooled. Each agent's trajectory is contiguous.
template <class T>
RolloutBatch collect_rollouts(const PolicyValueNet<T>& net, std::span<const T> params,
                              const EnvConfig& env, const ObsConfig& obs, const TrainConfig& train,
                              std::uint64_t iteration, std::size_t transitions) {
  validate(env);
  validate(train);
  RolloutBatch batch;
  std::int64_t next_episode = 0;
  const int group = train.envs_per_group;
  while (batch.transitions.size() < transitions) {
    // One wave: `workers` groups; results beyond the target are discarded.
    const int groups = train.workers;
    std::vector<std::vector<RolloutBatch>> results(static_cast<std::size_t>(groups));
    parallel_for(std::size_t(groups), train.workers, [&](std::size_t g) {
      results[g].resize(std::size_t(group));
      detail::run_group(net, params, env, obs, train.seed, iteration,
                        next_episode + std::int64_t(g) * group, group, results[g]);
    });
    for (auto& r : results) {
      for (auto& ep : r) {
        if (batch.transitions.size() >= transitions) break;
        for (auto& tr : ep.transitions) batch.transitions.push_back(std::move(tr));
        batch.episodes.push_back(ep.episodes.front());
      }
    }
    next_episode += std::int64_t(groups) * group;
  }
  return batch;
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> targets;
};

// Standard GAE recursion; the value after a done step is taken as zero.
inline GaeResult gae(std::span<const double> rewards, std::span<const double> values,
                     std::span<const bool> dones, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw Error(ErrorCode::Arity, "gae: rewards, values and dones must have equal length");
  }
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.targets.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = (dones[i] || i + 1 == n) ? 0.0 : values[i + 1];
    const double carry = dones[i] ? 0.0 : next_adv;
    const double delta = rewards[i] + gamma * next_value - values[i];
    next_adv = delta + gamma * lambda * carry;
    r.advantages[i] = next_adv;
    r.targets[i] = next_adv + values[i];
  }
  return r;
}

// Fills advantages and value targets for every agent trajectory in the batch.
inline void compute_advantages(RolloutBatch& batch, double gamma, double lambda) {
  auto& tr = batch.transitions;
  std::size_t start = 0;
  while (start < tr.size()) {
    std::size_t end = start + 1;
    while (end < tr.size() && tr[end].episode == tr[start].episode &&
           tr[end].agent == tr[start].agent) {
      ++end;
    }
    const std::size_t n = end - start;
    std::vector<double> r(n), v(n);
    std::unique_ptr<bool[]> d(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = tr[start + i].reward;
      v[i] = tr[start + i].value;
      d[i] = tr[start + i].done;
    }
    const GaeResult g = gae(r, v, std::span<const bool>(d.get(), n), gamma, lambda);
    for (std::size_t i = 0; i < n; ++i) {
      tr[start + i].advantage = g.advantages[i];
      tr[start + i].target = g.targets[i];
    }
    start = end;
  }
}

inline void normalize_advantages(RolloutBatch& batch) {
  auto& tr = batch.transitions;
  if (tr.size() < 2) return;
  double mean = 0.0;
  for (const auto& t : tr) mean += t.advantage;
  mean /= double(tr.size());
  double var = 0.0;
  for (const auto& t : tr) var += (t.advantage - mean) * (t.advantage - mean);
  const double sd = std::sqrt(var / double(tr.size()));
  for (auto& t : tr) t.advantage = (t.advantage - mean) / (sd + 1e-8);
}

struct LossParts {
  double loss = 0.0;
  double surrogate = 0.0;  // mean of the clipped objective (to be maximized)
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

struct PpoCoefficients {
  double epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
};

// Per-sample terms of the PPO loss given the current network outputs.
// Fills the upstream gradients (already divided by `scale`).
inline void ppo_sample_terms(const PolicyOutput& out, const Transition& tr, const PpoCoefficients& k,
                             double scale, LossParts& acc, double& d_mu, double& d_log_sigma,
                             double& d_value) {
  const double lp = log_prob(out, tr.action_raw);
  const double ratio = std::exp(lp - tr.log_prob_old);
  const double adv = tr.advantage;
  const double clipped = std::clamp(ratio, 1.0 - k.epsilon, 1.0 + k.epsilon);
  const double unclipped_term = ratio * adv;
  const double clipped_term = clipped * adv;
  const bool use_unclipped = unclipped_term <= clipped_term;
  const double surr = use_unclipped ? unclipped_term : clipped_term;
  const double verr = out.value - tr.target;
  const double entropy = out.log_sigma + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

  acc.surrogate += surr / scale;
  acc.value_loss += verr * verr / scale;
  acc.entropy += entropy / scale;
  acc.loss += (-surr + k.value_coef * verr * verr - k.entropy_coef * entropy) / scale;
  acc.clip_fraction += (ratio < 1.0 - k.epsilon || ratio > 1.0 + k.epsilon ? 1.0 : 0.0) / scale;
  acc.approx_kl += (tr.log_prob_old - lp) / scale;

  // d(-surr)/d lp; zero when the clipped branch is selected.
  const double d_lp = use_unclipped ? -unclipped_term / scale : 0.0;
  const double sigma = out.sigma();
  const double z = (tr.action_raw - out.mu) / sigma;
  d_mu = d_lp * z / sigma;
  d_log_sigma = d_lp * (z * z - 1.0) - k.entropy_coef / scale;
  d_value = 2.0 * k.value_coef * verr / scale;
}

// Loss and gradient over `samples` (indices into the batch). Chunks of
// `chunk` samples are processed independently and summed in order.
template <class T>
LossParts ppo_loss(const PolicyValueNet<T>& net, std::span<const T> params,
                   const std::vector<Transition>& batch, std::span<const std::size_t> samples,
                   const PpoCoefficients& k, std::span<T> grad, int workers = 1, int chunk = 64) {
  if (samples.empty()) throw Error(ErrorCode::Arity, "ppo_loss needs a non-empty batch");
  std::fill(grad.begin(), grad.end(), T(0));
  const std::size_t n_chunks = (samples.size() + std::size_t(chunk) - 1) / std::size_t(chunk);
  std::vector<std::vector<T>> partial(n_chunks);
  std::vector<LossParts> parts(n_chunks);
  const double scale = double(samples.size());
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::size_t lo = c * std::size_t(chunk);
    const std::size_t hi = std::min(samples.size(), lo + std::size_t(chunk));
    std::vector<Observation> obs;
    obs.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) obs.push_back(batch[samples[i]].obs);
    NetCache<T> cache;
    net.pack(obs, cache.mapping, cache.self_aware);
    net.forward(params, cache);
    const int b = int(hi - lo);
    nn::Mat<T> dp(2, b), dv(1, b);
    for (int s = 0; s < b; ++s) {
      double dmu = 0, dls = 0, dval = 0;
      ppo_sample_terms(net.output(cache, s), batch[samples[lo + std::size_t(s)]], k, scale,
                       parts[c], dmu, dls, dval);
      dp(0, s) = T(dmu);
      dp(1, s) = T(dls);
      dv(0, s) = T(dval);
    }
    partial[c].assign(grad.size(), T(0));
    net.backward(params, cache, dp, dv, partial[c]);
  });
  LossParts total;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += partial[c][i];
    total.loss += parts[c].loss;
    total.surrogate += parts[c].surrogate;
    total.value_loss += parts[c].value_loss;
    total.entropy += parts[c].entropy;
    total.clip_fraction += parts[c].clip_fraction;
    total.approx_kl += parts[c].approx_kl;
  }
  return total;
}

template <class T>
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  void step(std::span<T> params, std::span<const T> grad) {
    if (grad.size() != params.size()) throw Error(ErrorCode::Shape, "adam: gradient size mismatch");
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, double(t));
    const double c2 = 1.0 - std::pow(beta2, double(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = double(grad[i]);
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[i] = T(double(params[i]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
};

// Scales the gradient so its global L2 norm is at most `max_norm`; returns
// the norm before scaling.
template <class T>
double clip_grad_norm(std::span<T> grad, double max_norm) {
  double sq = 0.0;
  for (T g : grad) sq += double(g) * double(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (T& g : grad) g = T(double(g) * s);
  }
  return norm;
}

struct IterationMetrics {
  int iteration = 0;
  double reward_mean = 0.0;
  double episode_length_mean = 0.0;  // steps to the first conflict-free state, T if never
  double solve_rate = 0.0;
  double loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  std::size_t transitions = 0;
  double wall_time = 0.0;  // seconds since training started
};

inline json to_json(const IterationMetrics& m) {
  return {{"iteration", m.iteration},       {"reward_mean", m.reward_mean},
          {"episode_length_mean", m.episode_length_mean},
          {"solve_rate", m.solve_rate},     {"loss", m.loss},
          {"value_loss", m.value_loss},     {"clip_fraction", m.clip_fraction},
          {"approx_kl", m.approx_kl},       {"grad_norm", m.grad_norm},
          {"transitions", m.transitions},   {"wall_time", m.wall_time}};
}

inline IterationMetrics summarize(const RolloutBatch& b, int horizon) {
  IterationMetrics m;
  m.transitions = b.transitions.size();
  if (b.episodes.empty()) return m;
  for (const EpisodeSummary& e : b.episodes) {
    m.reward_mean += e.reward;
    m.episode_length_mean += e.solved_at >= 0 ? e.solved_at : horizon;
    m.solve_rate += e.solved_at >= 0 ? 1.0 : 0.0;
  }
  const double n = double(b.episodes.size());
  m.reward_mean /= n;
  m.episode_length_mean /= n;
  m.solve_rate /= n;
  return m;
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<IterationMetrics> metrics;
};

using TrainCallback = std::function<void(const IterationMetrics&, std::span<const float>)>;

inline Checkpoint make_checkpoint(const PolicyValueNet<float>& net, std::vector<float> params,
                                  const EnvConfig& env, const ObsConfig& obs, std::int64_t iteration,
                                  std::vector<std::uint64_t> seeds) {
  Checkpoint c;
  c.net = net.config();
  c.obs = obs;
  c.env = env;
  c.manifest = net.manifest();
  c.params = std::move(params);
  c.iteration = iteration;
  c.seeds = std::move(seeds);
  return c;
}

// Full training loop. With `init` set, training resumes from that checkpoint.
inline TrainResult train(const EnvConfig& env, const ObsConfig& obs, const NetConfig& net_config,
                         const TrainConfig& config, const TrainCallback& on_iteration = {},
                         const Checkpoint* init = nullptr) {
  validate(env);
  validate(obs);
  validate(net_config);
  validate(config);
  const PolicyValueNet<float> net(net_config, obs);
  std::vector<float> params;
  std::vector<std::uint64_t> seeds;
  std::int64_t start_iteration = 0;
  if (init != nullptr) {
    if (!(init->manifest == net.manifest())) {
      throw Error(ErrorCode::Shape, "initial checkpoint does not match the network config");
    }
    params = init->params;
    seeds = init->seeds;
    start_iteration = init->iteration;
  } else {
    std::mt19937_64 init_rng(config.seed);
    params = net.init_params(init_rng);
  }
  seeds.push_back(config.seed);

  std::ofstream log;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    log.open(config.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!log) throw Error(ErrorCode::Io, "cannot write metrics log in " + config.out_dir.string());
  }

  Adam<float> adam;
  adam.lr = config.lr;
  const PpoCoefficients coef{config.epsilon, config.value_coef, config.entropy_coef};
  std::vector<float> grad(params.size());
  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < config.iterations; ++it) {
    const std::int64_t global_it = start_iteration + it;
    RolloutBatch batch = collect_rollouts<float>(net, params, env, obs, config,
                                                 std::uint64_t(global_it),
                                                 std::size_t(config.batch_size));
    IterationMetrics m = summarize(batch, env.horizon);
    m.iteration = int(global_it);
    compute_advantages(batch, config.gamma, config.lambda);
    if (config.normalize_advantages) normalize_advantages(batch);

    std::mt19937_64 shuffle_rng(episode_seed(config.seed ^ 0x5eedULL, std::uint64_t(global_it), 0));
    std::vector<std::size_t> order(batch.transitions.size());
    LossParts last;
    int updates = 0;
    double grad_norm_sum = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t(0));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t lo = 0; lo < order.size(); lo += std::size_t(config.minibatch)) {
        const std::size_t hi = std::min(order.size(), lo + std::size_t(config.minibatch));
        const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
        const LossParts parts = ppo_loss<float>(net, params, batch.transitions, idx, coef, grad,
                                                config.workers, config.grad_chunk);
        double gsq = 0.0;
        for (float g : grad) gsq += double(g) * double(g);
        if (!std::isfinite(parts.loss) || !std::isfinite(gsq)) {
          if (!config.out_dir.empty()) {
            save_checkpoint(config.out_dir / "divergence.ckpt",
                            make_checkpoint(net, params, env, obs, global_it, seeds));
            json dump = {{"iteration", global_it}, {"epoch", epoch},      {"minibatch_start", lo},
                         {"loss", parts.loss},     {"surrogate", parts.surrogate},
                         {"value_loss", parts.value_loss}, {"grad_sq_norm", gsq}};
            write_file(config.out_dir / "divergence.json", dump.dump(2) + "\n");
          }
          throw Error(ErrorCode::Divergence,
                      "non-finite loss at iteration " + std::to_string(global_it) + ", epoch " +
                          std::to_string(epoch));
        }
        grad_norm_sum += clip_grad_norm<float>(grad, config.max_grad_norm);
        adam.step(params, grad);
        last = parts;
        ++updates;
      }
    }
    m.loss = last.loss;
    m.value_loss = last.value_loss;
    m.clip_fraction = last.clip_fraction;
    m.approx_kl = last.approx_kl;
    m.grad_norm = updates > 0 ? grad_norm_sum / updates : 0.0;
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(m);
    if (log) {
      append_jsonl(log, to_json(m));
      log.flush();
    }
    if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
        (it + 1) % config.checkpoint_every == 0) {
      save_checkpoint(config.out_dir / ("iter_" + std::to_string(global_it + 1) + ".ckpt"),
                      make_checkpoint(net, params, env, obs, global_it + 1, seeds));
    }
    if (on_iteration) on_iteration(m, params);
  }

  result.checkpoint = make_checkpoint(net, std::move(params), env, obs,
                                      start_iteration + config.iterations, seeds);
  if (!config.out_dir.empty()) save_checkpoint(config.out_dir / "final.ckpt", result.checkpoint);
  return result;
}

}  // namespace pfl
