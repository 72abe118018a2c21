// A few PPO iterations on 1-2 agent instances, then inference on a
// 10-anchor instance with the resulting checkpoint.

#include <iostream>

#include "pfl/config.hpp"
#include "pfl/inference.hpp"
#include "pfl/trainer.hpp"

int main(int argc, char** argv) {
  using namespace pfl;
  RunConfig rc;
  rc.train.iterations = argc > 1 ? std::atoi(argv[1]) : 5;
  rc.train.batch_size = 2048;

  const TrainResult res = train(rc.env, rc.obs, rc.net, rc.train,
                                [](const IterationMetrics& m, std::span<const float>) {
                                  std::cout << to_json(m).dump() << "\n";
                                });
  save_checkpoint("tiny.ckpt", res.checkpoint);

  EnvConfig ec;
  ec.min_agents = ec.max_agents = 10;
  std::mt19937_64 rng(3);
  const Instance inst = generate_instance(ec, rng);
  const InferResult r = infer(load_checkpoint("tiny.ckpt"), inst, 500, 11);
  std::cout << "10 anchors: " << (r.complete ? "complete" : "incomplete") << " in " << r.steps
            << " steps\n";
}
