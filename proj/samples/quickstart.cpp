// Labels a small random instance with both greedy baselines and an untrained
// policy, then writes the three layouts as SVG.

#include <iostream>
#include <random>

#include "pfl/baselines.hpp"
#include "pfl/benchmark.hpp"
#include "pfl/svg.hpp"

int main() {
  using namespace pfl;
  DatasetSpec spec;
  std::mt19937_64 rng(7);
  const Instance inst = random_text_instance({600, 400}, 25, spec, rng);

  const Layout a = pbl_solve(inst, PblMode::A);
  const Layout ad = pbl_solve(inst, PblMode::AD);
  const InferResult rnd = random_policy_solve(NetConfig{}, ObsConfig{}, EnvConfig{}, inst, 500, 1, 2);

  std::cout << "pbl-a       placed " << a.placed_count() << "/" << inst.size() << "\n";
  std::cout << "pbl-ad      placed " << ad.placed_count() << "/" << inst.size() << "\n";
  std::cout << "marl-random " << (rnd.complete ? "conflict-free" : "conflicts remain") << " after "
            << rnd.steps << " steps\n";

  render_svg(inst, a, "quickstart_pbl_a.svg");
  render_svg(inst, ad, "quickstart_pbl_ad.svg");
  render_svg(inst, rnd.layout, "quickstart_random.svg");
}
