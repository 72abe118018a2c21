#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfl/environment.hpp"

using namespace pfl;

namespace {

Instance make_instance(std::vector<std::pair<Point, Dims>> anchors, Dims drawing = {600, 400}) {
  Instance inst;
  inst.drawing = {{0, 0}, drawing.w, drawing.h};
  for (auto& [p, d] : anchors) inst.anchors.push_back({p, d, ""});
  return inst;
}

// Kolmogorov-Smirnov statistic of samples against U(lo, hi).
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, f - double(i) / n, double(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST(GenerateInstance, DefaultConfigTwoAgents) {
  EnvConfig c;
  c.min_agents = c.max_agents = 2;
  std::mt19937_64 rng(42);
  const Instance inst = generate_instance(c, rng);
  ASSERT_EQ(inst.size(), 2u);
  for (const Anchor& a : inst.anchors) {
    EXPECT_GE(a.label.w, 60.0);
    EXPECT_LE(a.label.w, 90.0);
    EXPECT_DOUBLE_EQ(a.label.h, 20.0);
  }
}

TEST(GenerateInstance, SeededDeterminism) {
  EnvConfig c;
  std::mt19937_64 r1(9), r2(9);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(generate_instance(c, r1), generate_instance(c, r2));
}

TEST(GenerateInstance, UniformRanges) {
  EnvConfig c;
  c.min_agents = c.max_agents = 1;
  std::mt19937_64 rng(7);
  std::vector<double> ws, xs, ys;
  for (int i = 0; i < 10000; ++i) {
    const Instance inst = generate_instance(c, rng);
    ws.push_back(inst.anchors[0].label.w);
    xs.push_back(inst.anchors[0].point.x);
    ys.push_back(inst.anchors[0].point.y);
  }
  EXPECT_GE(*std::min_element(ws.begin(), ws.end()), 60.0);
  EXPECT_LE(*std::max_element(ws.begin(), ws.end()), 90.0);
  // critical value of the one-sample KS test at p = 0.01
  const double crit = 1.628 / std::sqrt(10000.0);
  EXPECT_LT(ks_uniform(ws, 60, 90), crit);
  EXPECT_LT(ks_uniform(xs, 0, 600), crit);
  EXPECT_LT(ks_uniform(ys, 0, 400), crit);
}

TEST(GenerateInstance, AgentCountRangeAndInitialConflict) {
  EnvConfig c;
  c.require_initial_conflict = true;
  std::mt19937_64 rng(1);
  int ones = 0, twos = 0;
  for (int i = 0; i < 400; ++i) {
    const Instance inst = generate_instance(c, rng);
    if (inst.size() == 1) {
      ++ones;
    } else {
      ++twos;
      EXPECT_FALSE(is_conflict_free(reset(inst, 10)));
    }
  }
  EXPECT_GT(ones, 100);
  EXPECT_GT(twos, 100);
}

TEST(Reset, Examples) {
  const EnvState s = reset(make_instance({{{100, 100}, {40, 20}}}), 100);
  EXPECT_EQ(s.origins[0], (Point{100, 100}));
  EXPECT_EQ(s.step, 0);

  const EnvState twin = reset(make_instance({{{100, 100}, {40, 20}}, {{100, 100}, {40, 20}}}), 100);
  EXPECT_EQ(twin.origins[0], twin.origins[1]);
  EXPECT_FALSE(is_conflict_free(twin));
  EXPECT_GT(overlap_value(twin, 0), 0.0);

  const EnvState corner = reset(make_instance({{{600, 400}, {40, 20}}}), 100);
  EXPECT_EQ(corner.origins[0], (Point{560, 380}));
}

TEST(Reset, InfeasibleLabel) {
  try {
    reset(make_instance({{{10, 10}, {700, 20}}}), 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleLabel);
  }
}

TEST(Step, SingleAgentZeroReward) {
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}}), 100);
  const std::vector<double> act{0.3};
  const StepResult r = step(s, act, EnvConfig{});
  EXPECT_EQ(r.reward.local[0], 0.0);
  EXPECT_EQ(r.reward.global, 0.0);
  EXPECT_EQ(r.reward.total[0], 0.0);
  EXPECT_TRUE(r.done);
}

TEST(Step, TwoOverlappingAgentsRewardAlgebra) {
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}, {{100, 100}, {40, 20}}}), 100);
  EnvConfig c;
  c.stop_when_conflict_free = false;
  // phi = pi/2 for agent 0 (origin (80,100)), phi = 0 for agent 1 (origin (100,90))
  const std::vector<double> act{-0.5, -1.0};
  const StepResult r = step(s, act, c);
  const double A = 20.0 * 10.0;  // [100,120]x[100,110]
  const double a = A / 800.0;
  EXPECT_NEAR(r.reward.local[0], -a, 1e-12);
  EXPECT_NEAR(r.reward.local[1], -a, 1e-12);
  EXPECT_NEAR(r.reward.global, -2 * a, 1e-12);
  EXPECT_NEAR(r.reward.total[0], -1.5 * a, 1e-12);
  EXPECT_NEAR(r.reward.total[1], -1.5 * a, 1e-12);
}

TEST(Step, HorizonDoneAndLatching) {
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}, {{100, 100}, {40, 20}}}), 3);
  const std::vector<double> same{0.1, 0.1};
  EnvConfig c;
  StepResult r;
  for (int i = 0; i < 3; ++i) {
    r = step(s, same, c);
    EXPECT_EQ(r.done, i == 2);
  }
  EXPECT_FALSE(is_conflict_free(s));
  try {
    step(s, same, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EpisodeFinished);
  }
}

TEST(Step, ConflictFreeLatchesDone) {
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}, {{130, 100}, {40, 20}}}), 100);
  EXPECT_FALSE(is_conflict_free(s));
  // phi = pi/2 and phi = 0 pull the labels apart
  const std::vector<double> apart{-0.5, -1.0};
  const StepResult r = step(s, apart, EnvConfig{});
  EXPECT_TRUE(is_conflict_free(s));
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.done);
  try {
    step(s, apart, EnvConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EpisodeFinished);
  }
}

TEST(Step, ArityError) {
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}}), 100);
  const std::vector<double> two{0.0, 0.0};
  try {
    step(s, two, EnvConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Arity);
  }
}

TEST(Step, DeterministicAndOnCircumference) {
  EnvConfig c;
  c.min_agents = 2;
  c.max_agents = 6;
  c.stop_when_conflict_free = false;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (PlacementMode mode : {PlacementMode::Absolute, PlacementMode::Delta}) {
    c.placement = mode;
    for (int trial = 0; trial < 50; ++trial) {
      const Instance inst = generate_instance(c, rng);
      EnvState a = reset(inst, 30), b = reset(inst, 30);
      for (int t = 0; t < 30; ++t) {
        std::vector<double> act(inst.size());
        for (double& x : act) x = u(rng);
        const StepResult ra = step(a, act, c);
        const StepResult rb = step(b, act, c);
        EXPECT_EQ(a.origins, b.origins);
        EXPECT_EQ(ra.reward.total, rb.reward.total);
        for (std::size_t i = 0; i < inst.size(); ++i) {
          const Anchor& an = inst.anchors[i];
          EXPECT_LE(std::abs(signed_boundary_distance(slider_rect(an.point, an.label), a.origins[i])), 1e-6);
        }
      }
    }
  }
}

TEST(Step, DeltaModeRotatesCurrentAngle) {
  EnvConfig c;
  c.placement = PlacementMode::Delta;
  c.delta_scale = 0.5;
  EnvState s = reset(make_instance({{{100, 100}, {40, 20}}}), 100);
  const double phi0 = s.angles[0];
  const std::vector<double> act{1.0};
  step(s, act, c);
  EXPECT_NEAR(s.angles[0], wrap_angle(phi0 + 0.5 * std::numbers::pi), 1e-12);
  EXPECT_LE(distance(s.origins[0], slider_origin({100, 100}, {40, 20}, phi0 + 0.5 * std::numbers::pi)), 1e-9);
}

TEST(OverlapValue, Examples) {
  const EnvState disjoint = reset(make_instance({{{100, 100}, {40, 20}}, {{300, 300}, {40, 20}}}), 10);
  EXPECT_EQ(overlap_value(disjoint, 0), 0.0);

  // agent 0 at (10,10) size 40x20; agents 1 and 2 cover parts of it
  const EnvState s = reset(make_instance({{{10, 10}, {40, 20}}, {{30, 20}, {40, 20}}, {{5, 5}, {10, 10}}}), 10);
  const double o1 = overlap_area(s.label(0), s.label(1));
  const double o2 = overlap_area(s.label(0), s.label(2));
  EXPECT_GT(o1, 0.0);
  EXPECT_GT(o2, 0.0);
  EXPECT_NEAR(overlap_value(s, 0), (o1 + o2) / 800.0, 1e-12);

  const EnvState twin = reset(make_instance({{{100, 100}, {40, 20}}, {{100, 100}, {40, 20}}}), 10);
  EXPECT_DOUBLE_EQ(overlap_value(twin, 0), 1.0);

  EnvConfig constant;
  constant.overlap_norm = OverlapNorm::Constant;
  constant.overlap_constant = 400.0;
  EXPECT_DOUBLE_EQ(overlap_value(twin, 0, constant), 2.0);
}

TEST(ConflictFree, Examples) {
  EXPECT_TRUE(is_conflict_free(reset(make_instance({}), 10)));
  EXPECT_TRUE(is_conflict_free(reset(make_instance({{{100, 100}, {40, 20}}}), 10)));
  // shared edge: labels [100,140] and [140,180]
  EXPECT_TRUE(is_conflict_free(reset(make_instance({{{100, 100}, {40, 20}}, {{140, 100}, {40, 20}}}), 10)));
  // anchor 1 strictly inside label 0, labels apart
  EXPECT_FALSE(is_conflict_free(reset(make_instance({{{100, 100}, {40, 20}}, {{120, 110}, {10, 5}}}), 10)));
}

TEST(Rewards, AlgebraOnRandomStates) {
  EnvConfig c;
  c.min_agents = 1;
  c.max_agents = 8;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 2000; ++trial) {
    const Instance inst = generate_instance(c, rng);
    EnvState s = reset(inst, 10);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Anchor& a = inst.anchors[i];
      s.origins[i] = slider_origin(a.point, a.label, u(rng));
    }
    const RewardTriple r = compute_rewards(s, c);
    double sum = 0.0;
    for (double v : r.local) sum += v;
    EXPECT_EQ(r.global, sum);
    bool any_overlap = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(r.total[i], 0.5 * r.global + 0.5 * r.local[i], 1e-12);
      EXPECT_LE(r.local[i], 0.0);
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        any_overlap = any_overlap || overlap_area(s.label(i), s.label(j)) > 0.0;
      }
    }
    const bool all_zero = std::all_of(r.total.begin(), r.total.end(), [](double v) { return v == 0.0; });
    EXPECT_EQ(all_zero, !any_overlap);
  }
}

TEST(Rewards, PenetrationPenaltyIsOptIn) {
  // anchor 1 lies 10 px deep inside label 0
  const EnvState s = reset(make_instance({{{100, 100}, {40, 20}}, {{120, 110}, {10, 5}}}), 10);
  const double plain = compute_rewards(s, EnvConfig{}).local[0];
  EXPECT_NEAR(plain, -overlap_value(s, 0), 1e-15);
  EnvConfig c;
  c.penetration_penalty = 1.0;
  EXPECT_NEAR(compute_rewards(s, c).local[0], plain - 10.0 / s.label(0).diagonal(), 1e-12);
}
