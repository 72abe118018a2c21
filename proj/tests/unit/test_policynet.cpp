#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "pfl/observation.hpp"
#include "pfl/policynet.hpp"

using namespace pfl;

namespace {

std::size_t count_for(Variant v, const ObsConfig& obs = ObsConfig{}) {
  NetConfig c;
  c.variant = v;
  return param_count<float>(c, obs);
}

}  // namespace

TEST(CircularConv, ConstantInputAllOnesKernel) {
  const int length = 32, channels = 3, kernel = 5, filters = 2;
  std::vector<double> in(std::size_t(length * channels));
  for (int p = 0; p < length; ++p) {
    in[std::size_t(p * channels + 0)] = 0.5;
    in[std::size_t(p * channels + 1)] = -1.0;
    in[std::size_t(p * channels + 2)] = 2.0;
  }
  const std::vector<double> w(std::size_t(filters * kernel * channels), 1.0);
  const std::vector<double> b(std::size_t(filters), 0.0);
  const std::vector<double> out = circular_conv1d(in, length, channels, w, b, kernel);
  ASSERT_EQ(out.size(), std::size_t(length * filters));
  for (double y : out) EXPECT_DOUBLE_EQ(y, kernel * 1.5);
}

TEST(CircularConv, ImpulseWraps) {
  const int length = 32;
  std::vector<double> in(length, 0.0);
  in[0] = 1.0;
  const std::vector<double> w{1.0, 2.0, 3.0};
  const std::vector<double> b{0.0};
  const std::vector<double> out = circular_conv1d(in, length, 1, w, b, 3);
  for (int p = 0; p < length; ++p) {
    const bool expect_nonzero = p == 31 || p == 0 || p == 1;
    EXPECT_EQ(out[std::size_t(p)] != 0.0, expect_nonzero) << p;
  }
  // tap j reads position p + j - 1
  EXPECT_DOUBLE_EQ(out[31], 3.0);
  EXPECT_DOUBLE_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
}

TEST(CircularConv, TilingOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int length = 5 + trial % 40, channels = 1 + trial % 4, kernel = 1 + 2 * (trial % 3);
    const int filters = 1 + trial % 5;
    std::vector<double> in(static_cast<std::size_t>(length * channels)),
        w(static_cast<std::size_t>(filters * kernel * channels)),
        b(static_cast<std::size_t>(filters));
    for (double& x : in) x = normal(rng);
    for (double& x : w) x = normal(rng);
    for (double& x : b) x = normal(rng);
    const std::vector<double> got = circular_conv1d(in, length, channels, w, b, kernel);
    const std::vector<double> ref = oracle::tiled_conv(in, length, channels, w, b, kernel);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-12);
  }
}

TEST(CircularConv, KernelWiderThanSequence) {
  const std::vector<double> in(4, 1.0), w(5, 1.0), b(1, 0.0);
  EXPECT_THROW(circular_conv1d(in, 4, 1, w, b, 5), Error);
}

TEST(NetConfig, Validation) {
  NetConfig c;
  c.kernel = 4;
  EXPECT_THROW(validate(c), Error);
  c.kernel = 5;
  c.shared_width = 0;
  EXPECT_THROW(validate(c), Error);
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(parse_variant("2Dns"), Variant::Dense2);
  EXPECT_THROW(parse_variant("3Dns"), Error);
}

TEST(ParamCount, Bands) {
  const std::size_t conv = count_for(Variant::Conv);
  EXPECT_EQ(conv, 412227u);
  EXPECT_GE(conv, 300000u);
  EXPECT_LE(conv, 500000u);
  EXPECT_LT(count_for(Variant::Baseline), conv);
}

TEST(ParamCount, DoublingSharedWidth) {
  NetConfig c;
  const ObsConfig obs;
  const std::size_t base = param_count<float>(c, obs);
  c.shared_width *= 2;
  const std::size_t doubled = param_count<float>(c, obs);
  // shared layer (in + 1) x S plus the S x w inputs of the two branches
  const std::size_t in = std::size_t(obs.n_rays * 32 + 64);
  const std::size_t s = 256, w = 256;
  EXPECT_EQ(doubled - base, (in + 1) * s + 2 * s * w);
}

TEST(ParamCount, ManifestIsContiguous) {
  for (Variant v : kAllVariants) {
    NetConfig c;
    c.variant = v;
    const PolicyValueNet<float> net(c, ObsConfig{});
    std::size_t offset = 0;
    for (const auto& t : net.manifest().tensors) {
      EXPECT_EQ(t.offset, offset) << t.name;
      offset += t.size();
    }
    EXPECT_EQ(offset, net.param_count());
  }
}

TEST(Forward, ZeroParamsGiveZeroOutputs) {
  std::mt19937_64 rng(1);
  for (Variant v : kAllVariants) {
    NetConfig c;
    c.variant = v;
    const PolicyValueNet<double> net(c, ObsConfig{});
    const auto obs = gradcheck::random_observations(net.shape(), 3, rng);
    const std::vector<double> p = net.zero_params();
    for (const PolicyOutput& o : net.forward(p, std::span<const Observation>(obs))) {
      EXPECT_EQ(o.mu, 0.0);
      EXPECT_EQ(o.log_sigma, 0.0);
      EXPECT_EQ(o.value, 0.0);
    }
  }
}

TEST(Forward, DeterministicInitAndOutputs) {
  const PolicyValueNet<float> net(NetConfig{}, ObsConfig{});
  std::mt19937_64 r1(5), r2(5), ro(6);
  const std::vector<float> a = net.init_params(r1);
  const std::vector<float> b = net.init_params(r2);
  EXPECT_EQ(a, b);
  const auto obs = gradcheck::random_observations(net.shape(), 4, ro);
  const auto x = net.forward(a, std::span<const Observation>(obs));
  const auto y = net.forward(a, std::span<const Observation>(obs));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].mu, y[i].mu);
    EXPECT_EQ(x[i].log_sigma, y[i].log_sigma);
    EXPECT_EQ(x[i].value, y[i].value);
    // batched and single evaluation agree
    const PolicyOutput s = net.forward(a, obs[i]);
    EXPECT_NEAR(s.mu, x[i].mu, 1e-6);
    EXPECT_NEAR(s.value, x[i].value, 1e-5);
  }
}

TEST(Forward, ShapeMismatch) {
  const PolicyValueNet<double> net(NetConfig{}, ObsConfig{});
  std::mt19937_64 rng(1);
  ObsShape wrong = net.shape();
  wrong.self_size += 1;
  const auto obs = gradcheck::random_observations(wrong, 1, rng);
  try {
    net.forward(net.zero_params(), obs[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Shape);
  }
  const std::vector<double> short_params(10, 0.0);
  const auto good = gradcheck::random_observations(net.shape(), 1, rng);
  EXPECT_THROW(net.forward(short_params, good[0]), Error);
}

TEST(Forward, AllVariantsAllObservationSets) {
  std::mt19937_64 rng(3);
  for (Variant v : kAllVariants) {
    for (std::string_view n : observation_grid()) {
      const ObsConfig obs = parse_obs_notation(n);
      NetConfig c = gradcheck::small(v);
      const PolicyValueNet<double> net(c, obs);
      EXPECT_EQ(net.shape().size(), obs.size());
      const auto o = gradcheck::random_observations(net.shape(), 2, rng);
      const std::vector<double> p = net.init_params(rng);
      const auto out = net.forward(p, std::span<const Observation>(o));
      ASSERT_EQ(out.size(), 2u);
      for (const PolicyOutput& x : out) {
        EXPECT_TRUE(std::isfinite(x.mu) && std::isfinite(x.log_sigma) && std::isfinite(x.value));
      }
    }
  }
}

TEST(Backward, GradientCheckReducedWidths) {
  std::mt19937_64 rng(17);
  for (Variant v : kAllVariants) {
    for (auto act : {nn::Activation::Tanh}) {
      NetConfig c = gradcheck::small(v);
      c.activation = act;
      ObsConfig obs;
      obs.n_rays = 8;
      const PolicyValueNet<double> net(c, obs);
      const auto o = gradcheck::random_observations(net.shape(), 3, rng);
      const auto p = gradcheck::random_params(net, rng);
      const gradcheck::Report r = gradcheck::check(net, p, o, rng, 1e-4, 1e-3, 1e-6);
      EXPECT_EQ(r.failed, 0u) << to_string(v) << " worst " << r.worst << " in " << r.worst_name;
      EXPECT_EQ(r.checked, net.param_count());
    }
  }
}

TEST(Backward, ReluAwayFromKinks) {
  std::mt19937_64 rng(23);
  NetConfig c = gradcheck::small(Variant::ConvLn);
  c.activation = nn::Activation::Relu;
  ObsConfig obs;
  obs.n_rays = 8;
  const PolicyValueNet<double> net(c, obs);
  const auto o = gradcheck::random_observations(net.shape(), 2, rng);
  const auto p = gradcheck::random_params(net, rng);
  // h small enough that no pre-activation crosses zero for these inputs
  const gradcheck::Report r = gradcheck::check(net, p, o, rng, 1e-6, 1e-3, 1e-5);
  EXPECT_LE(double(r.failed), 0.01 * double(r.checked)) << r.worst_name;
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  std::mt19937_64 rng(4);
  const PolicyValueNet<double> net(gradcheck::small(Variant::Conv), ObsConfig{});
  const auto o = gradcheck::random_observations(net.shape(), 3, rng);
  const auto p = net.init_params(rng);
  NetCache<double> cache;
  net.pack(o, cache.mapping, cache.self_aware);
  net.forward(p, cache);
  std::vector<double> g(p.size(), 0.0);
  net.backward(p, cache, nn::Mat<double>::Zero(2, 3), nn::Mat<double>::Zero(1, 3), g);
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(Backward, HeadsOnlyTouchTheirOwnBranches) {
  std::mt19937_64 rng(4);
  for (Variant v : kAllVariants) {
    const PolicyValueNet<double> net(gradcheck::small(v), ObsConfig{});
    const auto o = gradcheck::random_observations(net.shape(), 3, rng);
    const auto p = gradcheck::random_params(net, rng);
    NetCache<double> cache;
    net.pack(o, cache.mapping, cache.self_aware);
    net.forward(p, cache);
    std::vector<double> gv(p.size(), 0.0), gp(p.size(), 0.0);
    net.backward(p, cache, nn::Mat<double>::Zero(2, 3), nn::Mat<double>::Ones(1, 3), gv);
    net.backward(p, cache, nn::Mat<double>::Ones(2, 3), nn::Mat<double>::Zero(1, 3), gp);
    for (const auto& t : net.manifest().tensors) {
      const bool policy_only = t.name.rfind("policy.", 0) == 0;
      const bool value_only = t.name.rfind("value.", 0) == 0;
      double sv = 0.0, sp = 0.0;
      for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
        sv += std::abs(gv[i]);
        sp += std::abs(gp[i]);
      }
      if (policy_only) {
        EXPECT_EQ(sv, 0.0) << t.name;
      }
      if (value_only) {
        EXPECT_EQ(sp, 0.0) << t.name;
      }
      if (!policy_only && !value_only) {
        EXPECT_GT(sv, 0.0) << t.name;
        EXPECT_GT(sp, 0.0) << t.name;
      }
    }
  }
}

TEST(Backward, SharedParamsAreNotMutated) {
  std::mt19937_64 rng(9);
  const PolicyValueNet<double> net(gradcheck::small(Variant::Conv), ObsConfig{});
  const auto p = net.init_params(rng);
  const auto copy = p;
  const auto o = gradcheck::random_observations(net.shape(), 5, rng);
  net.forward(p, std::span<const Observation>(o));
  EXPECT_EQ(p, copy);
}

TEST(SampleAction, DegenerateSigma) {
  std::mt19937_64 rng(1);
  const PolicyOutput o{0.3, -60.0, 0.0};
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_action(o, rng).clipped, 0.3, 1e-20);
  const PolicyOutput big{-4.0, -60.0, 0.0};
  EXPECT_EQ(sample_action(big, rng).clipped, -1.0);
}

TEST(SampleAction, MonteCarloAgainstNormalCdf) {
  std::mt19937_64 rng(11);
  const PolicyOutput o{0.0, 0.0, 0.0};
  const int n = 100000;
  double sum = 0.0;
  int upper = 0, lower = 0;
  for (int i = 0; i < n; ++i) {
    const ActionSample a = sample_action(o, rng);
    EXPECT_GE(a.clipped, -1.0);
    EXPECT_LE(a.clipped, 1.0);
    sum += a.clipped;
    upper += a.clipped == 1.0;
    lower += a.clipped == -1.0;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  const double tail = 1.0 - oracle::phi(1.0);
  EXPECT_NEAR(double(upper) / n, tail, 0.01);
  EXPECT_NEAR(double(lower) / n, tail, 0.01);
}

TEST(SampleAction, Saturation) {
  std::mt19937_64 rng(12);
  const PolicyOutput o{5.0, 0.0, 0.0};
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += sample_action(o, rng).clipped == 1.0;
  EXPECT_GE(ones, 9990);
}

TEST(LogProb, Examples) {
  const PolicyOutput o{0.4, std::log(0.7), 0.0};
  const double mode = -std::log(0.7 * std::sqrt(2 * std::numbers::pi));
  EXPECT_NEAR(log_prob(o, 0.4), mode, 1e-15);
  EXPECT_NEAR(log_prob(o, 0.4 + 0.7), mode - 0.5, 1e-15);
}

TEST(LogProb, QuadratureOracle) {
  const PolicyOutput o{-0.2, std::log(0.35), 0.0};
  const double s = 0.35;
  // composite Simpson rule
  auto integrate = [&](double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = std::exp(log_prob(o, a)) + std::exp(log_prob(o, b));
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * std::exp(log_prob(o, a + i * h));
    return acc * h / 3.0;
  };
  EXPECT_NEAR(integrate(o.mu - 14 * s, o.mu + 14 * s, 20000), 1.0, 1e-9);
  EXPECT_NEAR(integrate(o.mu, o.mu + s, 2000), oracle::phi(1.0) - 0.5, 1e-9);
}
