#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfl/geometry.hpp"

using namespace pfl;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_point(Point p, double x, double y, double tol = 1e-9) {
  EXPECT_NEAR(p.x, x, tol);
  EXPECT_NEAR(p.y, y, tol);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Usage;
}

}  // namespace

TEST(Clip, Examples) {
  EXPECT_EQ(clip(5, 0, 10), 5);
  EXPECT_EQ(clip(-3, 0, 10), 0);
  EXPECT_EQ(clip(12, 0, 10), 10);
  EXPECT_EQ(code_of([] { clip(1, 2, 1); }), ErrorCode::InvalidBounds);
}

TEST(InitialOrigin, Examples) {
  expect_point(initial_origin({100, 100}, {40, 20}, Dims{600, 400}), 100, 100);
  expect_point(initial_origin({590, 100}, {40, 20}, Dims{600, 400}), 560, 100);
  expect_point(initial_origin({0, 0}, {40, 20}, Dims{600, 400}), 0, 0);
}

TEST(InitialOrigin, InfeasibleLabel) {
  EXPECT_EQ(code_of([] { initial_origin({10, 10}, {700, 20}, Dims{600, 400}); }),
            ErrorCode::InfeasibleLabel);
}

TEST(InitialOrigin, DoubleClipProjectsOntoSlider) {
  // Both clips active in the top-right corner: the clipped origin would lie
  // inside the slider rectangle.
  const Point a{595, 395};
  const Dims d{40, 20};
  const Point o = initial_origin(a, d, Dims{600, 400});
  EXPECT_LE(std::abs(signed_boundary_distance(slider_rect(a, d), o)), 1e-9);
}

TEST(SliderOrigin, Examples) {
  const Point a{100, 100};
  const Dims d{40, 20};
  expect_point(slider_origin(a, d, 0.0), 100, 90);
  expect_point(slider_origin(a, d, kPi / 2), 80, 100);
  expect_point(slider_origin(a, d, std::atan(20.0 / 40.0)), 100, 100);
}

TEST(SliderOrigin, OnCircumferenceAndAnchorOnLabel) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 5000; ++i) {
    const Point a{u(rng) * 600, u(rng) * 400};
    const Dims d{5 + u(rng) * 100, 5 + u(rng) * 40};
    const double phi = u(rng) * 2 * kPi;
    const Point o = slider_origin(a, d, phi);
    EXPECT_LE(std::abs(signed_boundary_distance(slider_rect(a, d), o)), 1e-9);
    // the anchor sits on the closed label boundary
    EXPECT_LE(std::abs(signed_boundary_distance(make_rect(o, d), a)), 1e-9);
  }
}

TEST(SliderOrigin, Continuity) {
  const Point a{50, 60};
  const Dims d{70, 20};
  const double bound = (2 * (d.w + d.h)) / (2 * kPi);
  for (int k = 0; k < 20000; ++k) {
    const double phi = 2 * kPi * k / 20000.0;
    const double dphi = 1e-6;
    const double moved = distance(slider_origin(a, d, phi), slider_origin(a, d, phi + dphi));
    // Along the short edges the point moves faster than the mean rate; the
    // steepest rate is half the longer side over sin^2 at the corner angle.
    const double corner = std::atan2(d.h, d.w);
    const double worst = 0.5 * d.h / (std::sin(corner) * std::sin(corner));
    EXPECT_LE(moved, std::max(bound, worst) * dphi * (1 + 1e-3) + 1e-12);
  }
}

TEST(AngleOfOrigin, RoundTripExamples) {
  const Point a{100, 100};
  const Dims d{40, 20};
  EXPECT_NEAR(angle_of_origin(a, d, {100, 90}), 0.0, 1e-12);
  EXPECT_NEAR(angle_of_origin(a, d, {80, 100}), kPi / 2, 1e-12);
  EXPECT_NEAR(angle_of_origin(a, d, {100, 100}), std::atan(0.5), 1e-12);
  // bottom-right corner of sigma: (-pi/2, 0) branch, i.e. (3pi/2, 2pi)
  const double br = angle_of_origin(a, d, {100, 80});
  EXPECT_GT(br, 1.5 * kPi);
  EXPECT_LT(br, 2 * kPi);
  expect_point(slider_origin(a, d, br), 100, 80);
}

TEST(AngleOfOrigin, OffManifold) {
  EXPECT_EQ(code_of([] { angle_of_origin({100, 100}, {40, 20}, {80, 90}); }), ErrorCode::OffManifold);
}

TEST(AngleOfOrigin, RandomRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 5000; ++i) {
    const Point a{u(rng) * 600, u(rng) * 400};
    const Dims d{5 + u(rng) * 100, 5 + u(rng) * 40};
    const double phi = u(rng) * 2 * kPi;
    const Point o = slider_origin(a, d, phi);
    const double back = angle_of_origin(a, d, o);
    double diff = std::fmod(std::abs(back - phi), 2 * kPi);
    diff = std::min(diff, 2 * kPi - diff);
    EXPECT_LE(diff, 1e-9);
    EXPECT_LE(distance(slider_origin(a, d, back), o), 1e-9);
  }
}

TEST(OverlapArea, Examples) {
  EXPECT_DOUBLE_EQ(overlap_area({{0, 0}, 10, 10}, {{0, 0}, 10, 10}), 100.0);
  EXPECT_DOUBLE_EQ(overlap_area({{0, 0}, 10, 10}, {{20, 0}, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(overlap_area({{0, 0}, 10, 10}, {{5, 5}, 10, 10}), 25.0);
  EXPECT_DOUBLE_EQ(overlap_area({{0, 0}, 10, 10}, {{10, 0}, 10, 10}), 0.0);  // shared edge
  EXPECT_DOUBLE_EQ(overlap_area({{0, 0}, 10, 10}, {{10, 10}, 10, 10}), 0.0);  // shared corner
}

TEST(OverlapArea, PixelGridOracle) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(0, 400), size(1, 300);  // tenths of a pixel
  for (int i = 0; i < 2000; ++i) {
    const Rect a{{pos(rng) / 10.0, pos(rng) / 10.0}, size(rng) / 10.0, size(rng) / 10.0};
    const Rect b{{pos(rng) / 10.0, pos(rng) / 10.0}, size(rng) / 10.0, size(rng) / 10.0};
    const double got = overlap_area(a, b);
    const double ref = oracle::grid_overlap({a.x0(), a.y0(), a.w, a.h}, {b.x0(), b.y0(), b.w, b.h}, 0.1);
    EXPECT_NEAR(got, ref, 0.01);
    EXPECT_DOUBLE_EQ(got, overlap_area(b, a));
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, std::min(a.area(), b.area()) + 1e-9);
  }
}

TEST(PenetrationDistance, Examples) {
  const Rect r{{0, 0}, 10, 10};
  EXPECT_DOUBLE_EQ(penetration_distance(r, {5, 5}), 5.0);
  EXPECT_DOUBLE_EQ(penetration_distance(r, {0, 5}), 0.0);
  EXPECT_DOUBLE_EQ(penetration_distance(r, {20, 5}), 0.0);
  EXPECT_NEAR(oracle::sampled_boundary_distance({0, 0, 10, 10}, 5, 5, 0.01), 5.0, 0.01);
}

TEST(PenetrationDistance, BoundarySamplingOracle) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    const Rect r{{u(rng) * 50, u(rng) * 50}, 1 + u(rng) * 40, 1 + u(rng) * 20};
    const Point p{r.x0() - 5 + u(rng) * (r.w + 10), r.y0() - 5 + u(rng) * (r.h + 10)};
    const double got = penetration_distance(r, p);
    EXPECT_EQ(got > 0.0, strictly_inside(r, p));
    if (strictly_inside(r, p)) {
      EXPECT_NEAR(got, oracle::sampled_boundary_distance({r.x0(), r.y0(), r.w, r.h}, p.x, p.y, 0.01), 0.01);
    } else {
      EXPECT_EQ(got, 0.0);
    }
  }
}

TEST(CastRay, SingleLabelTowardPlusX) {
  const std::vector<Rect> labels{{{280, 190}, 40, 20}};
  const std::vector<Point> anchors{{280, 190}};
  const SceneView scene{{{0, 0}, 600, 400}, labels, anchors, 0, 2.0};
  const RayReading r = cast_ray(scene, 0, 32);
  EXPECT_NEAR(r.distance, (600.0 - 300.0 - 20.0) / std::hypot(600.0, 400.0), 1e-12);
  EXPECT_EQ(r.hit_type, HitType::Bound);
  EXPECT_EQ(r.count, 0.0);
  EXPECT_EQ(r.mass, 0.0);
  // segment-sampling oracle
  const auto m = oracle::march({0, 0, 600, 400}, {{280, 190, 40, 20}}, {{280, 190}}, 0, 2.0, 1, 0, 0.05);
  EXPECT_NEAR(r.distance * std::hypot(600.0, 400.0), m.t_hit - m.t_self, 0.1);
}

TEST(CastRay, LoneAgentSeesOnlyBound) {
  const std::vector<Rect> labels{{{100, 100}, 60, 20}};
  const std::vector<Point> anchors{{100, 100}};
  const SceneView scene{{{0, 0}, 600, 400}, labels, anchors, 0, 2.0};
  for (int k = 0; k < 32; ++k) {
    const RayReading r = cast_ray(scene, k, 32);
    EXPECT_EQ(r.hit_type, HitType::Bound) << k;
    EXPECT_EQ(r.count, 0.0);
    EXPECT_EQ(r.mass, 0.0);
  }
}

TEST(CastRay, CoincidentLabelsGiveNegativeDistance) {
  const std::vector<Rect> labels{{{100, 100}, 60, 20}, {{100, 100}, 60, 20}};
  const std::vector<Point> anchors{{100, 100}, {100, 100}};
  const SceneView scene{{{0, 0}, 600, 400}, labels, anchors, 0, 2.0};
  bool negative_label = false;
  for (int k = 0; k < 32; ++k) {
    const RayReading r = cast_ray(scene, k, 32);
    negative_label = negative_label || (r.distance < 0 && r.hit_type == HitType::Label);
  }
  EXPECT_TRUE(negative_label);
}

TEST(CastRay, AnchorDiscHit) {
  const std::vector<Rect> labels{{{100, 100}, 40, 20}, {{400, 300}, 40, 20}};
  const std::vector<Point> anchors{{100, 100}, {250, 110}};
  const SceneView scene{{{0, 0}, 600, 400}, labels, anchors, 0, 2.0};
  const RayReading r = cast_ray(scene, 0, 32);  // +x from (120, 110)
  EXPECT_EQ(r.hit_type, HitType::Anchor);
  EXPECT_NEAR(r.distance * std::hypot(600.0, 400.0), (250.0 - 2.0 - 120.0) - 20.0, 1e-9);
}

TEST(CastRay, CountAndMassOfPiercedLabels) {
  // Two labels straddling the +x ray, one off to the side.
  const std::vector<Rect> labels{{{0, 190}, 20, 20}, {{100, 180}, 40, 40}, {{300, 195}, 10, 10}, {{100, 300}, 30, 30}};
  const std::vector<Point> anchors{{0, 190}, {100, 180}, {300, 195}, {100, 300}};
  const SceneView scene{{{0, 0}, 600, 400}, labels, anchors, 0, 2.0};
  const RayReading r = cast_ray(scene, 0, 32);
  EXPECT_EQ(r.hit_type, HitType::Label);
  EXPECT_DOUBLE_EQ(r.count, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.mass, (1600.0 + 100.0) / (400.0 + 1600.0 + 100.0 + 900.0));
}

TEST(CastRay, SegmentSamplingOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  const Rect region{{0, 0}, 160, 120};
  int compared = 0, grazing = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + int(u(rng) * 4);
    std::vector<Rect> labels;
    std::vector<Point> anchors;
    std::vector<oracle::Box> boxes;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) {
      const Point a{u(rng) * 160, u(rng) * 120};
      const Dims d{10 + u(rng) * 30, 5 + u(rng) * 10};
      const Point o = slider_origin(a, d, u(rng) * 2 * kPi);
      labels.push_back(make_rect(o, d));
      anchors.push_back(a);
      boxes.push_back({o.x, o.y, d.w, d.h});
      pts.emplace_back(a.x, a.y);
    }
    const SceneView scene{region, labels, anchors, 0, 2.0};
    const Point c = labels[0].center();
    if (!(c.x > 0 && c.x < 160 && c.y > 0 && c.y < 120)) continue;
    for (int k = 0; k < 16; ++k) {
      const Point dir = ray_direction(k, 16);
      const RayContact raw = cast_ray_raw(scene, dir);
      const auto m = oracle::march({0, 0, 160, 120}, boxes, pts, 0, 2.0, dir.x, dir.y, 0.05);
      ++compared;
      if (std::abs((raw.t_hit - raw.t_self) - (m.t_hit - m.t_self)) > 0.1 &&
          oracle::grazing({0, 0, 160, 120}, boxes, pts, 0, 2.0, dir.x, dir.y, 0.05, 0.1)) {
        ++grazing;
      } else {
        EXPECT_NEAR(raw.t_hit - raw.t_self, m.t_hit - m.t_self, 0.1) << "trial " << trial << " ray " << k;
      }
      const RayReading r = cast_ray(scene, k, 16);
      EXPECT_GE(r.count, 0.0);
      EXPECT_LE(r.count, 1.0);
      EXPECT_GE(r.mass, 0.0);
      EXPECT_LE(r.mass, 1.0);
      EXPECT_GE(r.distance * region.diagonal(), -labels[0].diagonal() / 2 - 1e-9);
    }
  }
  EXPECT_LE(grazing, compared / 100);
}
