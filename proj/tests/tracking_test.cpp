#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "interocept/tracking.hpp"

using namespace interocept;

namespace {

VelocityProfile triangle_10hz() {
  VelocityProfile p{10.0, {}};
  for (int i = 0; i <= 40; ++i) {
    const double t = i / 10.0;
    p.samples.push_back(t <= 2.0 ? t : 4.0 - t);
  }
  return p;
}

}  // namespace

TEST(ArcLength, ConstantProfileExact) {
  const VelocityProfile p{20.0, std::vector<double>(201, 1.0)};
  EXPECT_EQ(arc_length(p, 0.0, 10.0, Trapezoid{}), 10.0);
}

TEST(ArcLength, TriangleTrapezoid) {
  EXPECT_NEAR(arc_length(triangle_10hz(), 0.0, 4.0, Trapezoid{}), 4.0, 1e-12);
}

TEST(ArcLength, TriangleMonteCarlo) {
  const double d = arc_length(triangle_10hz(), 0.0, 4.0, MonteCarlo{100000, 7});
  EXPECT_NEAR(d, 4.0, 0.04);
  EXPECT_EQ(d, arc_length(triangle_10hz(), 0.0, 4.0, MonteCarlo{100000, 7}));
}

TEST(ArcLength, PartialIntervalInterpolatesEndpoints) {
  // area under v(t) = t on [0.25, 1.75] is (1.75^2 - 0.25^2) / 2
  EXPECT_NEAR(arc_length(triangle_10hz(), 0.25, 1.75, Trapezoid{}), 1.5, 1e-12);
  // across the apex
  EXPECT_NEAR(arc_length(triangle_10hz(), 1.5, 2.5, Trapezoid{}), 2.0 - 0.125 - 0.125, 1e-12);
}

TEST(ArcLength, InvalidRange) {
  const auto p = triangle_10hz();
  for (auto [a, b] : {std::pair{2.0, 1.0}, std::pair{-0.1, 1.0}, std::pair{0.0, 4.5}}) {
    try {
      arc_length(p, a, b, Trapezoid{});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidRange);
    }
  }
}

TEST(ArcLengthProperty, Additive) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  VelocityProfile p{20.0, {}};
  for (int i = 0; i < 300; ++i) p.samples.push_back(u(rng));
  const double dur = p.duration();
  std::uniform_real_distribution<double> t(0.0, dur);
  for (int k = 0; k < 200; ++k) {
    double a = t(rng), b = t(rng), c = t(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double whole = arc_length(p, a, c, Trapezoid{});
    const double parts = arc_length(p, a, b, Trapezoid{}) + arc_length(p, b, c, Trapezoid{});
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, whole));
  }
}

TEST(PositionAlongPath, Examples) {
  const Path p{{{0, 0}, {1, 0}, {2, 0}}, 2.0, 2.0};
  const Point2 mid = position_along_path(p, 1.0, 1.5);
  EXPECT_DOUBLE_EQ(mid.x, 2.0);
  EXPECT_DOUBLE_EQ(mid.y, 0.5);
  const Point2 first = position_along_path(p, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(first.x, 0.5);
  const Point2 end = position_along_path(p, 1.0, 1e6);
  EXPECT_DOUBLE_EQ(end.x, 2.5);
  EXPECT_DOUBLE_EQ(end.y, 0.5);
  try {
    position_along_path(Path{}, 1.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPath);
  }
}

TEST(PositionAlongPathProperty, ContinuousAndOnPolyline) {
  const Path p{{{0, 0}, {1, 1}, {2, 1}, {2, 2}, {3, 3}}, 0.0, 0.0};
  Point2 prev = position_along_path(p, 0.5, 0.0);
  for (double s = 0.001; s < 3.0; s += 0.001) {
    const Point2 q = position_along_path(p, 0.5, s);
    EXPECT_LE(std::hypot(q.x - prev.x, q.y - prev.y), 0.001 + 1e-12);
    EXPECT_LT(distance_to_path(p, 0.5, q), 1e-12);
    prev = q;
  }
}

TEST(Proximity, Examples) {
  const std::vector<RobotPosition> two{{"A", 0.0, 0.0}, {"B", 3.0, 4.0}};
  EXPECT_TRUE(check_proximity(two, 5.0).empty());
  const auto alerts = check_proximity(two, 5.1, 9);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_EQ(alerts[0].distance_m, 5.0);
  EXPECT_EQ(alerts[0].tick, 9);

  const std::vector<RobotPosition> three{{"C", 0.0, 0.0}, {"A", 0.1, 0.0}, {"B", 0.0, 0.1}};
  const auto all = check_proximity(three, 1.0);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].robot_a, "A");
  EXPECT_EQ(all[0].robot_b, "B");
  EXPECT_EQ(all[2].robot_a, "B");
  EXPECT_EQ(all[2].robot_b, "C");

  const std::vector<RobotPosition> dup{{"A", 0.0, 0.0}, {"A", 1.0, 0.0}};
  try {
    check_proximity(dup, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
  }
}

TEST(ProximityProperty, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RobotPosition> ps;
    for (int i = 0; i < 6; ++i) ps.push_back({std::string(1, static_cast<char>('A' + i)), u(rng), u(rng)});
    const double th = 0.5 + u(rng) / 2.0;
    std::size_t expected = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        expected += std::hypot(ps[i].x - ps[j].x, ps[i].y - ps[j].y) < th ? 1 : 0;
      }
    }
    EXPECT_EQ(check_proximity(ps, th).size(), expected);
  }
}

TEST(Heatmap, CountsAndBoundaries) {
  const GridMap g = build_grid(4, 4, 0.5, {}, {});
  EXPECT_EQ(visit_heatmap({}, g).counts, std::vector<long>(16, 0));
  std::vector<PoseSample> log;
  for (int i = 0; i < 5; ++i) log.push_back({i, "A", 0.6, 0.7});
  log.push_back({5, "B", 1.0, 0.5});  // exactly on a corner: floor puts it in (2,1)
  log.push_back({6, "B", 9.0, 0.5});
  const Heatmap h = visit_heatmap(log, g);
  EXPECT_EQ(h.at({1, 1}), 5);
  EXPECT_EQ(h.at({2, 1}), 1);
  EXPECT_EQ(h.discarded, 1);
  const auto j = heatmap_to_json(h);
  EXPECT_EQ(j[1][1], 5);
}
