#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mlsimp/distance.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace mlsimp;
using mlsimp::support::random_planar;

namespace {

PlanarPoint P(double x, double y, std::int64_t t = 0) { return {x, y, t}; }

}  // namespace

TEST(Ped, Basics) {
  EXPECT_DOUBLE_EQ(ped(P(1, 0), P(0, 0), P(2, 0)), 0.0);
  EXPECT_DOUBLE_EQ(ped(P(1, 1), P(0, 0), P(2, 0)), 1.0);
  EXPECT_DOUBLE_EQ(ped(P(3, 4), P(0, 0), P(0, 0)), 5.0);
  EXPECT_DOUBLE_EQ(ped(P(-3, 4), P(0, 0), P(2, 0)), 5.0);
}

TEST(Ped, ZeroOnlyOnSegment) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const PlanarPoint a = P(u(rng) * 100, u(rng) * 100), b = P(u(rng) * 100, u(rng) * 100);
    const double r = u(rng);
    EXPECT_NEAR(ped(P(a.x + r * (b.x - a.x), a.y + r * (b.y - a.y)), a, b), 0.0, 1e-9);
    const double off = 1.0 + u(rng);
    const double nx = -(b.y - a.y), ny = b.x - a.x, len = std::hypot(nx, ny);
    EXPECT_GT(ped(P(a.x + r * (b.x - a.x) + off * nx / len, a.y + r * (b.y - a.y) + off * ny / len), a, b), 0.5);
  }
}

TEST(Sed, HandCases) {
  EXPECT_DOUBLE_EQ(sed(P(5, 3, 5), P(0, 0, 0), P(10, 0, 10)), 3.0);
  EXPECT_DOUBLE_EQ(sed(P(4, 0, 4), P(0, 0, 0), P(10, 0, 10)), 0.0);
  EXPECT_THROW(sed(P(0, 0, 3), P(0, 0, 3), P(1, 1, 3)), DegenerateError);
  EXPECT_THROW(sed(P(0, 0, 30), P(0, 0, 0), P(1, 1, 10)), ContractError);
}

TEST(Sed, TimeTranslationInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int k = 0; k < 200; ++k) {
    const PlanarPoint a = P(u(rng), u(rng), 10), b = P(u(rng), u(rng), 50), p = P(u(rng), u(rng), 27);
    const std::int64_t s = 1'000'000'007;
    EXPECT_NEAR(sed(p, a, b), sed(P(p.x, p.y, p.t + s), P(a.x, a.y, a.t + s), P(b.x, b.y, b.t + s)), 1e-9);
  }
}

TEST(DistanceOracle, PedAndSedMatchDirectFormulas) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  std::uniform_int_distribution<int> dt(1, 500);
  for (int k = 0; k < 1000; ++k) {
    const PlanarPoint a = P(u(rng), u(rng), 0);
    const PlanarPoint b = P(u(rng), u(rng), dt(rng) + 1);
    const PlanarPoint p = P(u(rng), u(rng), std::uniform_int_distribution<std::int64_t>(0, b.t)(rng));
    EXPECT_NEAR(ped(p, a, b), support::ped_direct(p, a, b), 1e-9);
    EXPECT_NEAR(sed(p, a, b), support::sed_direct(p, a, b), 1e-9);
  }
}

TEST(Dad, Headings) {
  EXPECT_NEAR(dad(P(0, 0), P(1, 0), P(5, 5), P(9, 5)), 0.0, 1e-12);
  EXPECT_NEAR(dad(P(0, 0), P(1, 0), P(9, 5), P(5, 5)), std::numbers::pi, 1e-12);
  EXPECT_NEAR(dad(P(0, 0), P(0, 1), P(0, 0), P(3, 0)), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(dad(P(0, 0), P(1, 0.01), P(0, 0), P(1, -0.01)), 0.02, 1e-4);
  EXPECT_THROW(dad(P(1, 1), P(1, 1), P(0, 0), P(1, 0)), DegenerateError);
}

TEST(AnchorSegments, HandEnumeration) {
  Trajectory t{"a", {}};
  for (int i = 0; i < 5; ++i) t.points.push_back({116.0 + 0.001 * i, 40.0, i});
  const std::vector<std::size_t> keep{0, 3, 4};
  const auto segs = anchor_segments(t, keep);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].first_covered, 0u);
  EXPECT_EQ(segs[0].last_covered, 2u);
  EXPECT_EQ(segs[1].first_covered, 3u);
  EXPECT_EQ(segs[1].last_covered, 4u);
  EXPECT_EQ(segs[1].start_index, 3u);
  EXPECT_EQ(segs[1].end_index, 4u);

  const auto identity = anchor_segments(t, t);
  ASSERT_EQ(identity.size(), 4u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(identity[j].first_covered, identity[j].last_covered);

  Trajectory chord{"a", {t.points.front(), t.points.back()}};
  const auto one = anchor_segments(t, chord);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].last_covered, 4u);

  const std::vector<std::size_t> no_end{0, 2};
  EXPECT_THROW(anchor_segments(t, no_end), ContractError);
  Trajectory shuffled{"a", {t.points[3], t.points[1]}};
  EXPECT_THROW(anchor_segments(t, shuffled), ContractError);
}

TEST(SimplificationError, IdentityIsZeroForEveryKind) {
  const auto pts = random_planar(30, 1000.0, 7);
  std::vector<std::size_t> all(pts.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED, ErrorKind::DAD}) {
    EXPECT_EQ(simplification_error(pts, all, k), 0.0);
  }
}

TEST(SimplificationError, CollinearUniformMotionIsZero) {
  std::vector<PlanarPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(P(3.0 * i, -2.0 * i, 10 * i));
  const std::vector<std::size_t> ends{0, 9};
  EXPECT_NEAR(simplification_error(pts, ends, ErrorKind::PED), 0.0, 1e-9);
  EXPECT_NEAR(simplification_error(pts, ends, ErrorKind::SED), 0.0, 1e-9);
}

TEST(SimplificationError, MatchesBruteForceAndIsMonotone) {
  std::mt19937_64 rng(8);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 3 + inst % 12;
    const auto pts = random_planar(n, 500.0, 100 + inst);
    std::vector<std::size_t> keep{0};
    for (std::size_t i = 1; i + 1 < n; ++i)
      if (rng() % 3 == 0) keep.push_back(i);
    keep.push_back(n - 1);
    for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED, ErrorKind::DAD}) {
      const double e = simplification_error(pts, keep, k);
      EXPECT_NEAR(e, support::simplification_error_brute(pts, keep, k), 1e-9);
    }
  }
}

TEST(SimplificationError, AddingARetainedPointCanRaiseTheMax) {
  // A path that doubles back: the extra anchor re-routes point 2 onto a farther chord.
  const std::vector<PlanarPoint> pts{P(0, 0, 0), P(10, 0, 1), P(5, 0, 2), P(20, 0, 3)};
  const std::vector<std::size_t> ends{0, 3}, more{0, 1, 3};
  EXPECT_NEAR(simplification_error(pts, ends, ErrorKind::PED), 0.0, 1e-12);
  EXPECT_NEAR(simplification_error(pts, more, ErrorKind::PED), 5.0, 1e-12);
}

TEST(SimplificationError, TrajectoryOverloadAgreesWithPlanar) {
  const auto db = support::random_database({.trajectories = 3, .min_points = 12, .max_points = 12, .seed = 9});
  const Projection proj = Projection::for_database(db);
  const Trajectory& t = db[1];
  Trajectory s{t.id, {t.points[0], t.points[4], t.points[9], t.points[11]}};
  const std::vector<std::size_t> keep{0, 4, 9, 11};
  const auto pts = proj.project(t);
  EXPECT_NEAR(simplification_error(t, s, ErrorKind::SED, proj), simplification_error(pts, keep, ErrorKind::SED), 1e-9);
}

TEST(Edr, Basics) {
  const auto a = random_planar(3, 100.0, 1);
  EXPECT_EQ(edr(a, a, 1.0), 0u);
  EXPECT_EQ(edr(a, std::span<const PlanarPoint>(), 1.0), 3u);
  EXPECT_EQ(edr(std::span<const PlanarPoint>(), a, 1.0), 3u);
  const std::vector<PlanarPoint> x{P(0, 0), P(10, 0), P(20, 0)}, y{P(0.5, 0.5), P(20, 0)};
  EXPECT_EQ(edr(x, y, 1.0), 1u);
}

TEST(Edr, MatchesRecursiveOracleExactly) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_planar(rng() % 13, 300.0, rng());
    const auto b = random_planar(rng() % 13, 300.0, rng());
    const double th = 50.0 + static_cast<double>(rng() % 200);
    const std::size_t d = edr(a, b, th);
    EXPECT_EQ(d, support::edr_recursive(a, b, th));
    EXPECT_EQ(d, edr(b, a, th));
    EXPECT_LE(d, std::max(a.size(), b.size()));
  }
}

TEST(Projection, OriginAtMeanAndMetres) {
  TrajectoryDatabase db({Trajectory{"a", {{10.0, 20.0, 0}, {12.0, 22.0, 5}}}});
  const Projection proj = Projection::for_database(db);
  EXPECT_DOUBLE_EQ(proj.origin_lon(), 11.0);
  EXPECT_DOUBLE_EQ(proj.origin_lat(), 21.0);
  const PlanarPoint p = proj.project(Point{11.0, 22.0, 7});
  EXPECT_NEAR(p.x, 0.0, 1e-9);
  EXPECT_NEAR(p.y, kEarthRadiusMeters * std::numbers::pi / 180.0, 1e-6);
  EXPECT_EQ(p.t, 7);
}
