#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mlsimp/baselines.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace mlsimp;

namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<PlanarPoint> straight(std::size_t n) {
  std::vector<PlanarPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({10.0 * i, 5.0 * i, static_cast<std::int64_t>(i)});
  return pts;
}

Trajectory from_planar(const std::string& id, const std::vector<PlanarPoint>& pts) {
  Trajectory t{id, {}};
  for (const PlanarPoint& p : pts) t.points.push_back(support::to_point(p.x, p.y, p.t));
  return t;
}

}  // namespace

TEST(TopDown, IdentityAndCollinear) {
  const auto pts = support::random_planar(12, 100.0, 1);
  for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED, ErrorKind::DAD}) {
    EXPECT_EQ(top_down_indices(pts, 12, k), iota(12));
    EXPECT_EQ(top_down_indices(pts, 40, k), iota(12));
  }
  const auto line = straight(9);
  const auto two = top_down_indices(line, 2, ErrorKind::PED);
  EXPECT_EQ(two, (std::vector<std::size_t>{0, 8}));
  EXPECT_NEAR(simplification_error(line, two, ErrorKind::PED), 0.0, 1e-9);
  EXPECT_THROW(top_down_indices(line, 1, ErrorKind::PED), std::invalid_argument);
}

TEST(TopDown, VeeKeepsApex) {
  const std::vector<PlanarPoint> vee{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 1, 3}, {4, 0, 4}};
  EXPECT_EQ(top_down_indices(vee, 3, ErrorKind::PED), (std::vector<std::size_t>{0, 2, 4}));
  // Exhaustive search over size-3 subsets agrees.
  double best = 1e18;
  std::size_t arg = 0;
  for (std::size_t m = 1; m < 4; ++m) {
    const double e = simplification_error(vee, std::vector<std::size_t>{0, m, 4}, ErrorKind::PED);
    if (e < best) best = e, arg = m;
  }
  EXPECT_EQ(arg, 2u);
}

TEST(TopDown, ErrorNonIncreasingInBudgetOnConvexArcs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double turn = 0.3 + 2.5 * u(rng), r = 500.0 + 2000.0 * u(rng);
    std::vector<PlanarPoint> pts;
    for (int i = 0; i < 60; ++i) {
      const double a = turn * i / 59.0;
      pts.push_back({r * std::sin(a), r * (1.0 - std::cos(a)), 10 * i});
    }
    double prev = 1e18;
    for (std::size_t b = 2; b <= 60; ++b) {
      const double e = simplification_error(pts, top_down_indices(pts, b, ErrorKind::PED), ErrorKind::PED);
      EXPECT_LE(e, prev + 1e-9) << "arc " << k << " budget " << b;
      prev = e;
    }
  }
}

TEST(TopDown, ErrorCanRiseWithBudgetWhenThePathDoublesBack) {
  // Point 2 is worst against chord 0-3 (10 m); point 1 then projects past the end of sub-chord 0-2.
  const std::vector<PlanarPoint> pts{{0, 0, 0}, {90, 9, 1}, {50, 10, 2}, {100, 0, 3}};
  const auto two = top_down_indices(pts, 2, ErrorKind::PED), three = top_down_indices(pts, 3, ErrorKind::PED);
  EXPECT_GT(simplification_error(pts, three, ErrorKind::PED), simplification_error(pts, two, ErrorKind::PED));
}

TEST(TopDownWhole, IdentityAndBentGetsTheExtraPoints) {
  std::vector<PlanarPoint> bent;
  for (int i = 0; i < 10; ++i) bent.push_back({100.0 * i, i < 5 ? 0.0 : 300.0 * (i - 4), i});
  TrajectoryDatabase db({from_planar("s", straight(10)), from_planar("b", bent)});
  const Projection proj = Projection::for_database(db);
  const auto full = top_down_whole(db, 20, ErrorKind::PED, proj);
  EXPECT_EQ(full.database(), db);
  const auto s = top_down_whole(db, 5, ErrorKind::PED, proj);
  EXPECT_EQ(s.kept_indices()[0].size(), 2u);
  EXPECT_EQ(s.kept_indices()[1].size(), 3u);
  EXPECT_THROW(top_down_whole(db, 3, ErrorKind::PED, proj), std::invalid_argument);
}

TEST(TopDownWhole, SingleTrajectoryReducesToTopDown) {
  const auto corpus = support::corner_corpus({.trajectories = 1, .seed = 4});
  const Projection proj = Projection::for_database(corpus.db);
  const auto pts = proj.project(corpus.db[0]);
  for (std::size_t b : {2u, 5u, 17u, 60u}) {
    for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED}) {
      EXPECT_EQ(top_down_whole(corpus.db, b, k, proj).kept_indices()[0], top_down_indices(pts, b, k));
    }
  }
}

TEST(BottomUp, IdentityAndCollinearOrder) {
  const auto pts = support::random_planar(8, 100.0, 2);
  EXPECT_EQ(bottom_up_indices(pts, 8, ErrorKind::SED), iota(8));
  const auto line = straight(6);
  // Every removal costs 0, so the lowest index goes first.
  EXPECT_EQ(bottom_up_indices(line, 5, ErrorKind::PED), (std::vector<std::size_t>{0, 2, 3, 4, 5}));
  EXPECT_EQ(bottom_up_indices(line, 3, ErrorKind::PED), (std::vector<std::size_t>{0, 4, 5}));
}

TEST(BottomUp, MatchesBruteForceRemovalOrder) {
  const std::vector<PlanarPoint> zigzag{{0, 0, 0}, {10, 8, 1}, {20, -3, 2}, {30, 6, 3}, {40, -9, 4}, {50, 0, 5}};
  EXPECT_EQ(bottom_up_indices(zigzag, 4, ErrorKind::PED), support::bottom_up_brute(zigzag, 4, ErrorKind::PED));
  for (int inst = 0; inst < 100; ++inst) {
    const auto pts = support::random_planar(6, 200.0, 50 + inst);
    for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED, ErrorKind::DAD})
      for (std::size_t b = 2; b <= 6; ++b) EXPECT_EQ(bottom_up_indices(pts, b, k), support::bottom_up_brute(pts, b, k));
  }
}

TEST(Uniform, IdentityAndReproducible) {
  const auto db = support::random_database({.trajectories = 10, .min_points = 5, .max_points = 9, .seed = 5});
  EXPECT_EQ(uniform_sample(db, db.total_points(), 1).database(), db);
  const auto a = uniform_sample(db, 17, 9), b = uniform_sample(db, 17, 9);
  EXPECT_EQ(a.kept_indices(), b.kept_indices());
  EXPECT_EQ(a.retained_points(), 17u);
}

TEST(Uniform, SelectionFrequencyIsFlat) {
  const auto db = support::random_database({.trajectories = 4, .min_points = 5, .max_points = 5, .seed = 6});
  const std::size_t total = db.total_points(), budget = 6, runs = 10000;
  std::vector<std::size_t> hits(total, 0);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto s = uniform_sample(db, budget, r);
    std::size_t base = 0;
    for (std::size_t t = 0; t < db.size(); ++t) {
      for (std::size_t i : s.kept_indices()[t]) ++hits[base + i];
      base += db[t].size();
    }
  }
  const double p = static_cast<double>(budget) / static_cast<double>(total);
  const double sd = std::sqrt(runs * p * (1 - p));
  for (std::size_t h : hits) EXPECT_NEAR(static_cast<double>(h), runs * p, 3.0 * sd * 1.5);
}

TEST(AllocateBudget, ProportionalWithLargestRemainders) {
  std::vector<Trajectory> ts;
  for (std::size_t n : {10u, 20u, 30u, 7u}) ts.push_back(from_planar(std::to_string(n), straight(n)));
  TrajectoryDatabase db(ts);
  for (std::size_t b : {0u, 1u, 6u, 13u, 50u, 67u}) {
    const auto s = allocate_budget(db, b);
    EXPECT_EQ(std::accumulate(s.begin(), s.end(), std::size_t{0}), b);
    for (std::size_t t = 0; t < db.size(); ++t) {
      const double exact = static_cast<double>(b) * db[t].size() / db.total_points();
      EXPECT_LE(std::fabs(static_cast<double>(s[t]) - exact), 1.0);
    }
  }
  EXPECT_EQ(allocate_budget(db, 6), (std::vector<std::size_t>{1, 2, 3, 0}));
}

TEST(Names, RoundTrip) {
  for (BaselineMethod m : {BaselineMethod::TopDownE, BaselineMethod::TopDownW, BaselineMethod::BottomUpE, BaselineMethod::Uniform}) {
    EXPECT_EQ(baseline_method_from_string(to_string(m)), m);
  }
  for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED, ErrorKind::DAD}) EXPECT_EQ(error_kind_from_string(to_string(k)), k);
  EXPECT_THROW(baseline_method_from_string("rlts"), std::invalid_argument);
}
