#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

namespace mlsimp::support {

namespace {

constexpr double kLon0 = 116.4;
constexpr double kLat0 = 39.9;
constexpr std::int64_t kEpoch0 = 1'200'000'000;

std::string name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

}  // namespace

Point to_point(double x_m, double y_m, std::int64_t t) {
  const double mx = kEarthRadiusMeters * std::numbers::pi / 180.0 * std::cos(kLat0 * std::numbers::pi / 180.0);
  const double my = kEarthRadiusMeters * std::numbers::pi / 180.0;
  return {kLon0 + x_m / mx, kLat0 + y_m / my, t};
}

CornerCorpus corner_corpus(const CornerOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, o.jitter_m);
  CornerCorpus out;
  std::vector<Trajectory> trajs;
  const std::size_t n = o.points;
  for (std::size_t k = 0; k < o.trajectories; ++k) {
    const std::size_t c = o.min_corners + static_cast<std::size_t>(unit(rng) * static_cast<double>(o.max_corners - o.min_corners + 1));
    const std::size_t corners = std::min(c, o.max_corners);
    // Near-even spacing with a random shift.
    const double gap = static_cast<double>(n - 1) / static_cast<double>(corners + 1);
    std::vector<std::size_t> at;
    for (std::size_t j = 1; j <= corners; ++j) {
      const double shift = (unit(rng) - 0.5) * 0.5 * gap;
      at.push_back(static_cast<std::size_t>(std::lround(static_cast<double>(j) * gap + shift)));
    }
    double heading = unit(rng) * 2.0 * std::numbers::pi;
    double x = unit(rng) * o.region_m - o.region_m / 2.0;
    double y = unit(rng) * o.region_m - o.region_m / 2.0;
    const std::int64_t t0 = kEpoch0 + static_cast<std::int64_t>(unit(rng) * 6 * 3600);
    Trajectory tr{name("c", k), {}};
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tr.points.push_back(to_point(x + jitter(rng), y + jitter(rng), t0 + static_cast<std::int64_t>(i) * o.interval_s));
      if (next < at.size() && i == at[next]) {
        const double turn = (60.0 + unit(rng) * 90.0) * std::numbers::pi / 180.0;
        heading += unit(rng) < 0.5 ? turn : -turn;
        ++next;
      }
      x += o.step_m * std::cos(heading);
      y += o.step_m * std::sin(heading);
    }
    trajs.push_back(std::move(tr));
    out.corners.push_back(std::move(at));
  }
  out.db = TrajectoryDatabase(std::move(trajs));
  return out;
}

TrajectoryDatabase random_database(const RandomOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> step(0.0, o.step_m);
  std::vector<Trajectory> trajs;
  for (std::size_t k = 0; k < o.trajectories; ++k) {
    const std::size_t n = o.min_points + static_cast<std::size_t>(unit(rng) * static_cast<double>(o.max_points - o.min_points + 1));
    double x = unit(rng) * o.region_m - o.region_m / 2.0;
    double y = unit(rng) * o.region_m - o.region_m / 2.0;
    std::int64_t t = kEpoch0 + static_cast<std::int64_t>(unit(rng) * static_cast<double>(o.horizon_s));
    Trajectory tr{name("r", k), {}};
    for (std::size_t i = 0; i < std::min(n, o.max_points); ++i) {
      tr.points.push_back(to_point(x, y, t));
      x += step(rng);
      y += step(rng);
      t += 10 + static_cast<std::int64_t>(unit(rng) * 110);
    }
    trajs.push_back(std::move(tr));
  }
  return TrajectoryDatabase(std::move(trajs));
}

std::vector<PlanarPoint> random_planar(std::size_t n, double spread_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-spread_m, spread_m);
  std::uniform_int_distribution<int> dt(1, 60);
  std::vector<PlanarPoint> out;
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({pos(rng), pos(rng), t});
    t += dt(rng);
  }
  return out;
}

}  // namespace mlsimp::support
