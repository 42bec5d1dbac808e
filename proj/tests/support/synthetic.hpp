#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlsimp/core.hpp"
#include "mlsimp/distance.hpp"

namespace mlsimp::support {

struct CornerCorpus {
  TrajectoryDatabase db;
  std::vector<std::vector<std::size_t>> corners;  // planted corner indices, ascending
};

struct CornerOptions {
  std::size_t trajectories = 200;
  std::size_t points = 100;
  std::size_t min_corners = 3;
  std::size_t max_corners = 6;
  double step_m = 50.0;       // distance per sample along a leg
  double jitter_m = 3.0;      // Gaussian sd per axis
  double region_m = 8000.0;   // start positions inside a square of this side
  std::int64_t interval_s = 10;
  std::uint64_t seed = 1;
};

/// Straight legs joined by sharp turns (60 to 150 degrees) at the planted
/// corners, with Gaussian jitter on every fix.
CornerCorpus corner_corpus(const CornerOptions& options);

struct RandomOptions {
  std::size_t trajectories = 200;
  std::size_t min_points = 50;
  std::size_t max_points = 50;
  double region_m = 10000.0;
  double step_m = 150.0;
  std::int64_t horizon_s = 2 * 86400;
  std::uint64_t seed = 1;
};

/// Random walks with random start times and irregular sampling intervals.
TrajectoryDatabase random_database(const RandomOptions& options);

/// Degrees for a planar offset in meters about a fixed reference point.
Point to_point(double x_m, double y_m, std::int64_t t);

std::vector<PlanarPoint> random_planar(std::size_t n, double spread_m, std::uint64_t seed);

}  // namespace mlsimp::support
