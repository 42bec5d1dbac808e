#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlsimp/core.hpp"
#include "mlsimp/distance.hpp"

namespace mlsimp {

enum class BaselineMethod { TopDownE, TopDownW, BottomUpE, Uniform };

std::string to_string(BaselineMethod m);
BaselineMethod baseline_method_from_string(const std::string& s);
std::string to_string(ErrorKind k);
ErrorKind error_kind_from_string(const std::string& s);

struct BaselineSpec {
  BaselineMethod method = BaselineMethod::TopDownE;
  ErrorKind kind = ErrorKind::PED;
  double compression_rate = 0.01;
  std::uint64_t seed = 0;
};

/// Retained indices of a budgeted Top-Down split over planar points. Keeps the
/// endpoints, then repeatedly inserts the worst point of the worst segment
/// (ties: lowest point index). budget >= size returns every index.
/// Throws std::invalid_argument when budget < 2.
std::vector<std::size_t> top_down_indices(std::span<const PlanarPoint> pts, std::size_t budget, ErrorKind kind);
Trajectory top_down(const Trajectory& traj, std::size_t budget, ErrorKind kind, const Projection& proj);

/// Top-Down with a single priority over every trajectory's split candidates.
/// Throws std::invalid_argument unless budget covers both endpoints of every
/// trajectory.
SimplifiedDatabase top_down_whole(const TrajectoryDatabase& db, std::size_t budget, ErrorKind kind,
                                  const Projection& proj);

/// Budgeted Bottom-Up merge: repeatedly drops the interior point whose removal
/// yields the smallest merged-segment error (ties: lowest index).
std::vector<std::size_t> bottom_up_indices(std::span<const PlanarPoint> pts, std::size_t budget, ErrorKind kind);
Trajectory bottom_up(const Trajectory& traj, std::size_t budget, ErrorKind kind, const Projection& proj);

/// `budget` points drawn uniformly without replacement over the whole database.
SimplifiedDatabase uniform_sample(const TrajectoryDatabase& db, std::size_t budget, std::uint64_t seed);

/// Splits a database budget across trajectories proportionally to length:
/// floors first, remainders by largest fractional part (ties: lower position).
std::vector<std::size_t> allocate_budget(const TrajectoryDatabase& db, std::size_t budget);

}  // namespace mlsimp
