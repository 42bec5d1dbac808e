#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mlsimp/ad/tape.hpp"
#include "mlsimp/distance.hpp"
#include "mlsimp/query.hpp"

namespace mlsimp::support {

/// EDR by top-down recursion over edit scripts (memoised on the suffix pair).
std::size_t edr_recursive(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b, double threshold);

/// Point-to-segment distance from the perpendicular foot, clamped.
double ped_direct(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b);
/// Distance to the time-interpolated position on a-b.
double sed_direct(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b);

/// Max over original points of the error against the retained chord that
/// brackets them, two explicit loops.
double simplification_error_brute(std::span<const PlanarPoint> pts, const std::vector<std::size_t>& retained,
                                  ErrorKind kind);

QueryResult range_scan(const TrajectoryDatabase& db, const RangeQuery& q);
QueryResult knn_scan(const TrajectoryDatabase& db, const Projection& proj, const KnnQuery& q, double edr_threshold);
QueryResult similarity_scan(const TrajectoryDatabase& db, const Projection& proj, const SimilarityQuery& q,
                            double tick_s);
Partition cluster_scan(const TrajectoryDatabase& db, const Projection& proj, double edr_threshold,
                       std::size_t link_threshold, const std::int64_t* t_start = nullptr,
                       const std::int64_t* t_end = nullptr);

/// Retained indices after Bottom-Up to `budget`, from the lexicographically
/// smallest sequence of (merge cost, index) over every removal order.
std::vector<std::size_t> bottom_up_brute(std::span<const PlanarPoint> pts, std::size_t budget, ErrorKind kind);

struct GradientCheck {
  double relative_error = 0.0;  // |a - n| / max(|a|, |n|), 0 when both vanish
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

/// Central finite differences over every element of `params`, compared with
/// the tape gradient of the scalar built by `loss`.
GradientCheck check_gradient(const ad::ParameterList& params, const std::function<ad::Var(ad::Tape&)>& loss,
                             double step = 1e-5);

}  // namespace mlsimp::support
