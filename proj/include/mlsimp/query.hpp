#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mlsimp/core.hpp"
#include "mlsimp/distance.hpp"

namespace mlsimp {

struct PointRef {
  std::uint32_t trajectory = 0;
  std::uint32_t point = 0;

  friend auto operator<=>(const PointRef&, const PointRef&) = default;
};

struct CellKey {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t t = 0;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.t) + 0x85EBCA77C2B2AE63ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Uniform spatio-temporal grid over projected coordinates.
class GridIndex {
 public:
  /// Throws std::invalid_argument for non-positive cell sizes.
  static GridIndex build(const TrajectoryDatabase& db, const Projection& proj, double spatial_cell_m,
                         double temporal_cell_s);

  CellKey cell_of(const PlanarPoint& p) const;
  /// Points of a cell in (trajectory, point) order; empty span when unoccupied.
  std::span<const PointRef> cell(const CellKey& key) const;
  /// Occupied cells in ascending key order.
  const std::vector<CellKey>& occupied() const { return keys_; }
  std::size_t point_count() const { return points_; }
  double spatial_cell() const { return spatial_; }
  double temporal_cell() const { return temporal_; }

 private:
  double spatial_ = 0.0;
  double temporal_ = 0.0;
  std::size_t points_ = 0;
  std::unordered_map<CellKey, std::vector<PointRef>, CellKeyHash> cells_;
  std::vector<CellKey> keys_;
};

/// Closed spatio-temporal box in degrees / epoch seconds.
struct RangeQuery {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  std::int64_t t_min = 0, t_max = 0;
};

struct KnnQuery {
  std::size_t k = 3;
  Trajectory query;
  std::int64_t t_start = 0, t_end = 0;
};

struct SimilarityQuery {
  Trajectory query;
  std::int64_t t_start = 0, t_end = 0;
  double delta = 5000.0;  // meters
};

/// Whole-database clustering restricted to a time window.
struct ClusteringQuery {
  std::int64_t t_start = 0, t_end = 0;
  double edr_threshold = 2000.0;
  std::size_t link_threshold = 10;
};

struct QueryResult {
  std::vector<TrajectoryId> ids;  // ascending, unique
  bool short_result = false;      // kNN found fewer than k candidates
};

/// Clusters as sorted id lists, ordered by their smallest id.
using Partition = std::vector<std::vector<TrajectoryId>>;

struct IndexOptions {
  double spatial_cell_m = 500.0;
  double temporal_cell_s = 3600.0;
};

/// Read-only query executor over one database. Holds a reference to `db`,
/// which must outlive it. The projection must be shared between an original
/// database and its simplifications so distances agree.
class QueryEngine {
 public:
  QueryEngine(const TrajectoryDatabase& db, const Projection& proj, IndexOptions options = {});

  const TrajectoryDatabase& database() const { return db_; }
  const Projection& projection() const { return proj_; }
  const GridIndex& index() const { return index_; }

  QueryResult range(const RangeQuery& q) const;
  /// Every point inside the box, ascending.
  std::vector<PointRef> range_points(const RangeQuery& q) const;
  QueryResult knn(const KnnQuery& q, double edr_threshold) const;
  QueryResult similarity(const SimilarityQuery& q, double tick_s) const;
  Partition cluster(const ClusteringQuery& q) const;
  /// Clustering over whole trajectories (no time restriction).
  Partition cluster(double edr_threshold, std::size_t link_threshold) const;

  /// Contiguous window [t_start, t_end] of trajectory i in planar form.
  std::span<const PlanarPoint> window(std::size_t i, std::int64_t t_start, std::int64_t t_end) const;

 private:
  Partition cluster_window(std::optional<std::pair<std::int64_t, std::int64_t>> window, double edr_threshold,
                           std::size_t link_threshold) const;

  const TrajectoryDatabase& db_;
  Projection proj_;
  GridIndex index_;
  std::vector<std::vector<PlanarPoint>> planar_;
};

/// Free-function forms over an explicit index / projection.
QueryResult range_query(const TrajectoryDatabase& db, const GridIndex& index, const Projection& proj,
                        const RangeQuery& q);
QueryResult knn_query(const TrajectoryDatabase& db, const Projection& proj, const KnnQuery& q, double edr_threshold);
QueryResult similarity_query(const TrajectoryDatabase& db, const Projection& proj, const SimilarityQuery& q,
                             double tick_s);
Partition cluster(const TrajectoryDatabase& db, const Projection& proj, double edr_threshold,
                  std::size_t link_threshold);

/// True iff edr(a, b, threshold) <= limit; banded evaluation.
bool edr_within(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b, double threshold, std::size_t limit);

/// Linear interpolation of a time-sorted planar sequence at time t (t inside its span).
PlanarPoint interpolate_at(std::span<const PlanarPoint> pts, double t);

}  // namespace mlsimp
