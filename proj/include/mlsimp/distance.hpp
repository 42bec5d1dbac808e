#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlsimp/core.hpp"

namespace mlsimp {

inline constexpr double kEarthRadiusMeters = 6371000.0;

/// A point in the local planar frame, meters east/north of the projection
/// origin.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
  std::int64_t t = 0;
};

/// Equirectangular projection about a reference latitude/longitude.
class Projection {
 public:
  Projection() : Projection(0.0, 0.0) {}
  Projection(double origin_lon, double origin_lat);

  /// Origin at the mean longitude/latitude over all points (0,0 when empty).
  static Projection for_database(const TrajectoryDatabase& db);

  PlanarPoint project(const Point& p) const {
    return {(p.x - origin_lon_) * meters_per_deg_x_, (p.y - origin_lat_) * meters_per_deg_y_, p.t};
  }
  std::vector<PlanarPoint> project(const Trajectory& traj) const;
  std::vector<std::vector<PlanarPoint>> project(const TrajectoryDatabase& db) const;

  double meters_per_deg_x() const { return meters_per_deg_x_; }
  double meters_per_deg_y() const { return meters_per_deg_y_; }
  double origin_lon() const { return origin_lon_; }
  double origin_lat() const { return origin_lat_; }

 private:
  double origin_lon_;
  double origin_lat_;
  double meters_per_deg_x_;
  double meters_per_deg_y_;
};

enum class ErrorKind { PED, SED, DAD };

/// Segment p[start]..p[end] of an original trajectory, anchoring original
/// indices [first_covered, last_covered].
struct AnchorSegment {
  Point start;
  Point end;
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  std::size_t first_covered = 0;
  std::size_t last_covered = 0;
};

/// One anchor segment per consecutive retained pair. `retained` must be
/// strictly increasing, start at 0 and end at original.size() - 1.
std::vector<AnchorSegment> anchor_segments(const Trajectory& original, std::span<const std::size_t> retained);
/// Same, recovering the retained indices from a simplified trajectory.
std::vector<AnchorSegment> anchor_segments(const Trajectory& original, const Trajectory& simplified);

/// Distance from p to the closed segment a-b. Zero-length segments reduce to
/// point distance.
double ped(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b);
/// Distance from p to the position on a-b interpolated at p.t.
/// Throws DegenerateError when a.t == b.t, ContractError when p.t is outside [a.t, b.t].
double sed(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b);
/// Absolute heading difference in [0, pi] between vectors (from->to) pairs.
/// Throws DegenerateError for a zero-length heading.
double dad(const PlanarPoint& from, const PlanarPoint& to, const PlanarPoint& seg_a, const PlanarPoint& seg_b);

/// Point-level wrappers over an AnchorSegment, projecting with `proj`.
double ped(const Point& p, const AnchorSegment& seg, const Projection& proj);
double sed(const Point& p, const AnchorSegment& seg, const Projection& proj);
/// Heading of original[p_index] -> original[p_index + 1] against the segment.
double dad(std::size_t p_index, const Trajectory& original, const AnchorSegment& seg, const Projection& proj);

/// Error of original point i against chord a-b (indices into `pts`), for kind.
/// For DAD the last point of the trajectory has no heading and contributes 0.
double point_error(std::span<const PlanarPoint> pts, std::size_t i, std::size_t a, std::size_t b, ErrorKind kind);

/// Max point error over the interior (a, b) of chord a-b; 0 when empty.
/// `worst` receives the arg-max (lowest index on ties) or b when empty.
double segment_error(std::span<const PlanarPoint> pts, std::size_t a, std::size_t b, ErrorKind kind,
                     std::size_t* worst = nullptr);

/// Max over anchor segments of max over covered points of the per-point error.
double simplification_error(std::span<const PlanarPoint> pts, std::span<const std::size_t> retained, ErrorKind kind);
double simplification_error(const Trajectory& original, const Trajectory& simplified, ErrorKind kind,
                            const Projection& proj);

/// Edit distance on real sequences: two points match when |dx| and |dy| are
/// both within `threshold` meters; every edit costs 1.
std::size_t edr(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b, double threshold);

}  // namespace mlsimp
