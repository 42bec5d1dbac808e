#include "mlsimp/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mlsimp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

Projection::Projection(double origin_lon, double origin_lat)
    : origin_lon_(origin_lon),
      origin_lat_(origin_lat),
      meters_per_deg_x_(kEarthRadiusMeters * kDegToRad * std::cos(origin_lat * kDegToRad)),
      meters_per_deg_y_(kEarthRadiusMeters * kDegToRad) {}

Projection Projection::for_database(const TrajectoryDatabase& db) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& t : db.trajectories()) {
    for (const auto& p : t.points) {
      sx += p.x;
      sy += p.y;
      ++n;
    }
  }
  if (n == 0) return Projection();
  return Projection(sx / static_cast<double>(n), sy / static_cast<double>(n));
}

std::vector<PlanarPoint> Projection::project(const Trajectory& traj) const {
  std::vector<PlanarPoint> out;
  out.reserve(traj.size());
  for (const auto& p : traj.points) out.push_back(project(p));
  return out;
}

std::vector<std::vector<PlanarPoint>> Projection::project(const TrajectoryDatabase& db) const {
  std::vector<std::vector<PlanarPoint>> out;
  out.reserve(db.size());
  for (const auto& t : db.trajectories()) out.push_back(project(t));
  return out;
}

std::vector<AnchorSegment> anchor_segments(const Trajectory& original, std::span<const std::size_t> retained) {
  const std::size_t n = original.size();
  if (retained.size() < 2 || retained.front() != 0 || retained.back() != n - 1) {
    throw ContractError("anchor segments need the first and last original points retained");
  }
  std::vector<AnchorSegment> segs;
  segs.reserve(retained.size() - 1);
  for (std::size_t j = 0; j + 1 < retained.size(); ++j) {
    const std::size_t a = retained[j];
    const std::size_t b = retained[j + 1];
    if (b <= a || b >= n) throw ContractError("retained indices must be strictly increasing");
    const bool last = j + 2 == retained.size();
    segs.push_back({original.points[a], original.points[b], a, b, a, last ? b : b - 1});
  }
  return segs;
}

std::vector<AnchorSegment> anchor_segments(const Trajectory& original, const Trajectory& simplified) {
  const auto idx = subsequence_indices(original, simplified);
  return anchor_segments(original, idx);
}

double ped(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double u = 0.0;
  if (len2 > 0.0) {
    u = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  }
  return std::hypot(p.x - std::lerp(a.x, b.x, u), p.y - std::lerp(a.y, b.y, u));
}

double sed(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b) {
  if (a.t == b.t) throw DegenerateError("SED undefined for an anchor segment of zero duration");
  if (p.t < std::min(a.t, b.t) || p.t > std::max(a.t, b.t)) {
    throw ContractError("SED point lies outside its anchor segment's time span");
  }
  const double r = static_cast<double>(p.t - a.t) / static_cast<double>(b.t - a.t);
  return std::hypot(p.x - std::lerp(a.x, b.x, r), p.y - std::lerp(a.y, b.y, r));
}

double dad(const PlanarPoint& from, const PlanarPoint& to, const PlanarPoint& seg_a, const PlanarPoint& seg_b) {
  const double ux = to.x - from.x, uy = to.y - from.y;
  const double vx = seg_b.x - seg_a.x, vy = seg_b.y - seg_a.y;
  if ((ux == 0.0 && uy == 0.0) || (vx == 0.0 && vy == 0.0)) {
    throw DegenerateError("DAD undefined for a zero-length heading");
  }
  // atan2 of cross/dot is exact in [0, pi] and stable near parallel headings.
  return std::abs(std::atan2(ux * vy - uy * vx, ux * vx + uy * vy));
}

double ped(const Point& p, const AnchorSegment& seg, const Projection& proj) {
  return ped(proj.project(p), proj.project(seg.start), proj.project(seg.end));
}

double sed(const Point& p, const AnchorSegment& seg, const Projection& proj) {
  return sed(proj.project(p), proj.project(seg.start), proj.project(seg.end));
}

double dad(std::size_t p_index, const Trajectory& original, const AnchorSegment& seg, const Projection& proj) {
  if (p_index + 1 >= original.size()) {
    throw ContractError("DAD needs a successor point");
  }
  return dad(proj.project(original.points[p_index]), proj.project(original.points[p_index + 1]),
             proj.project(seg.start), proj.project(seg.end));
}

double point_error(std::span<const PlanarPoint> pts, std::size_t i, std::size_t a, std::size_t b, ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PED:
      return ped(pts[i], pts[a], pts[b]);
    case ErrorKind::SED:
      return sed(pts[i], pts[a], pts[b]);
    case ErrorKind::DAD:
      if (i + 1 >= pts.size()) return 0.0;
      return dad(pts[i], pts[i + 1], pts[a], pts[b]);
  }
  return 0.0;
}

double segment_error(std::span<const PlanarPoint> pts, std::size_t a, std::size_t b, ErrorKind kind,
                     std::size_t* worst) {
  double best = 0.0;
  std::size_t arg = b;
  for (std::size_t i = a + 1; i < b; ++i) {
    const double e = point_error(pts, i, a, b, kind);
    if (arg == b || e > best) {
      best = e;
      arg = i;
    }
  }
  if (worst) *worst = arg;
  return best;
}

double simplification_error(std::span<const PlanarPoint> pts, std::span<const std::size_t> retained, ErrorKind kind) {
  const std::size_t n = pts.size();
  if (retained.size() < 2 || retained.front() != 0 || retained.back() != n - 1) {
    throw ContractError("simplification error needs the first and last original points retained");
  }
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < retained.size(); ++j) {
    const std::size_t a = retained[j];
    const std::size_t b = retained[j + 1];
    if (b <= a) throw ContractError("retained indices must be strictly increasing");
    const std::size_t last = j + 2 == retained.size() ? b : b - 1;
    for (std::size_t i = a; i <= last; ++i) {
      worst = std::max(worst, point_error(pts, i, a, b, kind));
    }
  }
  return worst;
}

double simplification_error(const Trajectory& original, const Trajectory& simplified, ErrorKind kind,
                            const Projection& proj) {
  const auto idx = subsequence_indices(original, simplified);
  const auto pts = proj.project(original);
  return simplification_error(pts, idx, kind);
}

std::size_t edr(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b, double threshold) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  // Rolling row over b; row[j] = edr(a[0..i), b[0..j)).
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    const PlanarPoint& p = a[i - 1];
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const PlanarPoint& q = b[j - 1];
      const bool match = std::abs(p.x - q.x) <= threshold && std::abs(p.y - q.y) <= threshold;
      cur[j] = std::min({prev[j - 1] + (match ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace mlsimp
