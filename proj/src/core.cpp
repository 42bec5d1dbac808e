#include "mlsimp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsimp {

TrajectoryDatabase::TrajectoryDatabase(std::vector<Trajectory> trajectories)
    : trajectories_(std::move(trajectories)) {
  by_id_.reserve(trajectories_.size());
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    if (!by_id_.emplace(trajectories_[i].id, i).second) {
      throw std::invalid_argument("duplicate trajectory id '" + trajectories_[i].id + "'");
    }
    total_points_ += trajectories_[i].size();
  }
}

std::size_t TrajectoryDatabase::index_of(const TrajectoryId& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? npos : it->second;
}

SimplifiedDatabase SimplifiedDatabase::from_indices(const TrajectoryDatabase& original,
                                                    std::vector<std::vector<std::size_t>> kept) {
  if (kept.size() != original.size()) {
    throw ContractError("retained index lists do not match the trajectory count");
  }
  std::vector<Trajectory> out;
  out.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const Trajectory& src = original[i];
    Trajectory t{src.id, {}};
    t.points.reserve(kept[i].size());
    for (std::size_t k = 0; k < kept[i].size(); ++k) {
      const std::size_t idx = kept[i][k];
      if (idx >= src.size() || (k > 0 && idx <= kept[i][k - 1])) {
        throw ContractError("retained indices of '" + src.id + "' are not a strictly increasing subset");
      }
      t.points.push_back(src.points[idx]);
    }
    out.push_back(std::move(t));
  }
  SimplifiedDatabase s;
  s.db_ = TrajectoryDatabase(std::move(out));
  s.kept_ = std::move(kept);
  s.original_points_ = original.total_points();
  return s;
}

SimplifiedDatabase SimplifiedDatabase::from_subsequences(const TrajectoryDatabase& original,
                                                         const TrajectoryDatabase& simplified) {
  std::vector<std::vector<std::size_t>> kept(original.size());
  for (const Trajectory& t : simplified.trajectories()) {
    const std::size_t pos = original.index_of(t.id);
    if (pos == TrajectoryDatabase::npos) {
      throw ContractError("simplified trajectory '" + t.id + "' has no original");
    }
    kept[pos] = subsequence_indices(original[pos], t);
  }
  return from_indices(original, std::move(kept));
}

double SimplifiedDatabase::compression_rate() const {
  if (original_points_ == 0) return 0.0;
  return static_cast<double>(retained_points()) / static_cast<double>(original_points_);
}

ImportanceVector ImportanceVector::shaped_like(const TrajectoryDatabase& db) {
  std::vector<std::vector<ImportanceEntry>> e(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) e[i].resize(db[i].size());
  return ImportanceVector(std::move(e));
}

std::size_t ImportanceVector::total_points() const {
  std::size_t n = 0;
  for (const auto& t : entries_) n += t.size();
  return n;
}

void ImportanceVector::normalize(double eps) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& t : entries_) {
    for (const auto& e : t) {
      lo = std::min(lo, e.raw);
      hi = std::max(hi, e.raw);
    }
  }
  const double span = hi - lo;
  for (auto& t : entries_) {
    for (auto& e : t) {
      e.normalized = span > 0.0 ? eps + (1.0 - 2.0 * eps) * (e.raw - lo) / span : 0.5;
      e.adjusted = e.normalized;
    }
  }
}

std::size_t compute_budget(std::size_t total_points, double cr) {
  if (!(cr > 0.0 && cr <= 1.0)) {
    throw std::invalid_argument("compression rate must lie in (0, 1]");
  }
  if (total_points == 0) {
    throw std::invalid_argument("cannot budget an empty database");
  }
  const double m = std::floor(cr * static_cast<double>(total_points) + 0.5);
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, total_points);
}

std::vector<Violation> validate_trajectory(const Trajectory& traj, std::size_t position) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Point& p = traj.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      out.push_back({ViolationKind::NonFiniteCoordinate, position, i,
                     "non-finite coordinate in '" + traj.id + "' at point " + std::to_string(i)});
    } else if (p.x < -180.0 || p.x > 180.0 || p.y < -90.0 || p.y > 90.0) {
      out.push_back({ViolationKind::CoordinateOutOfRange, position, i,
                     "coordinate out of range in '" + traj.id + "' at point " + std::to_string(i)});
    }
    if (i > 0 && traj.points[i - 1].t >= p.t) {
      out.push_back({ViolationKind::NonMonotoneTime, position, i,
                     "timestamp not strictly increasing in '" + traj.id + "' at point " + std::to_string(i)});
    }
  }
  if (traj.size() < 2) {
    out.push_back({ViolationKind::TooShort, position, 0, "trajectory '" + traj.id + "' has fewer than 2 points"});
  }
  return out;
}

std::vector<Violation> validate_database(const TrajectoryDatabase& db) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < db.size(); ++i) {
    auto v = validate_trajectory(db[i], i);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<std::size_t> subsequence_indices(const Trajectory& original, const Trajectory& simplified) {
  std::vector<std::size_t> idx;
  idx.reserve(simplified.size());
  std::size_t j = 0;
  for (const Point& p : simplified.points) {
    while (j < original.size() && !(original.points[j] == p)) ++j;
    if (j == original.size()) {
      throw ContractError("trajectory '" + simplified.id + "' is not a subsequence of its original");
    }
    idx.push_back(j++);
  }
  return idx;
}

}  // namespace mlsimp
