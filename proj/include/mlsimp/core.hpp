#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mlsimp {

// Raised when a caller breaks a documented precondition on structured input
// (e.g. a "simplified" trajectory that is not a subsequence of its original).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised when a geometric quantity is undefined for the given input
// (zero-duration anchor segment, zero-length heading vector).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A GPS fix: longitude/latitude in degrees, epoch seconds.
struct Point {
  double x = 0.0;
  double y = 0.0;
  std::int64_t t = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

using TrajectoryId = std::string;

/// An ordered sequence of points. Invariants (strict time order, length >= 2)
/// are checked by validate_database(), not at construction, because simplified
/// trajectories are allowed to be shorter.
struct Trajectory {
  TrajectoryId id;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// A collection of trajectories with unique ids. Order is preserved and is the
/// canonical iteration order for every algorithm in the library.
class TrajectoryDatabase {
 public:
  TrajectoryDatabase() = default;
  /// Throws std::invalid_argument on duplicate ids.
  explicit TrajectoryDatabase(std::vector<Trajectory> trajectories);

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
  std::size_t total_points() const { return total_points_; }

  /// Position of the trajectory with this id, or npos.
  std::size_t index_of(const TrajectoryId& id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const TrajectoryDatabase& a, const TrajectoryDatabase& b) {
    return a.trajectories_ == b.trajectories_;
  }

 private:
  std::vector<Trajectory> trajectories_;
  std::unordered_map<TrajectoryId, std::size_t> by_id_;
  std::size_t total_points_ = 0;
};

/// Simplified view of an original database: every original trajectory is
/// present (possibly with zero points) and retains a strictly increasing subset
/// of its original point indices.
class SimplifiedDatabase {
 public:
  SimplifiedDatabase() = default;

  /// Builds from per-trajectory retained index lists aligned with
  /// original.trajectories(). Throws ContractError if a list is not strictly
  /// increasing or out of range.
  static SimplifiedDatabase from_indices(const TrajectoryDatabase& original,
                                         std::vector<std::vector<std::size_t>> kept);

  /// Recovers the index map of each simplified trajectory inside original.
  /// Trajectories absent from `simplified` are treated as empty.
  static SimplifiedDatabase from_subsequences(const TrajectoryDatabase& original,
                                              const TrajectoryDatabase& simplified);

  const TrajectoryDatabase& database() const { return db_; }
  const std::vector<std::vector<std::size_t>>& kept_indices() const { return kept_; }
  std::size_t retained_points() const { return db_.total_points(); }
  std::size_t original_points() const { return original_points_; }
  /// retained / original, in (0, 1] for non-empty results.
  double compression_rate() const;

 private:
  TrajectoryDatabase db_;
  std::vector<std::vector<std::size_t>> kept_;
  std::size_t original_points_ = 0;
};

struct ImportanceEntry {
  double raw = 0.0;
  double normalized = 0.0;
  double adjusted = 0.0;
};

/// Per-point importance, indexed [trajectory position][point index] aligned
/// with a TrajectoryDatabase.
class ImportanceVector {
 public:
  ImportanceVector() = default;
  explicit ImportanceVector(std::vector<std::vector<ImportanceEntry>> entries)
      : entries_(std::move(entries)) {}

  /// Zero-initialised vector shaped like db.
  static ImportanceVector shaped_like(const TrajectoryDatabase& db);

  std::vector<ImportanceEntry>& operator[](std::size_t traj) { return entries_[traj]; }
  const std::vector<ImportanceEntry>& operator[](std::size_t traj) const { return entries_[traj]; }
  std::size_t trajectories() const { return entries_.size(); }
  std::size_t total_points() const;

  /// Min-max normalisation of raw values over the whole vector into
  /// [eps, 1 - eps]. Constant input maps to 0.5. Also resets adjusted.
  void normalize(double eps);

 private:
  std::vector<std::vector<ImportanceEntry>> entries_;
};

/// round-half-up(cr * total_points), at least 1. Throws std::invalid_argument
/// unless 0 < cr <= 1 and total_points >= 1.
std::size_t compute_budget(std::size_t total_points, double cr);

enum class ViolationKind { NonFiniteCoordinate, CoordinateOutOfRange, NonMonotoneTime, TooShort };

struct Violation {
  ViolationKind kind;
  std::size_t trajectory = 0;  // position in the database
  std::size_t point = 0;       // offending point (or 0 for TooShort)
  std::string message;
};

std::vector<Violation> validate_database(const TrajectoryDatabase& db);
std::vector<Violation> validate_trajectory(const Trajectory& traj, std::size_t position = 0);

/// Strictly increasing positions of `simplified` points inside `original`,
/// matched bit-exactly. Throws ContractError when no such map exists.
std::vector<std::size_t> subsequence_indices(const Trajectory& original, const Trajectory& simplified);

}  // namespace mlsimp
