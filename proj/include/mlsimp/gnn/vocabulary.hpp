#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "mlsimp/distance.hpp"

namespace mlsimp {

/// Square planar grid cells numbered in first-seen order over a corpus.
/// Id 0 is reserved for cells never seen while building.
class CellVocabulary {
 public:
  using Cell = std::pair<std::int64_t, std::int64_t>;
  static constexpr std::size_t kUnknown = 0;

  CellVocabulary() = default;
  /// `cells[k]` receives id k + 1. Throws std::invalid_argument for a
  /// non-positive cell size or duplicate cells.
  CellVocabulary(double cell_m, std::vector<Cell> cells);

  static CellVocabulary build(const TrajectoryDatabase& db, const Projection& proj, double cell_m);

  Cell cell_of(const PlanarPoint& p) const;
  std::size_t id_of(const PlanarPoint& p) const;
  /// Number of ids including kUnknown.
  std::size_t size() const { return cells_.size() + 1; }
  double cell_size() const { return cell_m_; }
  const std::vector<Cell>& cells() const { return cells_; }

 private:
  double cell_m_ = 100.0;
  std::vector<Cell> cells_;
  std::map<Cell, std::size_t> ids_;
};

}  // namespace mlsimp
