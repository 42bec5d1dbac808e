#include "mlsimp/gnn/vocabulary.hpp"

#include <cmath>
#include <stdexcept>

namespace mlsimp {

CellVocabulary::CellVocabulary(double cell_m, std::vector<Cell> cells) : cell_m_(cell_m), cells_(std::move(cells)) {
  if (!(cell_m_ > 0.0)) throw std::invalid_argument("cell size must be positive");
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    if (!ids_.emplace(cells_[k], k + 1).second) throw std::invalid_argument("duplicate vocabulary cell");
  }
}

CellVocabulary CellVocabulary::build(const TrajectoryDatabase& db, const Projection& proj, double cell_m) {
  CellVocabulary v(cell_m, {});
  for (const Trajectory& tr : db.trajectories()) {
    for (const Point& p : tr.points) {
      const Cell c = v.cell_of(proj.project(p));
      if (v.ids_.emplace(c, v.cells_.size() + 1).second) v.cells_.push_back(c);
    }
  }
  return v;
}

CellVocabulary::Cell CellVocabulary::cell_of(const PlanarPoint& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_m_)), static_cast<std::int64_t>(std::floor(p.y / cell_m_))};
}

std::size_t CellVocabulary::id_of(const PlanarPoint& p) const {
  auto it = ids_.find(cell_of(p));
  return it == ids_.end() ? kUnknown : it->second;
}

}  // namespace mlsimp
