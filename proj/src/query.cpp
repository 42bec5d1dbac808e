#include "mlsimp/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mlsimp {

namespace {

std::int64_t floor_div(double v, double cell) { return static_cast<std::int64_t>(std::floor(v / cell)); }

bool inside(const Point& p, const RangeQuery& q) {
  return p.x >= q.x_min && p.x <= q.x_max && p.y >= q.y_min && p.y <= q.y_max && p.t >= q.t_min && p.t <= q.t_max;
}

QueryResult ids_of(const TrajectoryDatabase& db, std::vector<std::size_t> positions) {
  QueryResult r;
  r.ids.reserve(positions.size());
  for (std::size_t p : positions) r.ids.push_back(db[p].id);
  std::sort(r.ids.begin(), r.ids.end());
  r.ids.erase(std::unique(r.ids.begin(), r.ids.end()), r.ids.end());
  return r;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

GridIndex GridIndex::build(const TrajectoryDatabase& db, const Projection& proj, double spatial_cell_m,
                           double temporal_cell_s) {
  if (!(spatial_cell_m > 0.0) || !(temporal_cell_s > 0.0)) {
    throw std::invalid_argument("grid cell sizes must be positive");
  }
  GridIndex g;
  g.spatial_ = spatial_cell_m;
  g.temporal_ = temporal_cell_s;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto& pts = db[i].points;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      g.cells_[g.cell_of(proj.project(pts[j]))].push_back(
          {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      ++g.points_;
    }
  }
  g.keys_.reserve(g.cells_.size());
  for (const auto& [k, _] : g.cells_) g.keys_.push_back(k);
  std::sort(g.keys_.begin(), g.keys_.end());
  return g;
}

CellKey GridIndex::cell_of(const PlanarPoint& p) const {
  return {floor_div(p.x, spatial_), floor_div(p.y, spatial_), floor_div(static_cast<double>(p.t), temporal_)};
}

std::span<const PointRef> GridIndex::cell(const CellKey& key) const {
  auto it = cells_.find(key);
  if (it == cells_.end()) return {};
  return it->second;
}

QueryEngine::QueryEngine(const TrajectoryDatabase& db, const Projection& proj, IndexOptions options)
    : db_(db),
      proj_(proj),
      index_(GridIndex::build(db, proj, options.spatial_cell_m, options.temporal_cell_s)),
      planar_(proj.project(db)) {}

namespace {

std::vector<PointRef> points_in_box(const TrajectoryDatabase& db_, const GridIndex& index_, const Projection& proj_,
                                    const RangeQuery& q) {
  std::vector<PointRef> out;
  if (q.x_min > q.x_max || q.y_min > q.y_max || q.t_min > q.t_max) return out;
  const CellKey lo = index_.cell_of(proj_.project(Point{q.x_min, q.y_min, q.t_min}));
  const CellKey hi = index_.cell_of(proj_.project(Point{q.x_max, q.y_max, q.t_max}));
  const double box_cells = (static_cast<double>(hi.x - lo.x) + 1.0) * (static_cast<double>(hi.y - lo.y) + 1.0) *
                           (static_cast<double>(hi.t - lo.t) + 1.0);
  auto scan = [&](std::span<const PointRef> refs) {
    for (const PointRef& r : refs) {
      if (inside(db_[r.trajectory].points[r.point], q)) out.push_back(r);
    }
  };
  if (box_cells > static_cast<double>(index_.occupied().size())) {
    for (const CellKey& k : index_.occupied()) {
      if (k.x >= lo.x && k.x <= hi.x && k.y >= lo.y && k.y <= hi.y && k.t >= lo.t && k.t <= hi.t) {
        scan(index_.cell(k));
      }
    }
  } else {
    for (std::int64_t cx = lo.x; cx <= hi.x; ++cx)
      for (std::int64_t cy = lo.y; cy <= hi.y; ++cy)
        for (std::int64_t ct = lo.t; ct <= hi.t; ++ct) scan(index_.cell({cx, cy, ct}));
  }
  std::sort(out.begin(), out.end());
  return out;
}

QueryResult trajectories_of(const TrajectoryDatabase& db, const std::vector<PointRef>& refs) {
  std::vector<std::size_t> hits;
  for (const PointRef& r : refs) {
    if (hits.empty() || hits.back() != r.trajectory) hits.push_back(r.trajectory);
  }
  return ids_of(db, std::move(hits));
}

}  // namespace

std::vector<PointRef> QueryEngine::range_points(const RangeQuery& q) const {
  return points_in_box(db_, index_, proj_, q);
}

QueryResult QueryEngine::range(const RangeQuery& q) const { return trajectories_of(db_, range_points(q)); }

std::span<const PlanarPoint> QueryEngine::window(std::size_t i, std::int64_t t_start, std::int64_t t_end) const {
  const auto& pts = planar_[i];
  auto lo = std::lower_bound(pts.begin(), pts.end(), t_start,
                             [](const PlanarPoint& p, std::int64_t t) { return p.t < t; });
  auto hi = std::upper_bound(lo, pts.end(), t_end, [](std::int64_t t, const PlanarPoint& p) { return t < p.t; });
  return {lo, hi};
}

QueryResult QueryEngine::knn(const KnnQuery& q, double edr_threshold) const {
  if (q.k == 0) throw std::invalid_argument("kNN needs k >= 1");
  std::vector<PlanarPoint> query;
  for (const Point& p : q.query.points) {
    if (p.t >= q.t_start && p.t <= q.t_end) query.push_back(proj_.project(p));
  }
  struct Scored {
    std::size_t dist;
    const TrajectoryId* id;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < db_.size(); ++i) {
    const auto w = window(i, q.t_start, q.t_end);
    if (w.empty()) continue;
    scored.push_back({edr(query, w, edr_threshold), &db_[i].id});
  }
  const std::size_t take = std::min(q.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) { return a.dist != b.dist ? a.dist < b.dist : *a.id < *b.id; });
  QueryResult r;
  for (std::size_t i = 0; i < take; ++i) r.ids.push_back(*scored[i].id);
  std::sort(r.ids.begin(), r.ids.end());
  r.short_result = take < q.k;
  return r;
}

PlanarPoint interpolate_at(std::span<const PlanarPoint> pts, double t) {
  auto it = std::lower_bound(pts.begin(), pts.end(), t,
                             [](const PlanarPoint& p, double v) { return static_cast<double>(p.t) < v; });
  if (it == pts.end()) return pts.back();
  if (static_cast<double>(it->t) == t || it == pts.begin()) return *it;
  const PlanarPoint& a = *(it - 1);
  const PlanarPoint& b = *it;
  const double r = (t - static_cast<double>(a.t)) / static_cast<double>(b.t - a.t);
  return {a.x + r * (b.x - a.x), a.y + r * (b.y - a.y), static_cast<std::int64_t>(t)};
}

QueryResult QueryEngine::similarity(const SimilarityQuery& q, double tick_s) const {
  if (!(tick_s > 0.0)) throw std::invalid_argument("similarity tick must be positive");
  if (!(q.delta > 0.0)) throw std::invalid_argument("similarity bound must be positive");
  const auto query = proj_.project(q.query);
  std::vector<std::size_t> hits;
  if (query.empty() || query.front().t > q.t_start || query.back().t < q.t_end) return {};
  const double ts = static_cast<double>(q.t_start);
  const double te = static_cast<double>(q.t_end);
  std::vector<PlanarPoint> ref;
  for (std::size_t k = 0;; ++k) {
    const double t = ts + static_cast<double>(k) * tick_s;
    if (t > te) break;
    ref.push_back(interpolate_at(query, t));
  }
  for (std::size_t i = 0; i < db_.size(); ++i) {
    const auto& pts = planar_[i];
    if (pts.empty() || pts.front().t > q.t_start || pts.back().t < q.t_end) continue;
    bool ok = true;
    for (std::size_t k = 0; k < ref.size() && ok; ++k) {
      const PlanarPoint p = interpolate_at(pts, ts + static_cast<double>(k) * tick_s);
      ok = std::hypot(p.x - ref[k].x, p.y - ref[k].y) <= q.delta;
    }
    if (ok) hits.push_back(i);
  }
  return ids_of(db_, std::move(hits));
}

bool edr_within(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b, double threshold,
                std::size_t limit) {
  const std::size_t n = a.size(), m = b.size();
  if ((n > m ? n - m : m - n) > limit) return false;
  if (n == 0 || m == 0) return std::max(n, m) <= limit;
  const std::size_t cap = limit + 1;
  // Cells with |i - j| > limit cannot lie on a path of cost <= limit.
  std::vector<std::size_t> prev(m + 1, cap), cur(m + 1, cap);
  for (std::size_t j = 0; j <= std::min(m, limit); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t jlo = i > limit ? i - limit : 0;
    const std::size_t jhi = std::min(m, i + limit);
    std::fill(cur.begin(), cur.end(), cap);
    if (jlo == 0) cur[0] = std::min(i, cap);
    bool any = cur[0] <= limit && jlo == 0;
    for (std::size_t j = std::max<std::size_t>(jlo, 1); j <= jhi; ++j) {
      const PlanarPoint& p = a[i - 1];
      const PlanarPoint& q = b[j - 1];
      const bool match = std::abs(p.x - q.x) <= threshold && std::abs(p.y - q.y) <= threshold;
      std::size_t v = prev[j - 1] + (match ? 0 : 1);
      v = std::min({v, prev[j] + 1, cur[j - 1] + 1, cap});
      cur[j] = v;
      any = any || v <= limit;
    }
    if (!any) return false;
    std::swap(prev, cur);
  }
  return prev[m] <= limit;
}

Partition QueryEngine::cluster_window(std::optional<std::pair<std::int64_t, std::int64_t>> win,
                                      double edr_threshold, std::size_t link_threshold) const {
  if (!(edr_threshold > 0.0)) throw std::invalid_argument("EDR threshold must be positive");
  const std::size_t n = db_.size();
  std::vector<std::span<const PlanarPoint>> seqs(n);
  for (std::size_t i = 0; i < n; ++i) {
    seqs[i] = win ? window(i, win->first, win->second) : std::span<const PlanarPoint>(planar_[i]);
  }
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (seqs[i].empty()) continue;  // nothing observed: stays a singleton
    for (std::size_t j = i + 1; j < n; ++j) {
      if (seqs[j].empty() || sets.find(i) == sets.find(j)) continue;
      if (edr_within(seqs[i], seqs[j], edr_threshold, link_threshold)) sets.unite(i, j);
    }
  }
  std::vector<std::vector<TrajectoryId>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(db_[i].id);
  Partition out;
  for (auto& g : groups) {
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

Partition QueryEngine::cluster(const ClusteringQuery& q) const {
  return cluster_window(std::make_pair(q.t_start, q.t_end), q.edr_threshold, q.link_threshold);
}

Partition QueryEngine::cluster(double edr_threshold, std::size_t link_threshold) const {
  return cluster_window(std::nullopt, edr_threshold, link_threshold);
}

QueryResult range_query(const TrajectoryDatabase& db, const GridIndex& index, const Projection& proj,
                        const RangeQuery& q) {
  return trajectories_of(db, points_in_box(db, index, proj, q));
}

QueryResult knn_query(const TrajectoryDatabase& db, const Projection& proj, const KnnQuery& q,
                      double edr_threshold) {
  return QueryEngine(db, proj).knn(q, edr_threshold);
}

QueryResult similarity_query(const TrajectoryDatabase& db, const Projection& proj, const SimilarityQuery& q,
                             double tick_s) {
  return QueryEngine(db, proj).similarity(q, tick_s);
}

Partition cluster(const TrajectoryDatabase& db, const Projection& proj, double edr_threshold,
                  std::size_t link_threshold) {
  return QueryEngine(db, proj).cluster(edr_threshold, link_threshold);
}

}  // namespace mlsimp
