#include "mlsimp/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>
#include <ranges>
#include <set>
#include <stdexcept>

namespace mlsimp {

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::TopDownE:
      return "top_down_E";
    case BaselineMethod::TopDownW:
      return "top_down_W";
    case BaselineMethod::BottomUpE:
      return "bottom_up_E";
    case BaselineMethod::Uniform:
      return "uniform";
  }
  return "unknown";
}

BaselineMethod baseline_method_from_string(const std::string& s) {
  if (s == "top_down_E") return BaselineMethod::TopDownE;
  if (s == "top_down_W") return BaselineMethod::TopDownW;
  if (s == "bottom_up_E") return BaselineMethod::BottomUpE;
  if (s == "uniform") return BaselineMethod::Uniform;
  throw std::invalid_argument("unknown baseline method '" + s + "'");
}

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::PED:
      return "ped";
    case ErrorKind::SED:
      return "sed";
    case ErrorKind::DAD:
      return "dad";
  }
  return "unknown";
}

ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "ped" || s == "PED") return ErrorKind::PED;
  if (s == "sed" || s == "SED") return ErrorKind::SED;
  if (s == "dad" || s == "DAD") return ErrorKind::DAD;
  throw std::invalid_argument("unknown error kind '" + s + "'");
}

namespace {

struct SplitCandidate {
  double error;
  std::size_t trajectory;
  std::size_t worst;
  std::size_t a;
  std::size_t b;
};

// Max-heap on error; ties go to the lowest (trajectory, point index).
struct SplitOrder {
  bool operator()(const SplitCandidate& l, const SplitCandidate& r) const {
    if (l.error != r.error) return l.error < r.error;
    if (l.trajectory != r.trajectory) return l.trajectory > r.trajectory;
    return l.worst > r.worst;
  }
};

using SplitQueue = std::priority_queue<SplitCandidate, std::vector<SplitCandidate>, SplitOrder>;

void push_segment(SplitQueue& q, std::span<const PlanarPoint> pts, std::size_t traj, std::size_t a, std::size_t b,
                  ErrorKind kind) {
  if (b <= a + 1) return;
  std::size_t worst = b;
  const double e = segment_error(pts, a, b, kind, &worst);
  q.push({e, traj, worst, a, b});
}

Trajectory pick(const Trajectory& traj, const std::vector<std::size_t>& idx) {
  Trajectory out{traj.id, {}};
  out.points.reserve(idx.size());
  for (std::size_t i : idx) out.points.push_back(traj.points[i]);
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

std::vector<std::size_t> top_down_indices(std::span<const PlanarPoint> pts, std::size_t budget, ErrorKind kind) {
  if (budget < 2) throw std::invalid_argument("Top-Down needs a budget of at least 2 points");
  const std::size_t n = pts.size();
  if (budget >= n) return all_indices(n);
  std::vector<std::size_t> kept{0, n - 1};
  SplitQueue q;
  push_segment(q, pts, 0, 0, n - 1, kind);
  while (kept.size() < budget && !q.empty()) {
    const SplitCandidate c = q.top();
    q.pop();
    kept.push_back(c.worst);
    push_segment(q, pts, 0, c.a, c.worst, kind);
    push_segment(q, pts, 0, c.worst, c.b, kind);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Trajectory top_down(const Trajectory& traj, std::size_t budget, ErrorKind kind, const Projection& proj) {
  const auto pts = proj.project(traj);
  return pick(traj, top_down_indices(pts, budget, kind));
}

SimplifiedDatabase top_down_whole(const TrajectoryDatabase& db, std::size_t budget, ErrorKind kind,
                                  const Projection& proj) {
  std::size_t floor_points = 0;
  for (const auto& t : db.trajectories()) floor_points += std::min<std::size_t>(2, t.size());
  if (budget < floor_points) {
    throw std::invalid_argument("whole-database Top-Down needs at least both endpoints of every trajectory");
  }
  const auto planar = proj.project(db);
  std::vector<std::vector<std::size_t>> kept(db.size());
  std::size_t used = 0;
  SplitQueue q;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const std::size_t n = db[i].size();
    if (n == 0) continue;
    kept[i].push_back(0);
    if (n > 1) kept[i].push_back(n - 1);
    used += kept[i].size();
    push_segment(q, planar[i], i, 0, n - 1, kind);
  }
  while (used < budget && !q.empty()) {
    const SplitCandidate c = q.top();
    q.pop();
    kept[c.trajectory].push_back(c.worst);
    ++used;
    push_segment(q, planar[c.trajectory], c.trajectory, c.a, c.worst, kind);
    push_segment(q, planar[c.trajectory], c.trajectory, c.worst, c.b, kind);
  }
  for (auto& k : kept) std::sort(k.begin(), k.end());
  return SimplifiedDatabase::from_indices(db, std::move(kept));
}

std::vector<std::size_t> bottom_up_indices(std::span<const PlanarPoint> pts, std::size_t budget, ErrorKind kind) {
  if (budget < 2) throw std::invalid_argument("Bottom-Up needs a budget of at least 2 points");
  const std::size_t n = pts.size();
  if (budget >= n) return all_indices(n);
  std::vector<std::size_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = i == 0 ? 0 : i - 1;
    next[i] = i + 1;
  }
  std::vector<double> cost(n, 0.0);
  std::set<std::pair<double, std::size_t>> order;
  auto refresh = [&](std::size_t i) {
    cost[i] = segment_error(pts, prev[i], next[i], kind);
    order.emplace(cost[i], i);
  };
  for (std::size_t i = 1; i + 1 < n; ++i) refresh(i);
  std::vector<bool> alive(n, true);
  std::size_t remaining = n;
  while (remaining > budget) {
    const auto [c, i] = *order.begin();
    order.erase(order.begin());
    alive[i] = false;
    --remaining;
    const std::size_t p = prev[i], nx = next[i];
    next[p] = nx;
    prev[nx] = p;
    for (std::size_t nb : {p, nx}) {
      if (nb == 0 || nb == n - 1) continue;
      order.erase({cost[nb], nb});
      refresh(nb);
    }
  }
  std::vector<std::size_t> kept;
  kept.reserve(budget);
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) kept.push_back(i);
  return kept;
}

Trajectory bottom_up(const Trajectory& traj, std::size_t budget, ErrorKind kind, const Projection& proj) {
  const auto pts = proj.project(traj);
  return pick(traj, bottom_up_indices(pts, budget, kind));
}

SimplifiedDatabase uniform_sample(const TrajectoryDatabase& db, std::size_t budget, std::uint64_t seed) {
  const std::size_t total = db.total_points();
  if (budget > total) throw std::invalid_argument("uniform sample budget exceeds the database size");
  std::vector<std::size_t> chosen;
  chosen.reserve(budget);
  std::mt19937_64 rng(seed);
  // Selection sampling over the flat index space; output is ascending.
  std::vector<std::size_t> flat(total);
  std::iota(flat.begin(), flat.end(), std::size_t{0});
  std::sample(flat.begin(), flat.end(), std::back_inserter(chosen), budget, rng);
  std::vector<std::vector<std::size_t>> kept(db.size());
  std::size_t base = 0, ti = 0;
  for (std::size_t f : chosen) {
    while (f >= base + db[ti].size()) base += db[ti++].size();
    kept[ti].push_back(f - base);
  }
  return SimplifiedDatabase::from_indices(db, std::move(kept));
}

std::vector<std::size_t> allocate_budget(const TrajectoryDatabase& db, std::size_t budget) {
  const std::size_t total = db.total_points();
  std::vector<std::size_t> out(db.size(), 0);
  if (total == 0) return out;
  budget = std::min(budget, total);
  std::vector<std::pair<double, std::size_t>> frac;
  frac.reserve(db.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    // Exact integer share: budget * n_i / total.
    const std::size_t num = budget * db[i].size();
    out[i] = num / total;
    assigned += out[i];
    frac.emplace_back(static_cast<double>(num % total) / static_cast<double>(total), i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < budget; ++k) {
    ++out[frac[k].second];
    ++assigned;
  }
  return out;
}

}  // namespace mlsimp
