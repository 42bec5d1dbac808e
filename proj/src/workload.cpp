#include "mlsimp/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

namespace mlsimp {

std::string to_string(QueryType t) {
  switch (t) {
    case QueryType::Range:
      return "range";
    case QueryType::Knn:
      return "knn";
    case QueryType::Similarity:
      return "similarity";
    case QueryType::Clustering:
      return "clustering";
  }
  return "unknown";
}

QueryType query_type_from_string(const std::string& s) {
  if (s == "range") return QueryType::Range;
  if (s == "knn") return QueryType::Knn;
  if (s == "similarity") return QueryType::Similarity;
  if (s == "clustering") return QueryType::Clustering;
  throw std::invalid_argument("unknown query type '" + s + "'");
}

namespace {

struct Extent {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -std::numeric_limits<double>::infinity();
  double y_min = x_min, y_max = x_max;
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max(), t_max = std::numeric_limits<std::int64_t>::min();
};

Extent extent_of(const TrajectoryDatabase& db) {
  Extent e;
  for (const auto& t : db.trajectories()) {
    for (const auto& p : t.points) {
      e.x_min = std::min(e.x_min, p.x);
      e.x_max = std::max(e.x_max, p.x);
      e.y_min = std::min(e.y_min, p.y);
      e.y_max = std::max(e.y_max, p.y);
      e.t_min = std::min(e.t_min, p.t);
      e.t_max = std::max(e.t_max, p.t);
    }
  }
  return e;
}

class CenterSampler {
 public:
  CenterSampler(const TrajectoryDatabase& db, const WorkloadSpec& spec)
      : db_(db), spec_(spec), rng_(spec.seed), extent_(extent_of(db)) {
    offsets_.reserve(db.size() + 1);
    std::size_t acc = 0;
    for (const auto& t : db.trajectories()) {
      offsets_.push_back(acc);
      acc += t.size();
    }
    offsets_.push_back(acc);
  }

  std::mt19937_64& rng() { return rng_; }
  const Extent& extent() const { return extent_; }

  /// Normalised coordinate ~ clip(N(mu, sigma), 0, 1).
  double gaussian_unit() {
    std::normal_distribution<double> nd(spec_.mu, spec_.sigma);
    return std::clamp(nd(rng_), 0.0, 1.0);
  }

  Point center() {
    if (spec_.distribution == Distribution::Data) {
      std::uniform_int_distribution<std::size_t> pick(0, offsets_.back() - 1);
      const std::size_t flat = pick(rng_);
      const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat) - 1;
      const std::size_t ti = static_cast<std::size_t>(it - offsets_.begin());
      return db_[ti].points[flat - *it];
    }
    const double ux = gaussian_unit(), uy = gaussian_unit(), ut = gaussian_unit();
    return {extent_.x_min + ux * (extent_.x_max - extent_.x_min), extent_.y_min + uy * (extent_.y_max - extent_.y_min),
            extent_.t_min + static_cast<std::int64_t>(std::llround(ut * static_cast<double>(extent_.t_max - extent_.t_min)))};
  }

  /// Query trajectory drawn uniformly and a reference time on it.
  std::pair<const Trajectory*, std::int64_t> trajectory_and_time() {
    std::uniform_int_distribution<std::size_t> pick(0, db_.size() - 1);
    const Trajectory* t = &db_[pick(rng_)];
    while (t->empty()) t = &db_[pick(rng_)];
    std::int64_t tc;
    if (spec_.distribution == Distribution::Data) {
      std::uniform_int_distribution<std::size_t> pp(0, t->size() - 1);
      tc = t->points[pp(rng_)].t;
    } else {
      const double u = gaussian_unit();
      tc = extent_.t_min + static_cast<std::int64_t>(std::llround(u * static_cast<double>(extent_.t_max - extent_.t_min)));
      tc = std::clamp(tc, t->points.front().t, t->points.back().t);
    }
    return {t, tc};
  }

 private:
  const TrajectoryDatabase& db_;
  const WorkloadSpec& spec_;
  std::mt19937_64 rng_;
  Extent extent_;
  std::vector<std::size_t> offsets_;
};

std::pair<std::int64_t, std::int64_t> window_around(std::int64_t tc, double length) {
  const auto half = static_cast<std::int64_t>(std::llround(length / 2.0));
  return {tc - half, tc + half};
}

}  // namespace

QueryWorkload generate_workload(const TrajectoryDatabase& db, const Projection& proj, const WorkloadSpec& spec) {
  if (db.total_points() == 0) throw std::invalid_argument("cannot generate a workload over an empty database");
  if (spec.count == 0) throw std::invalid_argument("workload count must be >= 1");
  if (spec.distribution == Distribution::Gaussian && !(spec.sigma > 0.0)) {
    throw std::invalid_argument("gaussian sigma must be positive");
  }
  CenterSampler sampler(db, spec);
  QueryWorkload w{spec, {}};
  w.queries.reserve(spec.count);
  const double half_x = spec.spatial_window_m / 2.0 / proj.meters_per_deg_x();
  const double half_y = spec.spatial_window_m / 2.0 / proj.meters_per_deg_y();
  for (std::size_t i = 0; i < spec.count; ++i) {
    switch (spec.type) {
      case QueryType::Range: {
        const Point c = sampler.center();
        const auto [t0, t1] = window_around(c.t, spec.temporal_window_s);
        w.queries.emplace_back(RangeQuery{c.x - half_x, c.x + half_x, c.y - half_y, c.y + half_y, t0, t1});
        break;
      }
      case QueryType::Knn: {
        const auto [traj, tc] = sampler.trajectory_and_time();
        const auto [t0, t1] = window_around(tc, spec.temporal_window_s);
        w.queries.emplace_back(KnnQuery{spec.k, *traj, t0, t1});
        break;
      }
      case QueryType::Similarity: {
        const auto [traj, tc] = sampler.trajectory_and_time();
        auto [t0, t1] = window_around(tc, spec.temporal_window_s);
        t0 = std::max(t0, traj->points.front().t);
        t1 = std::min(t1, traj->points.back().t);
        w.queries.emplace_back(SimilarityQuery{*traj, t0, t1, spec.delta_m});
        break;
      }
      case QueryType::Clustering: {
        const Point c = sampler.center();
        const auto [t0, t1] = window_around(c.t, spec.temporal_window_s);
        w.queries.emplace_back(ClusteringQuery{t0, t1, spec.edr_threshold_m, spec.link_threshold});
        break;
      }
    }
  }
  return w;
}

namespace {

double f1_from_counts(std::size_t overlap, std::size_t simplified, std::size_t original) {
  if (simplified == 0 && original == 0) return 1.0;
  if (simplified == 0 || original == 0 || overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(simplified);
  const double r = static_cast<double>(overlap) / static_cast<double>(original);
  return 2.0 * p * r / (p + r);
}

std::set<std::pair<TrajectoryId, TrajectoryId>> co_membership(const Partition& part) {
  std::set<std::pair<TrajectoryId, TrajectoryId>> pairs;
  for (const auto& c : part) {
    std::vector<TrajectoryId> ids(c.begin(), c.end());
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.emplace(ids[i], ids[j]);
  }
  return pairs;
}

std::set<TrajectoryId> universe(const Partition& part) {
  std::set<TrajectoryId> u;
  for (const auto& c : part) u.insert(c.begin(), c.end());
  return u;
}

}  // namespace

double f1_query(const QueryResult& simplified, const QueryResult& original) {
  std::vector<TrajectoryId> a = simplified.ids, b = original.ids;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::vector<TrajectoryId> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return f1_from_counts(both.size(), a.size(), b.size());
}

double f1_clustering(const Partition& simplified, const Partition& original) {
  if (universe(simplified) != universe(original)) {
    throw ContractError("clusterings cover different trajectory sets");
  }
  const auto cs = co_membership(simplified);
  const auto co = co_membership(original);
  std::size_t overlap = 0;
  for (const auto& p : cs) overlap += co.count(p);
  return f1_from_counts(overlap, cs.size(), co.size());
}

std::vector<double> evaluate_workload(const QueryEngine& original, const QueryEngine& simplified,
                                      const QueryWorkload& workload, const EvaluationOptions& options) {
  std::vector<double> out;
  out.reserve(workload.queries.size());
  const double edr_thr = workload.spec.edr_threshold_m;
  for (const Query& q : workload.queries) {
    const double f1 = std::visit(
        [&](const auto& query) -> double {
          using Q = std::decay_t<decltype(query)>;
          if constexpr (std::is_same_v<Q, RangeQuery>) {
            return f1_query(simplified.range(query), original.range(query));
          } else if constexpr (std::is_same_v<Q, KnnQuery>) {
            return f1_query(simplified.knn(query, edr_thr), original.knn(query, edr_thr));
          } else if constexpr (std::is_same_v<Q, SimilarityQuery>) {
            return f1_query(simplified.similarity(query, options.similarity_tick_s),
                            original.similarity(query, options.similarity_tick_s));
          } else {
            return f1_clustering(simplified.cluster(query), original.cluster(query));
          }
        },
        q);
    out.push_back(f1);
  }
  return out;
}

SuiteReport evaluate_suite(const TrajectoryDatabase& original, const TrajectoryDatabase& simplified,
                           const Projection& proj, const std::vector<QueryWorkload>& workloads,
                           const EvaluationOptions& options) {
  const QueryEngine eo(original, proj, options.index);
  const QueryEngine es(simplified, proj, options.index);
  std::map<QueryType, double> sums;
  SuiteReport report;
  for (const auto& w : workloads) {
    const auto f1 = evaluate_workload(eo, es, w, options);
    for (double v : f1) sums[w.spec.type] += v;
    report.queries[w.spec.type] += f1.size();
  }
  for (const auto& [type, sum] : sums) {
    report.mean_f1[type] = report.queries[type] ? sum / static_cast<double>(report.queries[type]) : 0.0;
  }
  return report;
}

}  // namespace mlsimp
