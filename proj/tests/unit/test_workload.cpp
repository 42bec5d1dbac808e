#include <gtest/gtest.h>

#include <cmath>

#include "mlsimp/workload.hpp"
#include "synthetic.hpp"

using namespace mlsimp;

namespace {

const TrajectoryDatabase& fixture() {
  static const TrajectoryDatabase db = support::random_database({.trajectories = 20, .min_points = 15, .max_points = 30, .seed = 41});
  return db;
}

QueryResult ids(std::vector<TrajectoryId> v) { return QueryResult{std::move(v), false}; }

}  // namespace

TEST(F1Query, Cases) {
  EXPECT_EQ(f1_query(ids({"a", "b"}), ids({"a", "b"})), 1.0);
  EXPECT_EQ(f1_query(ids({"a"}), ids({"b"})), 0.0);
  EXPECT_EQ(f1_query(ids({}), ids({})), 1.0);
  EXPECT_EQ(f1_query(ids({}), ids({"a"})), 0.0);
  EXPECT_NEAR(f1_query(ids({"a", "b"}), ids({"a", "b", "c", "d"})), 2.0 / 3.0, 1e-12);
}

TEST(F1Query, SymmetricAndBounded) {
  const std::vector<std::vector<TrajectoryId>> sets{{}, {"a"}, {"a", "b"}, {"b", "c", "d"}, {"a", "c"}};
  for (const auto& x : sets)
    for (const auto& y : sets) {
      const double f = f1_query(ids(x), ids(y));
      EXPECT_EQ(f, f1_query(ids(y), ids(x)));
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      EXPECT_EQ(f == 1.0, x == y);
    }
}

TEST(F1Clustering, Cases) {
  EXPECT_EQ(f1_clustering({{"a", "b"}, {"c"}}, {{"a", "b"}, {"c"}}), 1.0);
  EXPECT_EQ(f1_clustering({{"a", "b"}, {"c"}}, {{"a"}, {"b"}, {"c"}}), 0.0);
  EXPECT_EQ(f1_clustering({{"a"}, {"b"}}, {{"a"}, {"b"}}), 1.0);
  EXPECT_NEAR(f1_clustering({{"a", "b", "c"}}, {{"a", "b"}, {"c"}}), 0.5, 1e-12);
  EXPECT_THROW(f1_clustering({{"a"}}, {{"b"}}), ContractError);
}

TEST(Workload, DeterministicUnderSeed) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  for (QueryType t : {QueryType::Range, QueryType::Knn, QueryType::Similarity, QueryType::Clustering})
    for (Distribution d : {Distribution::Data, Distribution::Gaussian}) {
      WorkloadSpec ws{.type = t, .count = 20, .distribution = d, .seed = 3};
      const auto a = generate_workload(db, proj, ws), b = generate_workload(db, proj, ws);
      ASSERT_EQ(a.queries.size(), 20u);
      for (std::size_t i = 0; i < a.queries.size(); ++i) {
        EXPECT_EQ(a.queries[i].index(), b.queries[i].index());
        if (t == QueryType::Range) {
          const auto &x = std::get<RangeQuery>(a.queries[i]), &y = std::get<RangeQuery>(b.queries[i]);
          EXPECT_EQ(x.x_min, y.x_min);
          EXPECT_EQ(x.t_max, y.t_max);
        }
      }
    }
}

TEST(Workload, RangeBoxesAreTwoKilometres) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  const auto w = generate_workload(db, proj, {.type = QueryType::Range, .count = 30, .seed = 4});
  for (const Query& q : w.queries) {
    const auto& r = std::get<RangeQuery>(q);
    EXPECT_NEAR((r.x_max - r.x_min) * proj.meters_per_deg_x(), 2000.0, 1e-6);
    EXPECT_NEAR((r.y_max - r.y_min) * proj.meters_per_deg_y(), 2000.0, 1e-6);
    EXPECT_EQ(r.t_max - r.t_min, 86400);
  }
}

TEST(Workload, DataCentersAreDatabasePoints) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  const auto w = generate_workload(db, proj, {.type = QueryType::Range, .count = 30, .seed = 5});
  const QueryEngine e(db, proj);
  for (const Query& q : w.queries) EXPECT_FALSE(e.range(std::get<RangeQuery>(q)).ids.empty());
}

TEST(Workload, TinySigmaCentersAtMidpoint) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  double x0 = 1e9, x1 = -1e9;
  for (const auto& t : db.trajectories())
    for (const auto& p : t.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
    }
  const auto w = generate_workload(db, proj, {.type = QueryType::Range, .count = 10, .distribution = Distribution::Gaussian,
                                              .sigma = 1e-12, .seed = 6});
  for (const Query& q : w.queries) {
    const auto& r = std::get<RangeQuery>(q);
    EXPECT_NEAR((r.x_min + r.x_max) / 2.0, (x0 + x1) / 2.0, 1e-9);
  }
}

TEST(Workload, RejectsBadSpecs) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  EXPECT_THROW(generate_workload(TrajectoryDatabase(), proj, {}), std::invalid_argument);
  EXPECT_THROW(generate_workload(db, proj, {.count = 0}), std::invalid_argument);
  EXPECT_THROW(generate_workload(db, proj, {.distribution = Distribution::Gaussian, .sigma = 0.0}), std::invalid_argument);
}

TEST(Suite, IdentityAndEmpty) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  std::vector<QueryWorkload> ws;
  for (QueryType t : {QueryType::Range, QueryType::Knn, QueryType::Similarity, QueryType::Clustering}) {
    ws.push_back(generate_workload(db, proj, {.type = t, .count = 8, .seed = 7}));
  }
  const auto same = evaluate_suite(db, db, proj, ws);
  for (const auto& [t, f] : same.mean_f1) EXPECT_EQ(f, 1.0) << to_string(t);
  std::vector<Trajectory> empty;
  for (const auto& t : db.trajectories()) empty.push_back(Trajectory{t.id, {}});
  const auto none = evaluate_suite(db, TrajectoryDatabase(empty), proj, ws);
  for (const auto& [t, f] : none.mean_f1) EXPECT_EQ(f, 0.0) << to_string(t);
  EXPECT_EQ(none.queries.at(QueryType::Knn), 8u);
}

TEST(Suite, MatchesPerQueryRecomputation) {
  const auto& db = fixture();
  const Projection proj = Projection::for_database(db);
  std::vector<Trajectory> half;
  for (const auto& t : db.trajectories()) {
    Trajectory h{t.id, {}};
    for (std::size_t i = 0; i < t.size(); i += 2) h.points.push_back(t[i]);
    half.push_back(h);
  }
  const TrajectoryDatabase sdb(half);
  const QueryEngine eo(db, proj), es(sdb, proj);
  for (QueryType t : {QueryType::Range, QueryType::Knn, QueryType::Similarity, QueryType::Clustering}) {
    const auto w = generate_workload(db, proj, {.type = t, .count = 10, .seed = 8});
    double sum = 0.0;
    for (const Query& q : w.queries) {
      if (const auto* r = std::get_if<RangeQuery>(&q)) sum += f1_query(es.range(*r), eo.range(*r));
      if (const auto* k = std::get_if<KnnQuery>(&q)) sum += f1_query(es.knn(*k, 2000.0), eo.knn(*k, 2000.0));
      if (const auto* s = std::get_if<SimilarityQuery>(&q)) sum += f1_query(es.similarity(*s, 60.0), eo.similarity(*s, 60.0));
      if (const auto* c = std::get_if<ClusteringQuery>(&q)) sum += f1_clustering(es.cluster(*c), eo.cluster(*c));
    }
    const auto rep = evaluate_suite(db, sdb, proj, {w});
    EXPECT_NEAR(rep.mean_f1.at(t), sum / 10.0, 1e-12) << to_string(t);
  }
}
