#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mlsimp/core.hpp"
#include "mlsimp/distance.hpp"
#include "mlsimp/query.hpp"

namespace mlsimp {

enum class QueryType { Range, Knn, Similarity, Clustering };
enum class Distribution { Data, Gaussian };

std::string to_string(QueryType t);
QueryType query_type_from_string(const std::string& s);

struct WorkloadSpec {
  QueryType type = QueryType::Range;
  std::size_t count = 100;
  Distribution distribution = Distribution::Data;
  double mu = 0.5;
  double sigma = 0.25;
  double spatial_window_m = 2000.0;    // box side
  double temporal_window_s = 86400.0;  // window length
  std::size_t k = 3;
  double delta_m = 5000.0;
  double edr_threshold_m = 2000.0;
  std::size_t link_threshold = 10;
  std::uint64_t seed = 0;
};

using Query = std::variant<RangeQuery, KnnQuery, SimilarityQuery, ClusteringQuery>;

struct QueryWorkload {
  WorkloadSpec spec;
  std::vector<Query> queries;
};

/// Pure function of (db, proj, spec). Throws std::invalid_argument for an
/// empty database, count == 0 or a non-positive gaussian sigma.
QueryWorkload generate_workload(const TrajectoryDatabase& db, const Projection& proj, const WorkloadSpec& spec);

/// F1 of result sets. Both empty -> 1; no overlap -> 0.
double f1_query(const QueryResult& simplified, const QueryResult& original);
/// F1 over unordered same-cluster pairs. Throws ContractError when the two
/// partitions do not cover the same ids.
double f1_clustering(const Partition& simplified, const Partition& original);

struct EvaluationOptions {
  IndexOptions index;
  double similarity_tick_s = 60.0;
};

struct SuiteReport {
  std::map<QueryType, double> mean_f1;
  std::map<QueryType, std::size_t> queries;
};

/// Runs every query on both databases and averages F1 per query type.
/// `simplified` must carry the same ids as `original`.
SuiteReport evaluate_suite(const TrajectoryDatabase& original, const TrajectoryDatabase& simplified,
                           const Projection& proj, const std::vector<QueryWorkload>& workloads,
                           const EvaluationOptions& options = {});

/// Per-query F1 values for one workload, in query order.
std::vector<double> evaluate_workload(const QueryEngine& original, const QueryEngine& simplified,
                                      const QueryWorkload& workload, const EvaluationOptions& options = {});

}  // namespace mlsimp
