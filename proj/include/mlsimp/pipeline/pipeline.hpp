#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlsimp/ad/checkpoint.hpp"
#include "mlsimp/baselines.hpp"
#include "mlsimp/pipeline/config.hpp"
#include "mlsimp/workload.hpp"

namespace mlsimp {

/// Coarse nx * ny * nt grid over the planar/temporal extent of a database.
/// Points outside the extent clamp to the border cells.
class AdjustmentGrid {
 public:
  AdjustmentGrid(const TrajectoryDatabase& db, const Projection& proj, std::size_t nx, std::size_t ny, std::size_t nt);

  std::size_t cells() const { return values_.size(); }
  std::size_t cell_of(const PlanarPoint& p) const;
  /// Query importance I^q per cell.
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t nx_, ny_, nt_;
  double x0_ = 0, x1_ = 0, y0_ = 0, y1_ = 0;
  double t0_ = 0, t1_ = 0;
  std::vector<double> values_;
};

/// Cells holding any point returned by a range query of `workload` get 1,
/// others 0; values are then divided by their maximum.
void mark_query_cells(AdjustmentGrid& grid, const TrajectoryDatabase& db, const Projection& proj,
                      const QueryWorkload& workload, const IndexOptions& index = {});

/// adjusted = (1 - delta) * normalized + delta * I^q(cell of the point).
/// Throws std::invalid_argument for delta outside [0, 1].
ImportanceVector adjust_importance(const ImportanceVector& importance, const TrajectoryDatabase& db,
                                   const Projection& proj, const AdjustmentGrid& grid, double delta);

/// Draws m points over the whole database by their adjusted importance and
/// regroups them per trajectory.
SimplifiedDatabase sample_database(const TrajectoryDatabase& db, const ImportanceVector& adjusted, std::size_t m,
                                   bool top_m, std::uint64_t seed);

struct SimplifyResult {
  SimplifiedDatabase simplified;
  ImportanceVector importance;
};

/// Predicts, normalises, adjusts with a data-distributed range workload and
/// samples compute_budget(total, cr) points.
SimplifyResult simplify(const TrajectoryDatabase& db, const Projection& proj, ImportanceModel& model,
                        const PipelineConfig& config);

/// Baselines at the global budget compute_budget(total, cr). Per-trajectory
/// methods split it with allocate_budget; a share of 1 keeps the first point
/// and a share of 0 keeps nothing.
SimplifiedDatabase run_baseline(const TrajectoryDatabase& db, const Projection& proj, const BaselineSpec& spec);

struct ErrorSummary {
  double mean = 0.0;
  double max = 0.0;
};

struct EvaluationReport {
  std::map<QueryType, double> mean_f1;
  std::map<QueryType, std::size_t> queries;
  std::map<ErrorKind, ErrorSummary> errors;  // PED and SED
  std::size_t original_points = 0;
  std::size_t retained_points = 0;
};

/// Per-trajectory simplification error (max over points), after closing each
/// simplified trajectory with the original endpoints.
ErrorSummary simplification_errors(const SimplifiedDatabase& simplified, const TrajectoryDatabase& original,
                                   const Projection& proj, ErrorKind kind);

/// Default evaluation workloads: `count` data-distributed queries per type.
std::vector<QueryWorkload> evaluation_workloads(const TrajectoryDatabase& db, const Projection& proj, std::size_t count,
                                                std::uint64_t seed);

EvaluationReport evaluate(const TrajectoryDatabase& original, const SimplifiedDatabase& simplified,
                          const Projection& proj, const std::vector<QueryWorkload>& workloads,
                          const EvaluationOptions& options = {});

std::string to_json(const EvaluationReport& r);
std::string to_table(const EvaluationReport& r);

/// Self-contained checkpoints: configs, vocabulary and projection travel with
/// the weights.
ad::Checkpoint to_checkpoint(TBert& model, const Projection& proj);
ad::Checkpoint to_checkpoint(ImportanceModel& model, const Projection& proj);
ad::Checkpoint to_checkpoint(DiffusionModel& model, const Projection& proj);
TBert tbert_from_checkpoint(const ad::Checkpoint& ck, Projection* proj = nullptr);
ImportanceModel importance_model_from_checkpoint(const ad::Checkpoint& ck, Projection* proj = nullptr);
DiffusionModel diffusion_model_from_checkpoint(const ad::Checkpoint& ck, Projection* proj = nullptr);

}  // namespace mlsimp
