#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "mlsimp/gnn/diff_ts.hpp"
#include "mlsimp/gnn/importance.hpp"

namespace mlsimp {

struct MlSchedule {
  std::size_t stage1_epochs = 20;
  std::size_t warmup = 20;  // epochs per model between signal exchanges
  std::size_t rounds = 2;
  double cr_high = 0.5;
  std::size_t alpha = 20;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct MlLogRecord {
  std::string stage;  // "stage1", "diff_ts", "gnn_ts" or "exchange"
  std::size_t round = 0;
  std::size_t epoch = 0;  // running epoch counter of the model named in stage
  double loss = 0.0;
  double contrastive = 0.0;
  double ml = 0.0;
  double diffusion = 0.0;
  double diversity = 0.0;
};

/// One JSON object per record, no trailing newline.
std::string to_json_line(const MlLogRecord& r);

/// Per trajectory, round(cr_high * |T|) indices drawn by weighted sampling
/// without replacement; weights are raw importances min-max normalised over
/// the whole corpus. Throws std::invalid_argument unless 0.5 <= cr_high < 1.
std::vector<std::vector<std::size_t>> soft_labels(ImportanceModel& model, const std::vector<ad::Tensor>& embeddings,
                                                  double cr_high, std::uint64_t seed);

/// Stage 1 then `rounds` exchanges, updating both models in place. The
/// returned log also goes to `log_out` as JSON lines when given. T-Bert
/// embeddings are computed once from gnn.tbert and held fixed.
std::vector<MlLogRecord> run_mutual_learning(ImportanceModel& gnn, DiffusionModel& diff,
                                             const std::vector<TrajectoryFeatures>& corpus, const MlSchedule& schedule,
                                             std::ostream* log_out = nullptr);

}  // namespace mlsimp
