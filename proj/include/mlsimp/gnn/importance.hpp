#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlsimp/gnn/tbert.hpp"

namespace mlsimp {

struct GnnConfig {
  std::size_t gat_layers = 2;
  std::size_t gat_heads = 2;
  std::size_t gat_out = 16;
  std::size_t neighbors = 10;
  double lambda1 = 0.5;
  double lambda3 = 0.5;
  double eps = 1e-6;
};

/// Complete bipartite graph between the points of one trajectory and its
/// segments. Nodes [0, points) are points, [points, points + segments) segments.
struct TrajectoryGraph {
  std::size_t points = 0;
  std::size_t segments = 0;
  std::vector<std::vector<std::size_t>> groups;     // real member points per segment
  std::vector<std::vector<std::size_t>> adjacency;  // per node

  std::size_t nodes() const { return points + segments; }
  /// Undirected point-segment edges: points * segments.
  std::size_t edge_count() const;
};

TrajectoryGraph build_graph(const std::vector<Segment>& segments);
/// H = [H_p; H_seg] where each segment row is the mean of its member points.
ad::Var graph_features(const TrajectoryGraph& graph, const ad::Var& point_embeddings);

struct ImportanceModel {
  GnnConfig config;
  TBert tbert;
  std::vector<ad::GraphAttentionLayer> gat;

  ImportanceModel() = default;
  ImportanceModel(const std::string& name, GnnConfig config, TBert tbert, std::uint64_t seed);
  std::size_t out_dim() const;
  /// Graph-attention parameters only; T-Bert stays frozen while GNN-TS trains.
  ad::ParameterList gnn_parameters();
};

/// g_i after the graph-attention stack (ELU between layers), layer-normalised.
/// With zero layers g_i = h_i.
ad::Var refine(ad::Tape& tape, ImportanceModel& model, const TrajectoryGraph& graph, const ad::Var& features);

/// For each row, the k most cosine-similar other rows (ties to the lower index).
std::vector<std::vector<std::size_t>> cosine_neighbors(const ad::Tensor& g, std::size_t k);

/// [n, 1] mean L2 distance from each row of g to its listed neighbours.
/// Throws std::invalid_argument when a row has no neighbours.
ad::Var uniqueness(const ad::Var& g, const std::vector<std::vector<std::size_t>>& neighbors);
/// [n, 1] log mean_{j != i} exp(-2 ||g_i - g_j||^2). Throws for n < 2.
ad::Var globality(const ad::Var& g);
/// mean(uni + lambda1 * glob).
ad::Var contrastive_loss(const ad::Var& uni, const ad::Var& glob, double lambda1);
/// uni * glob + eps.
ad::Var raw_importance(const ad::Var& uni, const ad::Var& glob, double eps);
/// Summed binary cross-entropy of importances in (0, 1) against 0/1 labels.
ad::Var ml_loss(const ad::Var& importance, std::span<const double> labels);

struct GnnForward {
  ad::Var g;
  ad::Var uni;
  ad::Var glob;
  ad::Var raw;
};

/// Full GNN-TS pass over cached T-Bert embeddings [n, dim] of one trajectory.
GnnForward forward_gnn(ad::Tape& tape, ImportanceModel& model, const ad::Tensor& embeddings);

struct GnnTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct GnnEpoch {
  double loss = 0.0;
  double contrastive = 0.0;
  double ml = 0.0;
};

/// Stage 1 when `labels` is null (contrastive loss only); otherwise
/// L_con + lambda3 * L_ml with labels aligned to `embeddings`.
std::vector<GnnEpoch> train_gnn_ts(ImportanceModel& model, const std::vector<ad::Tensor>& embeddings,
                                   const std::vector<std::vector<double>>* labels, const GnnTrainOptions& options);

/// Raw importance per point of every trajectory.
std::vector<std::vector<double>> predict_raw(ImportanceModel& model, const std::vector<ad::Tensor>& embeddings);
/// Raw plus database-level normalised importance.
ImportanceVector predict_importance(ImportanceModel& model, const TrajectoryDatabase& db, const Projection& proj);

}  // namespace mlsimp
