#include "mlsimp/gnn/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlsimp/ad/optim.hpp"

namespace mlsimp {

using namespace ad;

std::size_t TrajectoryGraph::edge_count() const { return points * segments; }

TrajectoryGraph build_graph(const std::vector<Segment>& segments) {
  TrajectoryGraph g;
  g.segments = segments.size();
  for (const Segment& s : segments) g.points += s.length;
  g.groups.resize(g.segments);
  g.adjacency.resize(g.nodes());
  for (std::size_t j = 0; j < g.segments; ++j) {
    const Segment& s = segments[j];
    if (s.length == 0) throw std::invalid_argument("graph segments must be non-empty");
    g.groups[j].resize(s.length);
    std::iota(g.groups[j].begin(), g.groups[j].end(), s.begin);
  }
  for (std::size_t i = 0; i < g.points; ++i) {
    for (std::size_t j = 0; j < g.segments; ++j) {
      g.adjacency[i].push_back(g.points + j);
      g.adjacency[g.points + j].push_back(i);
    }
  }
  return g;
}

Var graph_features(const TrajectoryGraph& graph, const Var& point_embeddings) {
  if (point_embeddings.rows() != graph.points) throw std::invalid_argument("embeddings must cover every point");
  const Var parts[] = {point_embeddings, pool_rows(point_embeddings, graph.groups)};
  return concat_rows(parts);
}

ImportanceModel::ImportanceModel(const std::string& name, GnnConfig cfg, TBert t, std::uint64_t seed)
    : config(cfg), tbert(std::move(t)) {
  Rng rng(seed);
  std::size_t in = tbert.config.dim;
  gat.reserve(config.gat_layers);
  for (std::size_t l = 0; l < config.gat_layers; ++l) {
    const bool last = l + 1 == config.gat_layers;
    gat.emplace_back(name + ".gat" + std::to_string(l), in, config.gat_out, config.gat_heads, !last, rng);
    in = gat.back().out_dim();
  }
}

std::size_t ImportanceModel::out_dim() const { return gat.empty() ? tbert.config.dim : gat.back().out_dim(); }

ParameterList ImportanceModel::gnn_parameters() {
  ParameterList out;
  for (GraphAttentionLayer& l : gat) l.collect(out);
  return out;
}

Var refine(Tape& tape, ImportanceModel& model, const TrajectoryGraph& graph, const Var& features) {
  if (features.rows() != graph.nodes()) throw std::invalid_argument("features must cover every graph node");
  if (model.gat.empty()) return slice_rows(features, 0, graph.points);
  Var x = features;
  for (std::size_t l = 0; l < model.gat.size(); ++l) {
    x = forward_gat(tape, model.gat[l], x, graph.adjacency);
    if (l + 1 < model.gat.size()) x = elu(x);
  }
  return layer_norm_rows(slice_rows(x, 0, graph.points));
}

std::vector<std::vector<std::size_t>> cosine_neighbors(const Tensor& g, std::size_t k) {
  const std::size_t n = g.rows(), d = g.cols();
  k = std::min(k, n == 0 ? 0 : n - 1);
  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += g(i, c) * g(i, c);
    norm[i] = std::sqrt(s);
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += g(i, c) * g(j, c);
      const double den = norm[i] * norm[j];
      cand.emplace_back(den > 0.0 ? dot / den : 0.0, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(cand[r].second);
  }
  return out;
}

Var uniqueness(const Var& g, const std::vector<std::vector<std::size_t>>& neighbors) {
  if (neighbors.size() != g.rows()) throw std::invalid_argument("one neighbour list per point required");
  for (const auto& nb : neighbors) {
    if (nb.empty()) throw std::invalid_argument("uniqueness needs at least one neighbour");
  }
  const std::size_t k = neighbors.front().size();
  const Var dist = ad::sqrt(select_per_row(pairwise_sq_dist(g), neighbors));
  return matmul(dist, g.tape()->constant(Tensor::matrix(k, 1, 1.0 / static_cast<double>(k))));
}

Var globality(const Var& g) {
  if (g.rows() < 2) throw std::invalid_argument("globality needs at least two points");
  return logmeanexp_offdiag(scale(pairwise_sq_dist(g), -2.0));
}

Var contrastive_loss(const Var& uni, const Var& glob, double lambda1) { return mean(add(uni, scale(glob, lambda1))); }

Var raw_importance(const Var& uni, const Var& glob, double eps) { return add_scalar(mul(uni, glob), eps); }

Var ml_loss(const Var& importance, std::span<const double> labels) {
  for (double v : importance.value().data()) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("ML loss needs importances inside (0, 1)");
  }
  return bce_sum(importance, labels);
}

GnnForward forward_gnn(Tape& tape, ImportanceModel& model, const Tensor& embeddings) {
  const TrajectoryGraph graph = build_graph(segment(embeddings.rows(), model.tbert.config.window));
  const Var h = tape.constant(embeddings);
  GnnForward f;
  f.g = refine(tape, model, graph, graph_features(graph, h));
  const auto nb = cosine_neighbors(f.g.value(), model.config.neighbors);
  f.uni = uniqueness(f.g, nb);
  f.glob = globality(f.g);
  f.raw = raw_importance(f.uni, f.glob, model.config.eps);
  return f;
}

std::vector<GnnEpoch> train_gnn_ts(ImportanceModel& model, const std::vector<Tensor>& embeddings,
                                   const std::vector<std::vector<double>>* labels, const GnnTrainOptions& options) {
  if (embeddings.empty()) throw std::invalid_argument("GNN-TS training needs a non-empty corpus");
  if (labels && labels->size() != embeddings.size()) throw std::invalid_argument("labels must align with the corpus");
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  Rng rng(options.seed);
  const ParameterList params = model.gnn_parameters();
  Adam adam(params, {.lr = options.lr});
  adam.zero_grad();
  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<GnnEpoch> log;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    GnnEpoch rec;
    std::size_t pending = 0, used = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t ti = order[k];
      if (embeddings[ti].rows() >= 2) {
        Tape tape;
        const GnnForward f = forward_gnn(tape, model, embeddings[ti]);
        Var loss = contrastive_loss(f.uni, f.glob, model.config.lambda1);
        rec.contrastive += loss.value().item();
        if (labels) {
          const Var ml = ml_loss(minmax_normalize(f.raw, model.config.eps), (*labels)[ti]);
          rec.ml += ml.value().item();
          loss = add(loss, scale(ml, model.config.lambda3));
        }
        rec.loss += loss.value().item();
        tape.backward(loss);
        ++pending;
        ++used;
      }
      if (pending == batch || (k + 1 == order.size() && pending > 0)) {
        for (Parameter* p : params)
          for (double& g : p->grad.values()) g /= static_cast<double>(pending);
        adam.step();
        adam.zero_grad();
        pending = 0;
      }
    }
    if (used) {
      rec.loss /= static_cast<double>(used);
      rec.contrastive /= static_cast<double>(used);
      rec.ml /= static_cast<double>(used);
    }
    log.push_back(rec);
  }
  return log;
}

std::vector<std::vector<double>> predict_raw(ImportanceModel& model, const std::vector<Tensor>& embeddings) {
  std::vector<std::vector<double>> out;
  out.reserve(embeddings.size());
  for (const Tensor& h : embeddings) {
    if (h.rows() < 2) {
      out.emplace_back(h.rows(), model.config.eps);
      continue;
    }
    Tape tape(false);
    const GnnForward f = forward_gnn(tape, model, h);
    out.emplace_back(f.raw.value().values());
  }
  return out;
}

ImportanceVector predict_importance(ImportanceModel& model, const TrajectoryDatabase& db, const Projection& proj) {
  std::vector<Tensor> emb;
  emb.reserve(db.size());
  for (const Trajectory& tr : db.trajectories()) {
    if (tr.empty()) {
      emb.emplace_back(std::vector<std::size_t>{0, model.tbert.config.dim});
      continue;
    }
    Tape tape(false);
    emb.push_back(encode_trajectory(tape, model.tbert, model.tbert.featurize(tr, proj)).value());
  }
  const auto raw = predict_raw(model, emb);
  ImportanceVector iv = ImportanceVector::shaped_like(db);
  for (std::size_t t = 0; t < raw.size(); ++t)
    for (std::size_t i = 0; i < raw[t].size(); ++i) iv[t][i].raw = raw[t][i];
  iv.normalize(model.config.eps);
  return iv;
}

}  // namespace mlsimp
