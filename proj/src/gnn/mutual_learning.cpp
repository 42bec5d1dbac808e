#include "mlsimp/gnn/mutual_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "mlsimp/sampling.hpp"

namespace mlsimp {

using namespace ad;

std::string to_json_line(const MlLogRecord& r) {
  nlohmann::ordered_json j;
  j["stage"] = r.stage;
  j["round"] = r.round;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["contrastive"] = r.contrastive;
  j["ml"] = r.ml;
  j["diffusion"] = r.diffusion;
  j["diversity"] = r.diversity;
  return j.dump();
}

std::vector<std::vector<std::size_t>> soft_labels(ImportanceModel& model, const std::vector<Tensor>& embeddings,
                                                  double cr_high, std::uint64_t seed) {
  if (!(cr_high >= 0.5 && cr_high < 1.0)) throw std::invalid_argument("cr_high must lie in [0.5, 1)");
  const auto raw = predict_raw(model, embeddings);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : raw)
    for (double v : r) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double eps = model.config.eps;
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(raw.size());
  std::vector<double> w;
  for (const auto& r : raw) {
    w.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = hi > lo ? eps + (1.0 - 2.0 * eps) * (r[i] - lo) / (hi - lo) : 0.5;
    const auto m = static_cast<std::size_t>(std::llround(cr_high * static_cast<double>(r.size())));
    out.push_back(weighted_sample(w, std::min(m, r.size()), rng));
  }
  return out;
}

namespace {

void emit(std::vector<MlLogRecord>& log, std::ostream* out, MlLogRecord r) {
  if (out) *out << to_json_line(r) << '\n';
  log.push_back(std::move(r));
}

}  // namespace

std::vector<MlLogRecord> run_mutual_learning(ImportanceModel& gnn, DiffusionModel& diff,
                                             const std::vector<TrajectoryFeatures>& corpus, const MlSchedule& s,
                                             std::ostream* log_out) {
  if (corpus.empty()) throw std::invalid_argument("mutual learning needs a non-empty corpus");
  if (s.warmup == 0) throw std::invalid_argument("warm-up epochs must be at least 1");
  std::vector<MlLogRecord> log;
  const std::vector<Tensor> emb = embed_corpus(gnn.tbert, corpus);

  const auto stage1 = train_gnn_ts(gnn, emb, nullptr, {s.stage1_epochs, s.batch, s.lr, s.seed});
  std::size_t gnn_epoch = 0, diff_epoch = 0;
  for (const GnnEpoch& e : stage1) emit(log, log_out, {"stage1", 0, ++gnn_epoch, e.loss, e.contrastive, e.ml, 0, 0});

  for (std::size_t round = 1; round <= s.rounds; ++round) {
    const std::uint64_t rs = s.seed + 1000003ULL * round;
    const auto soft = soft_labels(gnn, emb, s.cr_high, rs);
    const auto dlog = train_diff_ts(diff, corpus, soft, {s.warmup, s.batch, s.lr, rs + 1});
    for (const DiffEpoch& e : dlog) {
      emit(log, log_out, {"diff_ts", round, ++diff_epoch, e.loss, 0, 0, e.diffusion, e.diversity});
    }
    std::vector<std::vector<double>> labels(corpus.size());
    for (std::size_t t = 0; t < corpus.size(); ++t) {
      const std::size_t n = corpus[t].size();
      labels[t].assign(n, 0.0);
      if (n < 2) continue;
      const AmplifiedLabels a = infer_amplified(diff, corpus[t], std::min(s.alpha, n - 1), rs + 2 + t);
      for (std::size_t i = 0; i < n; ++i) labels[t][i] = a.labels[i];
    }
    emit(log, log_out, {"exchange", round, gnn_epoch, 0, 0, 0, 0, 0});
    const auto glog = train_gnn_ts(gnn, emb, &labels, {s.warmup, s.batch, s.lr, rs + 3});
    for (const GnnEpoch& e : glog) emit(log, log_out, {"gnn_ts", round, ++gnn_epoch, e.loss, e.contrastive, e.ml, 0, 0});
  }
  return log;
}

}  // namespace mlsimp
