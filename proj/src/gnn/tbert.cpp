#include "mlsimp/gnn/tbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlsimp/ad/optim.hpp"

namespace mlsimp {

using namespace ad;

std::vector<Segment> segment(std::size_t n, std::size_t w) {
  if (w < 2) throw std::invalid_argument("segment width must be at least 2");
  std::vector<Segment> out;
  for (std::size_t b = 0; b < n; b += w) out.push_back({b, std::min(w, n - b), w});
  return out;
}

std::vector<Segment> segment(const Trajectory& traj, std::size_t w) { return segment(traj.size(), w); }

SpatioTemporalEncoder::SpatioTemporalEncoder(const std::string& name, std::size_t vocab, std::size_t dim, Rng& rng)
    : cells(name + ".cells", normal(vocab + 1, dim, 0.5, rng)),
      freq(name + ".freq", normal(1, dim, 1.0, rng)),
      phase(name + ".phase", normal(1, dim, 1.0, rng)) {
  if (dim < 2) throw std::invalid_argument("encoder dimension must be at least 2");
}

Var SpatioTemporalEncoder::forward(Tape& tape, const EncoderInput& in) {
  const std::size_t w = in.cells.size(), d = dim();
  Tensor tau = Tensor::matrix(w, 1);
  for (std::size_t i = 0; i < w; ++i) tau[i] = in.tau[i];
  const Var lin = add_row(matmul(tape.constant(std::move(tau)), tape.param(freq)), tape.param(phase));
  const Var parts[] = {slice_cols(lin, 0, 1), ad::sin(slice_cols(lin, 1, d - 1))};
  const Var time = concat_cols(parts);
  return add(gather_rows(tape.param(cells), in.cells), time);
}

void SpatioTemporalEncoder::collect(ParameterList& out) {
  out.push_back(&cells);
  out.push_back(&freq);
  out.push_back(&phase);
}

TBert::TBert(const std::string& name, TBertConfig cfg, CellVocabulary v, std::uint64_t seed)
    : config(cfg), vocab(std::move(v)) {
  if (config.window < 2) throw std::invalid_argument("T-Bert window must be at least 2");
  if (config.heads == 0 || config.dim % config.heads != 0) {
    throw std::invalid_argument("T-Bert head count must divide the model dimension");
  }
  Rng rng(seed);
  input = SpatioTemporalEncoder(name + ".input", vocab.size(), config.dim, rng);
  blocks.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    blocks.emplace_back(name + ".block" + std::to_string(l), config.dim, config.heads, rng);
  }
  mlm_head = Linear(name + ".mlm_head", config.dim, vocab.size(), rng);
  // Near-zero logits: the untrained head predicts close to uniform.
  for (double& x : mlm_head.weight.value.values()) x *= 1e-3;
}

TrajectoryFeatures TBert::featurize(const Trajectory& traj, const Projection& proj) const {
  TrajectoryFeatures f;
  f.cells.reserve(traj.size());
  f.tau.reserve(traj.size());
  const double t0 = traj.empty() ? 0.0 : static_cast<double>(traj[0].t);
  for (const Point& p : traj.points) {
    f.cells.push_back(vocab.id_of(proj.project(p)));
    f.tau.push_back((static_cast<double>(p.t) - t0) / config.time_scale_s);
  }
  return f;
}

ParameterList TBert::parameters(bool with_head) {
  ParameterList out;
  input.collect(out);
  for (AttentionBlock& b : blocks) b.collect(out);
  if (with_head) mlm_head.collect(out);
  return out;
}

EncoderInput make_input(const TBert& model, const TrajectoryFeatures& f, const Segment& seg,
                        const std::vector<std::uint8_t>* masked) {
  if (seg.begin + seg.length > f.size() || seg.length > seg.width) {
    throw std::invalid_argument("segment does not fit the trajectory");
  }
  EncoderInput in;
  in.cells.assign(seg.width, CellVocabulary::kUnknown);
  in.tau.assign(seg.width, 0.0);
  in.valid.assign(seg.width, 0);
  for (std::size_t k = 0; k < seg.length; ++k) {
    const std::size_t i = seg.begin + k;
    in.cells[k] = (masked && (*masked)[i]) ? model.mask_id() : f.cells[i];
    in.tau[k] = f.tau[i];
    in.valid[k] = 1;
  }
  return in;
}

Var encode_points(Tape& tape, TBert& model, const EncoderInput& in) {
  if (in.cells.size() > model.config.window) throw std::invalid_argument("window longer than the model allows");
  Var x = model.input.forward(tape, in);
  for (AttentionBlock& b : model.blocks) x = forward_attention(tape, b, x, &in.valid);
  return layer_norm_rows(x);
}

Var encode_trajectory(Tape& tape, TBert& model, const TrajectoryFeatures& f, const std::vector<std::uint8_t>* masked) {
  if (f.size() == 0) throw std::invalid_argument("cannot encode an empty trajectory");
  std::vector<Var> parts;
  for (const Segment& seg : segment(f.size(), model.config.window)) {
    const Var h = encode_points(tape, model, make_input(model, f, seg, masked));
    parts.push_back(seg.padding() ? slice_rows(h, 0, seg.length) : h);
  }
  return parts.size() == 1 ? parts.front() : concat_rows(parts);
}

std::vector<Tensor> embed_corpus(TBert& model, const std::vector<TrajectoryFeatures>& corpus) {
  std::vector<Tensor> out;
  out.reserve(corpus.size());
  for (const TrajectoryFeatures& f : corpus) {
    Tape tape(false);
    out.push_back(encode_trajectory(tape, model, f).value());
  }
  return out;
}

std::vector<std::uint8_t> mlm_mask(std::size_t n, double fraction, Rng& rng) {
  std::vector<std::uint8_t> mask(n, 0);
  if (n == 0) return mask;
  const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  const std::size_t count = std::clamp<std::size_t>(want, 1, n);
  std::vector<std::size_t> idx(n), pick;
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sample(idx.begin(), idx.end(), std::back_inserter(pick), count, rng);
  for (std::size_t i : pick) mask[i] = 1;
  return mask;
}

namespace {

struct MlmStep {
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

MlmStep mlm_step(TBert& model, const TrajectoryFeatures& f, const std::vector<std::uint8_t>& mask, bool train) {
  Tape tape(train);
  const Var h = encode_trajectory(tape, model, f, &mask);
  std::vector<std::size_t> rows, targets;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!mask[i]) continue;
    rows.push_back(i);
    targets.push_back(f.cells[i]);
  }
  const Var logits = model.mlm_head.forward(tape, gather_rows(h, rows));
  const Var loss = cross_entropy(logits, targets);
  MlmStep s{loss.value().item(), 0, rows.size()};
  const Tensor& lg = logits.value();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* row = lg.row(r);
    const auto best = static_cast<std::size_t>(std::max_element(row, row + lg.cols()) - row);
    s.correct += best == targets[r];
  }
  if (train) tape.backward(loss);
  return s;
}

}  // namespace

MlmEpoch evaluate_mlm(TBert& model, const std::vector<TrajectoryFeatures>& corpus, double mask_fraction,
                      std::uint64_t seed) {
  if (corpus.empty()) throw std::invalid_argument("MLM evaluation needs a non-empty corpus");
  Rng rng(seed);
  double loss = 0.0;
  std::size_t correct = 0, total = 0;
  for (const TrajectoryFeatures& f : corpus) {
    const MlmStep s = mlm_step(model, f, mlm_mask(f.size(), mask_fraction, rng), false);
    loss += s.loss;
    correct += s.correct;
    total += s.total;
  }
  return {loss / static_cast<double>(corpus.size()), static_cast<double>(correct) / static_cast<double>(total)};
}

std::vector<MlmEpoch> pretrain_mlm(TBert& model, const std::vector<TrajectoryFeatures>& corpus,
                                   const MlmOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("MLM pretraining needs a non-empty corpus");
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  Rng rng(options.seed);
  const ParameterList params = model.parameters(true);
  Adam adam(params, {.lr = options.lr});
  adam.zero_grad();
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<MlmEpoch> log;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    std::size_t correct = 0, total = 0, pending = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const TrajectoryFeatures& f = corpus[order[k]];
      const MlmStep s = mlm_step(model, f, mlm_mask(f.size(), options.mask_fraction, rng), true);
      loss += s.loss;
      correct += s.correct;
      total += s.total;
      if (++pending == batch || k + 1 == order.size()) {
        for (Parameter* p : params)
          for (double& g : p->grad.values()) g /= static_cast<double>(pending);
        adam.step();
        adam.zero_grad();
        pending = 0;
      }
    }
    log.push_back({loss / static_cast<double>(corpus.size()), static_cast<double>(correct) / static_cast<double>(total)});
  }
  return log;
}

std::vector<TrajectoryFeatures> featurize(const TBert& model, const TrajectoryDatabase& db, const Projection& proj) {
  std::vector<TrajectoryFeatures> out;
  out.reserve(db.size());
  for (const Trajectory& tr : db.trajectories()) out.push_back(model.featurize(tr, proj));
  return out;
}

}  // namespace mlsimp
