#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlsimp/ad/nn.hpp"
#include "mlsimp/gnn/vocabulary.hpp"

namespace mlsimp {

struct TBertConfig {
  std::size_t dim = 16;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t window = 20;
  double cell_m = 100.0;
  double time_scale_s = 3600.0;
};

/// Contiguous run [begin, begin + length) of a trajectory, padded to `width`.
struct Segment {
  std::size_t begin = 0;
  std::size_t length = 0;
  std::size_t width = 0;

  std::size_t padding() const { return width - length; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// ceil(n / w) segments; the last one is padded. Throws std::invalid_argument
/// for w < 2.
std::vector<Segment> segment(std::size_t n, std::size_t w);
std::vector<Segment> segment(const Trajectory& traj, std::size_t w);

/// Encoder inputs per point: vocabulary cell id and scaled time since start.
struct TrajectoryFeatures {
  std::vector<std::size_t> cells;
  std::vector<double> tau;

  std::size_t size() const { return cells.size(); }
};

/// One padded encoder window. Rows with valid == 0 are padding.
struct EncoderInput {
  std::vector<std::size_t> cells;
  std::vector<double> tau;
  std::vector<std::uint8_t> valid;
};

/// z_i = location embedding of the cell plus a Time2Vec code of tau:
/// [w0 tau + b0, sin(w_k tau + b_k)].
struct SpatioTemporalEncoder {
  ad::Parameter cells;  // [vocab + 1, dim]; the last row is the mask token
  ad::Parameter freq;   // [1, dim]
  ad::Parameter phase;  // [1, dim]

  SpatioTemporalEncoder() = default;
  SpatioTemporalEncoder(const std::string& name, std::size_t vocab, std::size_t dim, ad::Rng& rng);
  std::size_t dim() const { return freq.value.cols(); }
  std::size_t mask_id() const { return cells.value.rows() - 1; }
  ad::Var forward(ad::Tape& tape, const EncoderInput& in);
  void collect(ad::ParameterList& out);
};

struct TBert {
  TBertConfig config;
  CellVocabulary vocab;
  SpatioTemporalEncoder input;
  std::vector<ad::AttentionBlock> blocks;
  ad::Linear mlm_head;  // dim -> vocab

  TBert() = default;
  /// Throws std::invalid_argument when heads does not divide dim or window < 2.
  TBert(const std::string& name, TBertConfig config, CellVocabulary vocab, std::uint64_t seed);

  std::size_t mask_id() const { return input.mask_id(); }
  TrajectoryFeatures featurize(const Trajectory& traj, const Projection& proj) const;
  /// Encoder parameters, plus the MLM head when `with_head`.
  ad::ParameterList parameters(bool with_head = true);
};

/// Builds the window for `seg`; positions listed in `masked` (trajectory
/// indices) take the mask token.
EncoderInput make_input(const TBert& model, const TrajectoryFeatures& f, const Segment& seg,
                        const std::vector<std::uint8_t>* masked = nullptr);

/// [w, dim] final-layer output of one window, layer-normalised per row.
/// Rows at padding positions carry no meaning.
ad::Var encode_points(ad::Tape& tape, TBert& model, const EncoderInput& in);
/// [n, dim] embeddings of every real point, segment by segment.
ad::Var encode_trajectory(ad::Tape& tape, TBert& model, const TrajectoryFeatures& f,
                          const std::vector<std::uint8_t>* masked = nullptr);
/// Gradient-free embeddings of every trajectory.
std::vector<ad::Tensor> embed_corpus(TBert& model, const std::vector<TrajectoryFeatures>& corpus);

struct MlmOptions {
  std::size_t epochs = 10;
  std::size_t batch = 8;
  double lr = 3e-3;
  double mask_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct MlmEpoch {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// round(fraction * n) distinct positions (at least 1), as a 0/1 mask.
std::vector<std::uint8_t> mlm_mask(std::size_t n, double fraction, ad::Rng& rng);

/// Loss and accuracy over the corpus with parameters held fixed.
MlmEpoch evaluate_mlm(TBert& model, const std::vector<TrajectoryFeatures>& corpus, double mask_fraction,
                      std::uint64_t seed);
/// One record per epoch, measured while training. Throws std::invalid_argument
/// for an empty corpus.
std::vector<MlmEpoch> pretrain_mlm(TBert& model, const std::vector<TrajectoryFeatures>& corpus,
                                   const MlmOptions& options);

std::vector<TrajectoryFeatures> featurize(const TBert& model, const TrajectoryDatabase& db, const Projection& proj);

}  // namespace mlsimp
