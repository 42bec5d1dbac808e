#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mlsimp/ad/ops.hpp"

namespace mlsimp::ad {

using Rng = std::mt19937_64;

/// Glorot-uniform matrix.
Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);
/// Standard normal entries scaled by `stddev`.
Tensor normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

/// y = x W + b with W [in, out].
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);
  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }
  bool has_bias() const { return !bias.value.empty(); }
  Var forward(Tape& tape, const Var& x);
  void collect(ParameterList& out);
};

/// Row layer normalization with per-feature gain and shift.
struct LayerNorm {
  Parameter gain;
  Parameter shift;
  double eps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t dim);
  Var forward(Tape& tape, const Var& x);
  void collect(ParameterList& out);
};

struct MultiHeadAttention {
  std::size_t heads = 1;
  Linear query, key, value, output;

  MultiHeadAttention() = default;
  /// Throws std::invalid_argument unless `heads` divides `dim`.
  MultiHeadAttention(const std::string& name, std::size_t dim, std::size_t heads, Rng& rng);
  std::size_t dim() const { return query.in(); }
  /// `key_valid[j] == 0` hides key j from every query. `weights`, when given,
  /// receives one [seq, seq] attention matrix per head.
  Var forward(Tape& tape, const Var& x, const std::vector<std::uint8_t>* key_valid = nullptr,
              std::vector<Tensor>* weights = nullptr);
  void collect(ParameterList& out);
};

struct FeedForward {
  Linear up, down;

  FeedForward() = default;
  FeedForward(const std::string& name, std::size_t dim, std::size_t hidden, Rng& rng);
  Var forward(Tape& tape, const Var& x);
  void collect(ParameterList& out);
};

/// Pre-norm encoder layer: x + MHA(LN(x)), then + FFN(LN(.)).
struct AttentionBlock {
  LayerNorm norm1, norm2;
  MultiHeadAttention attention;
  FeedForward ffn;

  AttentionBlock() = default;
  AttentionBlock(const std::string& name, std::size_t dim, std::size_t heads, Rng& rng);
  std::size_t dim() const { return attention.dim(); }
  void collect(ParameterList& out);
};

Var forward_attention(Tape& tape, AttentionBlock& block, const Var& x,
                      const std::vector<std::uint8_t>* key_valid = nullptr, std::vector<Tensor>* weights = nullptr);

/// Dense GAT layer. Each head scores e_ij = LeakyReLU(a_src.Wh_i + a_dst.Wh_j)
/// over the neighbourhood of i (which always includes i itself).
struct GraphAttentionLayer {
  std::size_t heads = 1;
  bool concat = true;
  double slope = 0.2;
  std::vector<Parameter> transform;  // per head [in, out]
  std::vector<Parameter> attn_src;   // per head [out, 1]
  std::vector<Parameter> attn_dst;

  GraphAttentionLayer() = default;
  GraphAttentionLayer(const std::string& name, std::size_t in, std::size_t out, std::size_t heads, bool concat,
                      Rng& rng);
  std::size_t in() const { return transform.front().value.rows(); }
  std::size_t head_dim() const { return transform.front().value.cols(); }
  /// Width of the layer output: heads * head_dim when concatenating.
  std::size_t out_dim() const { return concat ? heads * head_dim() : head_dim(); }
  void collect(ParameterList& out);
};

/// `adjacency[i]` lists the neighbours of node i. Neighbour ids outside
/// [0, nodes) throw std::invalid_argument. `weights` receives one [nodes, nodes]
/// coefficient matrix per head.
Var forward_gat(Tape& tape, GraphAttentionLayer& layer, const Var& features,
                const std::vector<std::vector<std::size_t>>& adjacency, std::vector<Tensor>* weights = nullptr);

}  // namespace mlsimp::ad
