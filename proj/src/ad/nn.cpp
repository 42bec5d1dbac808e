#include "mlsimp/ad/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace mlsimp::ad {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = stddev * n(rng);
  return t;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(name + ".weight", glorot(in, out, rng)) {
  if (with_bias) bias = Parameter(name + ".bias", Tensor::matrix(1, out));
}

Var Linear::forward(Tape& tape, const Var& x) {
  if (x.cols() != in()) throw std::invalid_argument("linear input width mismatch for " + weight.name);
  Var y = matmul(x, tape.param(weight));
  return has_bias() ? add_row(y, tape.param(bias)) : y;
}

void Linear::collect(ParameterList& out) {
  out.push_back(&weight);
  if (has_bias()) out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, std::size_t dim)
    : gain(name + ".gain", Tensor::matrix(1, dim, 1.0)), shift(name + ".shift", Tensor::matrix(1, dim)) {}

Var LayerNorm::forward(Tape& tape, const Var& x) {
  if (x.cols() != gain.value.cols()) throw std::invalid_argument("layer norm width mismatch for " + gain.name);
  return add_row(mul_row(layer_norm_rows(x, eps), tape.param(gain)), tape.param(shift));
}

void LayerNorm::collect(ParameterList& out) {
  out.push_back(&gain);
  out.push_back(&shift);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, std::size_t dim, std::size_t heads_, Rng& rng)
    : heads(heads_) {
  if (heads == 0 || dim % heads != 0) throw std::invalid_argument("head count must divide the model dimension");
  query = Linear(name + ".query", dim, dim, rng);
  key = Linear(name + ".key", dim, dim, rng);
  value = Linear(name + ".value", dim, dim, rng);
  output = Linear(name + ".output", dim, dim, rng);
}

Var MultiHeadAttention::forward(Tape& tape, const Var& x, const std::vector<std::uint8_t>* key_valid,
                                std::vector<Tensor>* weights) {
  const std::size_t n = x.rows(), d = dim(), dh = d / heads;
  if (x.cols() != d) throw std::invalid_argument("attention input width mismatch");
  Mask mask;
  if (key_valid) {
    if (key_valid->size() != n) throw std::invalid_argument("key mask length mismatch");
    mask = Mask{n, n, std::vector<std::uint8_t>(n * n)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) mask.keep[i * n + j] = (*key_valid)[j];
  }
  const Var q = query.forward(tape, x);
  const Var k = key.forward(tape, x);
  const Var v = value.forward(tape, x);
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> parts;
  parts.reserve(heads);
  if (weights) weights->clear();
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = slice_cols(q, h * dh, dh);
    const Var kh = slice_cols(k, h * dh, dh);
    const Var vh = slice_cols(v, h * dh, dh);
    const Var a = softmax_rows(scale(matmul_nt(qh, kh), s), key_valid ? &mask : nullptr);
    if (weights) weights->push_back(a.value());
    parts.push_back(matmul(a, vh));
  }
  const Var joined = heads == 1 ? parts.front() : concat_cols(parts);
  return output.forward(tape, joined);
}

void MultiHeadAttention::collect(ParameterList& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

FeedForward::FeedForward(const std::string& name, std::size_t dim, std::size_t hidden, Rng& rng)
    : up(name + ".up", dim, hidden, rng), down(name + ".down", hidden, dim, rng) {}

Var FeedForward::forward(Tape& tape, const Var& x) { return down.forward(tape, gelu(up.forward(tape, x))); }

void FeedForward::collect(ParameterList& out) {
  up.collect(out);
  down.collect(out);
}

AttentionBlock::AttentionBlock(const std::string& name, std::size_t dim, std::size_t heads, Rng& rng)
    : norm1(name + ".norm1", dim),
      norm2(name + ".norm2", dim),
      attention(name + ".attention", dim, heads, rng),
      ffn(name + ".ffn", dim, 4 * dim, rng) {}

void AttentionBlock::collect(ParameterList& out) {
  norm1.collect(out);
  attention.collect(out);
  norm2.collect(out);
  ffn.collect(out);
}

Var forward_attention(Tape& tape, AttentionBlock& block, const Var& x, const std::vector<std::uint8_t>* key_valid,
                      std::vector<Tensor>* weights) {
  if (x.cols() != block.dim()) throw std::invalid_argument("attention block width mismatch");
  const Var h = add(x, block.attention.forward(tape, block.norm1.forward(tape, x), key_valid, weights));
  return add(h, block.ffn.forward(tape, block.norm2.forward(tape, h)));
}

GraphAttentionLayer::GraphAttentionLayer(const std::string& name, std::size_t in, std::size_t out,
                                         std::size_t heads_, bool concat_, Rng& rng)
    : heads(heads_), concat(concat_) {
  if (heads == 0) throw std::invalid_argument("graph attention needs at least one head");
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string p = name + ".head" + std::to_string(h);
    transform.emplace_back(p + ".transform", glorot(in, out, rng));
    attn_src.emplace_back(p + ".attn_src", glorot(out, 1, rng));
    attn_dst.emplace_back(p + ".attn_dst", glorot(out, 1, rng));
  }
}

void GraphAttentionLayer::collect(ParameterList& out) {
  for (std::size_t h = 0; h < heads; ++h) {
    out.push_back(&transform[h]);
    out.push_back(&attn_src[h]);
    out.push_back(&attn_dst[h]);
  }
}

Var forward_gat(Tape& tape, GraphAttentionLayer& layer, const Var& features,
                const std::vector<std::vector<std::size_t>>& adjacency, std::vector<Tensor>* weights) {
  const std::size_t n = features.rows();
  if (features.cols() != layer.in()) throw std::invalid_argument("graph attention input width mismatch");
  if (adjacency.size() != n) throw std::invalid_argument("adjacency must list every node");
  Mask mask{n, n, std::vector<std::uint8_t>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    mask.keep[i * n + i] = 1;
    for (std::size_t j : adjacency[i]) {
      if (j >= n) throw std::invalid_argument("edge endpoint outside the node range");
      mask.keep[i * n + j] = 1;
    }
  }
  if (weights) weights->clear();
  std::vector<Var> parts;
  parts.reserve(layer.heads);
  for (std::size_t h = 0; h < layer.heads; ++h) {
    const Var wh = matmul(features, tape.param(layer.transform[h]));
    const Var src = matmul(wh, tape.param(layer.attn_src[h]));
    const Var dst = matmul(wh, tape.param(layer.attn_dst[h]));
    const Var alpha = softmax_rows(leaky_relu(outer_add(src, dst), layer.slope), &mask);
    if (weights) weights->push_back(alpha.value());
    parts.push_back(matmul(alpha, wh));
  }
  if (layer.heads == 1) return parts.front();
  if (layer.concat) return concat_cols(parts);
  Var acc = parts.front();
  for (std::size_t h = 1; h < parts.size(); ++h) acc = add(acc, parts[h]);
  return scale(acc, 1.0 / static_cast<double>(layer.heads));
}

}  // namespace mlsimp::ad
