#pragma once

// Differentiable primitives over rank-2 values. Row vectors are [1, m],
// column vectors [n, 1], scalars [1, 1]. Every op checks shapes and throws
// std::invalid_argument on mismatch.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlsimp/ad/tape.hpp"

namespace mlsimp::ad {

/// Row-major boolean mask; 1 keeps an entry.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  bool operator()(std::size_t r, std::size_t c) const { return keep[r * cols + c] != 0; }
};

Var matmul(const Var& a, const Var& b);     // [n,k] x [k,m]
Var matmul_nt(const Var& a, const Var& b);  // [n,k] x [m,k]^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);  // broadcast [1,m] over rows
Var mul_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var sum(const Var& a);
Var mean(const Var& a);

Var relu(const Var& a);
Var gelu(const Var& a);  // tanh approximation
Var elu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var exp(const Var& a);
Var log(const Var& a);  // throws NumericError on non-positive input
/// sqrt with a zero subgradient at 0 (distance terms hit 0 exactly).
Var sqrt(const Var& a);
Var sin(const Var& a);
Var sigmoid(const Var& a);

/// Row softmax; masked entries get weight 0. Fully masked rows yield zeros.
Var softmax_rows(const Var& a, const Mask* mask = nullptr);
/// (x - mean) / sqrt(var + eps) per row, no affine.
Var layer_norm_rows(const Var& a, double eps = 1e-5);

Var slice_rows(const Var& a, std::size_t begin, std::size_t count);
Var slice_cols(const Var& a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(const Var& table, std::span<const std::size_t> rows);
/// Mean of each group of rows; groups must be non-empty.
Var pool_rows(const Var& a, const std::vector<std::vector<std::size_t>>& groups);

/// D[i][j] = ||a_i - a_j||^2.
Var pairwise_sq_dist(const Var& a);
/// out[i][c] = a[i][cols[i][c]]; every row selects the same count.
Var select_per_row(const Var& a, const std::vector<std::vector<std::size_t>>& cols);
/// out[i] = log(mean_{j != i} exp(a[i][j])) for square a with n >= 2.
Var logmeanexp_offdiag(const Var& a);
/// a[i] + b[j] for column vectors a [n,1], b [m,1].
Var outer_add(const Var& a, const Var& b);

/// Mean negative log-likelihood of integer targets under row-softmax(logits).
Var cross_entropy(const Var& logits, std::span<const std::size_t> targets);
/// sum_i -y_i log p_i - (1 - y_i) log(1 - p_i); p must lie in (0, 1).
Var bce_sum(const Var& p, std::span<const double> y);
/// eps + (1 - 2 eps) (v - min) / (max - min) over a column; constant input -> 0.5.
Var minmax_normalize(const Var& v, double eps);
/// mean((a - b)^2)
Var mse(const Var& a, const Var& b);

}  // namespace mlsimp::ad
