#include "mlsimp/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mlsimp/simd/kernels.hpp"

namespace mlsimp::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_matrix(const Var& a, const char* op) {
  require(a.valid() && a.value().rank() == 2, op);
}

Tape& tape_of(const Var& a) { return *a.tape(); }

void same_tape(const Var& a, const Var& b) { require(a.tape() == b.tape(), "operands live on different tapes"); }

Tensor like(const Tensor& t) { return Tensor(t.shape()); }

template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  require_matrix(a, "unary op needs a matrix");
  const Tensor& x = a.value();
  Tensor y = like(x);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(std::move(y), {a}, [a, df](Tape& t, const Tensor& g) {
    if (!t.needs_grad(a)) return;
    const Tensor& x = a.value();
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * df(x[i]);
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols() == B.rows(), "matmul inner dimensions differ");
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C = Tensor::matrix(n, m);
  const auto& K = simd::active();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) K.axpy(A(i, p), B.row(p), C.row(i), m);
  return tape_of(a).record(std::move(C), {a, b}, [a, b, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const auto& K = simd::active();
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) ga(i, p) += K.dot(g.row(i), B.row(p), m);
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_of(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) K.axpy(A(i, p), g.row(i), gb.row(p), m);
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_matrix(a, "matmul_nt lhs");
  require_matrix(b, "matmul_nt rhs");
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols() == B.cols(), "matmul_nt inner dimensions differ");
  const std::size_t n = A.rows(), k = A.cols(), m = B.rows();
  Tensor C = Tensor::matrix(n, m);
  const auto& K = simd::active();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) C(i, j) = K.dot(A.row(i), B.row(j), k);
  return tape_of(a).record(std::move(C), {a, b}, [a, b, n, k, m](Tape& t, const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const auto& K = simd::active();
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) K.axpy(g(i, j), B.row(j), ga.row(i), k);
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_of(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) K.axpy(g(i, j), A.row(i), gb.row(j), k);
    }
  });
}

namespace {

template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, F f, DA da, DB db, const char* op) {
  require_matrix(a, op);
  require_matrix(b, op);
  same_tape(a, b);
  require(a.value().same_shape(b.value()), op);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor z = like(x);
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = f(x[i], y[i]);
  return tape_of(a).record(std::move(z), {a, b}, [a, b, da, db](Tape& t, const Tensor& g) {
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * da(x[i], y[i]);
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_of(b);
      for (std::size_t i = 0; i < x.size(); ++i) gb[i] += g[i] * db(x[i], y[i]);
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; }, "add: shape mismatch");
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; }, "sub: shape mismatch");
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; }, "mul: shape mismatch");
}

Var add_row(const Var& a, const Var& row) {
  require_matrix(a, "add_row");
  require_matrix(row, "add_row");
  same_tape(a, row);
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  require(r.rows() == 1 && r.cols() == x.cols(), "add_row: row width mismatch");
  Tensor y = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) += r[j];
  return tape_of(a).record(std::move(y), {a, row}, [a, row](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(row)) {
      Tensor& gr = t.grad_of(row);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
    }
  });
}

Var mul_row(const Var& a, const Var& row) {
  require_matrix(a, "mul_row");
  require_matrix(row, "mul_row");
  same_tape(a, row);
  const Tensor& x = a.value();
  const Tensor& r = row.value();
  require(r.rows() == 1 && r.cols() == x.cols(), "mul_row: row width mismatch");
  Tensor y = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) *= r[j];
  return tape_of(a).record(std::move(y), {a, row}, [a, row](Tape& t, const Tensor& g) {
    const Tensor& x = a.value();
    const Tensor& r = row.value();
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * r[j];
    }
    if (t.needs_grad(row)) {
      Tensor& gr = t.grad_of(row);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j) * x(i, j);
    }
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var sum(const Var& a) {
  require_matrix(a, "sum");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

Var mean(const Var& a) {
  require_matrix(a, "mean");
  require(a.value().size() > 0, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(const Var& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x))); },
      [](double x) {
        const double u = c * (x + 0.044715 * x * x * x);
        const double th = std::tanh(u);
        const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
      });
}

Var elu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); }, [](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; }, [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(const Var& a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw NumericError("log of a non-positive value");
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var sqrt(const Var& a) {
  return unary(
      a, [](double x) { return std::sqrt(std::max(x, 0.0)); },
      [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var sin(const Var& a) {
  return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var sigmoid(const Var& a) {
  auto f = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  return unary(a, f, [f](double x) {
    const double s = f(x);
    return s * (1.0 - s);
  });
}

Var softmax_rows(const Var& a, const Mask* mask) {
  require_matrix(a, "softmax_rows");
  const Tensor& x = a.value();
  const std::size_t n = x.rows(), m = x.cols();
  if (mask) require(mask->rows == n && mask->cols == m, "softmax mask shape mismatch");
  Tensor y = like(x);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) mx = std::max(mx, x(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask && !(*mask)(i, j)) continue;
      y(i, j) = std::exp(x(i, j) - mx);
      z += y(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) y(i, j) /= z;
  }
  Tensor ycopy = y;
  return tape_of(a).record(std::move(y), {a}, [a, y = std::move(ycopy), n, m](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < n; ++i) {
      double dotgy = 0.0;
      for (std::size_t j = 0; j < m; ++j) dotgy += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < m; ++j) ga(i, j) += y(i, j) * (g(i, j) - dotgy);
    }
  });
}

Var layer_norm_rows(const Var& a, double eps) {
  require_matrix(a, "layer_norm_rows");
  const Tensor& x = a.value();
  const std::size_t n = x.rows(), m = x.cols();
  Tensor y = like(x);
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += x(i, j);
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= static_cast<double>(m);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) y(i, j) = (x(i, j) - mu) * inv_std[i];
  }
  Tensor ycopy = y;
  return tape_of(a).record(std::move(y), {a},
                           [a, inv_std = std::move(inv_std), yv = std::move(ycopy), n, m](Tape& t, const Tensor& g) {
                             Tensor& ga = t.grad_of(a);
                             const double fm = static_cast<double>(m);
                             for (std::size_t i = 0; i < n; ++i) {
                               double mg = 0.0, mgy = 0.0;
                               for (std::size_t j = 0; j < m; ++j) {
                                 mg += g(i, j);
                                 mgy += g(i, j) * yv(i, j);
                               }
                               mg /= fm;
                               mgy /= fm;
                               for (std::size_t j = 0; j < m; ++j)
                                 ga(i, j) += inv_std[i] * (g(i, j) - mg - yv(i, j) * mgy);
                             }
                           });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
  require_matrix(a, "slice_rows");
  const Tensor& x = a.value();
  require(begin + count <= x.rows(), "slice_rows out of range");
  const std::size_t m = x.cols();
  Tensor y = Tensor::matrix(count, m);
  std::copy(x.row(begin), x.row(begin) + count * m, y.row(0));
  return tape_of(a).record(std::move(y), {a}, [a, begin, count, m](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t k = 0; k < count * m; ++k) ga[begin * m + k] += g[k];
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
  require_matrix(a, "slice_cols");
  const Tensor& x = a.value();
  require(begin + count <= x.cols(), "slice_cols out of range");
  const std::size_t n = x.rows();
  Tensor y = Tensor::matrix(n, count);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, begin + j);
  return tape_of(a).record(std::move(y), {a}, [a, begin, count, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < count; ++j) ga(i, begin + j) += g(i, j);
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows needs at least one part");
  const std::size_t m = parts[0].cols();
  std::size_t n = 0;
  for (const Var& p : parts) {
    require_matrix(p, "concat_rows");
    require(p.cols() == m && p.tape() == parts[0].tape(), "concat_rows: width mismatch");
    n += p.rows();
  }
  Tensor y = Tensor::matrix(n, m);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), y.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += p.value().size();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(y), parts, [ps](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : ps) {
      const std::size_t sz = p.value().size();
      if (t.needs_grad(p)) {
        Tensor& gp = t.grad_of(p);
        for (std::size_t k = 0; k < sz; ++k) gp[k] += g[off + k];
      }
      off += sz;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols needs at least one part");
  const std::size_t n = parts[0].rows();
  std::size_t m = 0;
  for (const Var& p : parts) {
    require_matrix(p, "concat_cols");
    require(p.rows() == n && p.tape() == parts[0].tape(), "concat_cols: height mismatch");
    m += p.cols();
  }
  Tensor y = Tensor::matrix(n, m);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) y(i, off + j) = v(i, j);
    off += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(y), parts, [ps, n](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : ps) {
      const std::size_t w = p.cols();
      if (t.needs_grad(p)) {
        Tensor& gp = t.grad_of(p);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off + j);
      }
      off += w;
    }
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> rows) {
  require_matrix(table, "gather_rows");
  const Tensor& x = table.value();
  const std::size_t m = x.cols();
  Tensor y = Tensor::matrix(rows.size(), m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < x.rows(), "gather_rows index out of range");
    std::copy(x.row(rows[r]), x.row(rows[r]) + m, y.row(r));
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return tape_of(table).record(std::move(y), {table}, [table, idx = std::move(idx), m](Tape& t, const Tensor& g) {
    Tensor& gt = t.grad_of(table);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < m; ++j) gt(idx[r], j) += g(r, j);
  });
}

Var pool_rows(const Var& a, const std::vector<std::vector<std::size_t>>& groups) {
  require_matrix(a, "pool_rows");
  const Tensor& x = a.value();
  const std::size_t m = x.cols();
  Tensor y = Tensor::matrix(groups.size(), m);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    require(!groups[k].empty(), "pool_rows: empty group");
    for (std::size_t r : groups[k]) {
      require(r < x.rows(), "pool_rows index out of range");
      for (std::size_t j = 0; j < m; ++j) y(k, j) += x(r, j);
    }
    for (std::size_t j = 0; j < m; ++j) y(k, j) /= static_cast<double>(groups[k].size());
  }
  return tape_of(a).record(std::move(y), {a}, [a, groups, m](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const double w = 1.0 / static_cast<double>(groups[k].size());
      for (std::size_t r : groups[k])
        for (std::size_t j = 0; j < m; ++j) ga(r, j) += w * g(k, j);
    }
  });
}

Var pairwise_sq_dist(const Var& a) {
  require_matrix(a, "pairwise_sq_dist");
  const Tensor& x = a.value();
  const std::size_t n = x.rows(), d = x.cols();
  Tensor D = Tensor::matrix(n, n);
  const auto& K = simd::active();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) D(i, j) = D(j, i) = K.sq_dist(x.row(i), x.row(j), d);
  return tape_of(a).record(std::move(D), {a}, [a, n, d](Tape& t, const Tensor& g) {
    const Tensor& x = a.value();
    Tensor& ga = t.grad_of(a);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = 2.0 * (g(i, j) + g(j, i));
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) ga(i, c) += w * (x(i, c) - x(j, c));
      }
    }
  });
}

Var select_per_row(const Var& a, const std::vector<std::vector<std::size_t>>& cols) {
  require_matrix(a, "select_per_row");
  const Tensor& x = a.value();
  require(cols.size() == x.rows(), "select_per_row: one column list per row");
  const std::size_t k = cols.empty() ? 0 : cols[0].size();
  Tensor y = Tensor::matrix(x.rows(), k);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    require(cols[i].size() == k, "select_per_row: ragged column lists");
    for (std::size_t c = 0; c < k; ++c) {
      require(cols[i][c] < x.cols(), "select_per_row index out of range");
      y(i, c) = x(i, cols[i][c]);
    }
  }
  return tape_of(a).record(std::move(y), {a}, [a, cols, k](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (std::size_t c = 0; c < k; ++c) ga(i, cols[i][c]) += g(i, c);
  });
}

Var logmeanexp_offdiag(const Var& a) {
  require_matrix(a, "logmeanexp_offdiag");
  const Tensor& x = a.value();
  const std::size_t n = x.rows();
  require(x.cols() == n && n >= 2, "logmeanexp_offdiag needs a square matrix with n >= 2");
  Tensor y = Tensor::matrix(n, 1);
  Tensor w = Tensor::matrix(n, n);  // softmax weights over j != i
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) mx = std::max(mx, x(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      w(i, j) = std::exp(x(i, j) - mx);
      z += w(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) w(i, j) /= z;
    y(i, 0) = mx + std::log(z / static_cast<double>(n - 1));
  }
  return tape_of(a).record(std::move(y), {a}, [a, w = std::move(w), n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ga(i, j) += g(i, 0) * w(i, j);
  });
}

Var outer_add(const Var& a, const Var& b) {
  require_matrix(a, "outer_add");
  require_matrix(b, "outer_add");
  same_tape(a, b);
  require(a.cols() == 1 && b.cols() == 1, "outer_add needs column vectors");
  const std::size_t n = a.rows(), m = b.rows();
  Tensor y = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) y(i, j) = a.value()[i] + b.value()[j];
  return tape_of(a).record(std::move(y), {a, b}, [a, b, n, m](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[i] += g(i, j);
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_of(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gb[j] += g(i, j);
    }
  });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> targets) {
  require_matrix(logits, "cross_entropy");
  const Tensor& x = logits.value();
  const std::size_t n = x.rows(), v = x.cols();
  require(targets.size() == n && n > 0, "cross_entropy: one target per row");
  Tensor p = like(x);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(targets[i] < v, "cross_entropy target out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, x(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      p(i, j) = std::exp(x(i, j) - mx);
      z += p(i, j);
    }
    for (std::size_t j = 0; j < v; ++j) p(i, j) /= z;
    loss -= x(i, targets[i]) - mx - std::log(z);
  }
  loss /= static_cast<double>(n);
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return tape_of(logits).record(Tensor::scalar(loss), {logits},
                                [logits, p = std::move(p), tg = std::move(tg), n, v](Tape& t, const Tensor& g) {
                                  Tensor& gl = t.grad_of(logits);
                                  const double s = g[0] / static_cast<double>(n);
                                  for (std::size_t i = 0; i < n; ++i) {
                                    for (std::size_t j = 0; j < v; ++j) gl(i, j) += s * p(i, j);
                                    gl(i, tg[i]) -= s;
                                  }
                                });
}

Var bce_sum(const Var& p, std::span<const double> y) {
  require_matrix(p, "bce_sum");
  const Tensor& x = p.value();
  require(x.size() == y.size(), "bce_sum: one label per probability");
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && x[i] < 1.0)) throw std::invalid_argument("bce_sum probabilities must lie in (0, 1)");
    loss -= y[i] * std::log(x[i]) + (1.0 - y[i]) * std::log(1.0 - x[i]);
  }
  std::vector<double> yy(y.begin(), y.end());
  return tape_of(p).record(Tensor::scalar(loss), {p}, [p, yy = std::move(yy)](Tape& t, const Tensor& g) {
    const Tensor& x = p.value();
    Tensor& gp = t.grad_of(p);
    for (std::size_t i = 0; i < x.size(); ++i) gp[i] += g[0] * (-yy[i] / x[i] + (1.0 - yy[i]) / (1.0 - x[i]));
  });
}

Var minmax_normalize(const Var& v, double eps) {
  require_matrix(v, "minmax_normalize");
  const Tensor& x = v.value();
  require(x.cols() == 1 && x.rows() > 0, "minmax_normalize needs a column vector");
  const std::size_t n = x.rows();
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < x[lo]) lo = i;
    if (x[i] > x[hi]) hi = i;
  }
  const double span = x[hi] - x[lo];
  const double c = 1.0 - 2.0 * eps;
  Tensor y = like(x);
  for (std::size_t i = 0; i < n; ++i) y[i] = span > 0.0 ? eps + c * (x[i] - x[lo]) / span : 0.5;
  if (!(span > 0.0)) return tape_of(v).record(std::move(y), {v}, [](Tape&, const Tensor&) {});
  return tape_of(v).record(std::move(y), {v}, [v, lo, hi, span, c, n](Tape& t, const Tensor& g) {
    const Tensor& x = v.value();
    Tensor& gv = t.grad_of(v);
    double to_lo = 0.0, to_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - x[lo]) / span;
      gv[i] += g[i] * c / span;
      // d u / d x_lo = (u - 1) / span, d u / d x_hi = -u / span
      to_lo += g[i] * c * (u - 1.0) / span;
      to_hi += g[i] * c * (-u) / span;
    }
    gv[lo] += to_lo;
    gv[hi] += to_hi;
  });
}

Var mse(const Var& a, const Var& b) {
  const Var d = sub(a, b);
  return mean(mul(d, d));
}

}  // namespace mlsimp::ad
