#pragma once

// Dense float64 inner loops used by the tensor kernel and the embedding
// distance code. Every routine has a scalar reference; vector variants are
// picked at runtime from the host CPU (override with MLSIMP_SIMD=scalar|avx2|neon
// or select()).

#include <cstddef>
#include <string_view>

namespace mlsimp::simd {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  Backend backend;
  const char* name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool available(Backend b);
/// Throws std::invalid_argument when the backend is unavailable.
void select(Backend b);
const KernelTable& active();
std::string_view backend_name(Backend b);

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline double sq_dist(const double* a, const double* b, std::size_t n) { return active().sq_dist(a, b, n); }

}  // namespace mlsimp::simd
