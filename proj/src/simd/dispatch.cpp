#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mlsimp/simd/kernels.hpp"

namespace mlsimp::simd {

const KernelTable* avx2_table_impl();
const KernelTable* neon_table_impl();

namespace {

bool cpu_has_avx2() {
#if (defined(__GNUC__) || defined(__clang__)) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("MLSIMP_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable* t = cpu_has_avx2() ? avx2_table_impl() : nullptr;
  return t;
}

const KernelTable* neon_table() { return neon_table_impl(); }

bool available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return avx2_table() != nullptr;
    case Backend::Neon:
      return neon_table() != nullptr;
  }
  return false;
}

void select(Backend b) {
  const KernelTable* t = nullptr;
  switch (b) {
    case Backend::Scalar:
      t = &scalar_table();
      break;
    case Backend::Avx2:
      t = avx2_table();
      break;
    case Backend::Neon:
      t = neon_table();
      break;
  }
  if (!t) throw std::invalid_argument("SIMD backend '" + std::string(backend_name(b)) + "' is not available");
  slot().store(t);
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace mlsimp::simd
