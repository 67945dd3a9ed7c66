#include <atomic>
#include <cstdlib>
#include <string_view>

#include "qpat/simd/kernels.hpp"

namespace qpat::simd {

#if defined(QPAT_HAVE_AVX2)
const KernelTable* avx2_kernels_impl();
#endif
#if defined(QPAT_HAVE_NEON)
const KernelTable* neon_kernels_impl();
#endif

const KernelTable* vector_kernels() {
#if defined(QPAT_HAVE_AVX2)
  return avx2_kernels_impl();
#elif defined(QPAT_HAVE_NEON)
  return neon_kernels_impl();
#else
  return nullptr;
#endif
}

bool vector_kernels_usable() {
#if defined(QPAT_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#elif defined(QPAT_HAVE_NEON)
  return true;
#else
  return false;
#endif
}

namespace {

const KernelTable* choose() {
  const char* env = std::getenv("QPAT_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
  if (vector_kernels_usable()) return vector_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable*> g_override{nullptr};

}  // namespace

const KernelTable& active() {
  if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
  static const KernelTable* chosen = choose();
  return *chosen;
}

void set_active(const KernelTable* table) { g_override.store(table, std::memory_order_release); }

}  // namespace qpat::simd
