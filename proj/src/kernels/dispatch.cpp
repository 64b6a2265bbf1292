#include <cstdlib>
#include <cstring>

#include "sigcal/kernels/kernels.hpp"

namespace sigcal::kernels {

#if SIGCAL_WITH_AVX2
const KernelTable* avx2_impl();
#endif

const KernelTable* avx2_table() {
#if SIGCAL_WITH_AVX2 && (defined(__x86_64__) || defined(_M_X64))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? avx2_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* table = [] {
    const char* env = std::getenv("SIGCAL_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_table();
    const KernelTable* t = avx2_table();
    return t ? t : &scalar_table();
  }();
  return *table;
}

}  // namespace sigcal::kernels
