#include <cstdlib>
#include <string_view>

#include "spectral_homotopy/simd/kernels.hpp"

namespace spectral_homotopy::simd {

#if defined(SPECTRAL_HOMOTOPY_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(SPECTRAL_HOMOTOPY_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable* selected = [] {
    const char* env = std::getenv("SPECTRAL_HOMOTOPY_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* avx2 = avx2_kernels()) return avx2;
    return &scalar_kernels();
  }();
  return *selected;
}

}  // namespace spectral_homotopy::simd
