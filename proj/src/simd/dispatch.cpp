#include <atomic>
#include <cstdlib>
#include <string>

#include "cdrp/simd/dispatch.hpp"

namespace cdrp::simd {

#if CDRP_HAVE_AVX2
const KernelTable* avx2_kernels_compiled();
#endif

const KernelTable* avx2_kernels() {
#if CDRP_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2_kernels_compiled() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* auto_choice() {
  if (const char* env = std::getenv("CDRP_SIMD"); env && std::string(env) == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{auto_choice()};
  return slot;
}

}  // namespace

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
  const KernelTable* t = nullptr;
  if (name == "scalar") t = &scalar_kernels();
  else if (name == "avx2") t = avx2_kernels();
  else if (name == "auto") t = auto_choice();
  if (!t) return false;
  active_slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace cdrp::simd
