#include "critdrift/simd.hpp"
#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

namespace critdrift::simd {
namespace {

bool detect_avx2() {
#if defined(CRITDRIFT_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool cpu_has_avx2() {
  static const bool has = detect_avx2();
  return has;
}

Backend initial_backend() {
  if (const char* env = std::getenv("CRITDRIFT_SIMD")) {
    if (std::string_view(env) == "scalar") return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

bool backend_available(Backend b) {
  return b == Backend::scalar || cpu_has_avx2();
}

const KernelTable& kernels(Backend b) {
  if (b == Backend::scalar) return kScalarTable;
#if defined(CRITDRIFT_HAVE_AVX2_TU)
  if (cpu_has_avx2()) return kAvx2Table;
#endif
  throw std::runtime_error("AVX2 kernels requested but not supported on this CPU");
}

const KernelTable& kernels() { return kernels(active().load(std::memory_order_relaxed)); }

void select_backend(Backend b) {
  if (!backend_available(b)) throw std::runtime_error("requested SIMD backend is unavailable");
  active().store(b, std::memory_order_relaxed);
}

Backend active_backend() { return active().load(std::memory_order_relaxed); }

}  // namespace critdrift::simd
