#include <atomic>

#include "igc/errors.hpp"
#include "igc/kernels.hpp"

namespace igc::kernels {

const Backend* avx2_backend_ptr();  // defined in kernels_avx2.cpp

namespace {
std::atomic<Dispatch> g_forced{Dispatch::Auto};

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_backend_ptr() == nullptr) return false;
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
}  // namespace

bool avx2_available() {
  static const bool available = detect_avx2();
  return available;
}

const Backend& avx2_backend() {
  if (!avx2_available()) throw ConfigError("avx2 backend unavailable on this CPU");
  return *avx2_backend_ptr();
}

void force(Dispatch d) {
  if (d == Dispatch::Avx2 && !avx2_available())
    throw ConfigError("avx2 backend unavailable on this CPU");
  g_forced.store(d, std::memory_order_relaxed);
}

const Backend& active() {
  switch (g_forced.load(std::memory_order_relaxed)) {
    case Dispatch::Scalar:
      return scalar_backend();
    case Dispatch::Avx2:
      return avx2_backend();
    case Dispatch::Auto:
      break;
  }
  return avx2_available() ? *avx2_backend_ptr() : scalar_backend();
}

}  // namespace igc::kernels
