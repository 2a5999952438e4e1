#include <atomic>
#include <cstdio>
#include <cstdlib>

#include "pieapp/kernels/kernels.hpp"

namespace pieapp::kernels {

#ifdef PIEAPP_HAVE_AVX2
const Backend& avx2();  // kernels_avx2.cpp
#endif

namespace {

bool cpu_has_avx2() {
#if defined(PIEAPP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Backend* lookup(std::string_view name) {
  if (name == "scalar") return &scalar();
#ifdef PIEAPP_HAVE_AVX2
  if (name == "avx2" && cpu_has_avx2()) return &avx2();
#endif
  return nullptr;
}

const Backend* resolve_default() {
  if (const char* env = std::getenv("PIEAPP_KERNELS")) {
    if (const Backend* b = lookup(env)) return b;
    std::fprintf(stderr,
                 "pieapp: PIEAPP_KERNELS=%s unavailable, using scalar\n", env);
    return &scalar();
  }
  if (cpu_has_avx2()) {
#ifdef PIEAPP_HAVE_AVX2
    return &avx2();
#endif
  }
  return &scalar();
}

std::atomic<const Backend*>& slot() {
  static std::atomic<const Backend*> active{resolve_default()};
  return active;
}

}  // namespace

const Backend& active() { return *slot().load(std::memory_order_relaxed); }

bool set_active(std::string_view name) {
  if (const Backend* b = lookup(name)) {
    slot().store(b, std::memory_order_relaxed);
    return true;
  }
  return false;
}

std::vector<std::string> available() {
  std::vector<std::string> names{"scalar"};
  if (cpu_has_avx2()) names.emplace_back("avx2");
  return names;
}

}  // namespace pieapp::kernels
