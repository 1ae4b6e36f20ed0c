#include "pgd/simd/dispatch.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace pgd::simd {

Level detected_level() {
#if (defined(__x86_64__) || defined(_M_X64)) && !defined(PGD_NO_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return Level::avx2;
  }
#endif
  return Level::scalar;
}

namespace {

Level resolve_initial() {
  if (const char* env = std::getenv("PGD_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Level::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (detected_level() == Level::avx2) return Level::avx2;
      std::fprintf(stderr, "pgd: PGD_SIMD=avx2 requested but CPU lacks AVX2, using scalar\n");
      return Level::scalar;
    }
    std::fprintf(stderr, "pgd: ignoring unknown PGD_SIMD value '%s'\n", env);
  }
  return detected_level();
}

std::atomic<Level>& level_slot() {
  static std::atomic<Level> slot{resolve_initial()};
  return slot;
}

} // namespace

Level active_level() { return level_slot().load(std::memory_order_relaxed); }

void set_level(Level lvl) {
  if (lvl == Level::avx2 && detected_level() != Level::avx2) lvl = Level::scalar;
  level_slot().store(lvl, std::memory_order_relaxed);
}

const char* level_name(Level lvl) {
  switch (lvl) {
    case Level::scalar: return "scalar";
    case Level::avx2: return "avx2";
  }
  return "?";
}

} // namespace pgd::simd
