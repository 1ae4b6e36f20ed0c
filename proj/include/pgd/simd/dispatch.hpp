#pragma once

namespace pgd::simd {

enum class Level { scalar = 0, avx2 = 1 };

// Highest level supported by the CPU we are running on.
Level detected_level();

// Level in effect for kernel dispatch. Resolution order: explicit
// set_level() call, then the PGD_SIMD environment variable
// ("scalar" | "avx2"), then detected_level().
Level active_level();
void set_level(Level lvl);

const char* level_name(Level lvl);

} // namespace pgd::simd
