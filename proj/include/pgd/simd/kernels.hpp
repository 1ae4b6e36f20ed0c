#pragma once

#include <cstddef>

#include "pgd/simd/dispatch.hpp"

namespace pgd::simd {

// Data-parallel inner loops shared by the whole library. Every entry has a
// scalar reference implementation and (on x86) an AVX2 variant selected at
// runtime; the two are equivalence-tested against each other.
//
// Exponent conventions for the pow-based kernels: e == 1 is a pass-through,
// e == 2 multiplies, e == 0.5 takes a square root, anything else evaluates
// exp(e*log|x|) with an explicit zero branch. sign(0) == 0 throughout.
struct Kernels {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha*x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // max_i |x[i]|, 0 for empty input
  double (*max_abs)(const double* x, std::size_t n);

  // sum_i (|x[i]|*scale)^e
  double (*pow_accum)(const double* x, std::size_t n, double scale, double e);

  // out[i] = sign(x[i]) * |x[i]|^e
  void (*signed_pow)(const double* x, std::size_t n, double e, double* out);

  // Fused mirror-descent step in dual space:
  //   z[i]   = sign(w[i])|w[i]|^pm1 - eta*g[i]
  //   out[i] = sign(z[i])|z[i]|^inv_pm1
  // Returns max_i |z[i]| so callers can watch dual-space magnitudes.
  double (*dual_step)(const double* w, const double* g, std::size_t n,
                      double pm1, double inv_pm1, double eta, double* out);
};

const Kernels& scalar_kernels();
const Kernels& avx2_kernels();   // valid only when AVX2 is compiled in and supported

// Table for the currently active dispatch level.
const Kernels& kernels();
const Kernels& kernels_for(Level lvl);

} // namespace pgd::simd
