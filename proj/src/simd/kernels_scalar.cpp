#include <cmath>
#include <cstddef>

#include "pgd/simd/kernels.hpp"

// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against. Powers go through exp(e*log|x|) with an explicit zero
// branch instead of std::pow so the |x| -> 0 and negative-base cases are
// pinned down in one place.

namespace pgd::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double max_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

inline double pow_abs(double a, double e) {
  // a >= 0
  if (a == 0.0) return e == 0.0 ? 1.0 : 0.0;
  if (e == 1.0) return a;
  if (e == 2.0) return a * a;
  if (e == 0.5) return std::sqrt(a);
  return std::exp(e * std::log(a));
}

double pow_accum_scalar(const double* x, std::size_t n, double scale, double e) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += pow_abs(std::fabs(x[i]) * scale, e);
  return acc;
}

inline double signed_pow_one(double v, double e) {
  if (v == 0.0) return 0.0;
  const double mag = pow_abs(std::fabs(v), e);
  return v < 0.0 ? -mag : mag;
}

void signed_pow_scalar(const double* x, std::size_t n, double e, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = signed_pow_one(x[i], e);
}

double dual_step_scalar(const double* w, const double* g, std::size_t n,
                        double pm1, double inv_pm1, double eta, double* out) {
  double dual_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = signed_pow_one(w[i], pm1) - eta * g[i];
    const double az = std::fabs(z);
    if (az > dual_max) dual_max = az;
    out[i] = signed_pow_one(z, inv_pm1);
  }
  return dual_max;
}

} // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {
      "scalar",        dot_scalar,        axpy_scalar, max_abs_scalar,
      pow_accum_scalar, signed_pow_scalar, dual_step_scalar,
  };
  return k;
}

#ifdef PGD_NO_AVX2
const Kernels& avx2_kernels() { return scalar_kernels(); }
#endif

const Kernels& kernels_for(Level lvl) {
  if (lvl == Level::avx2 && detected_level() == Level::avx2) return avx2_kernels();
  return scalar_kernels();
}

const Kernels& kernels() { return kernels_for(active_level()); }

} // namespace pgd::simd
